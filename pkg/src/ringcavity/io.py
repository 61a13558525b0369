"""CSV, gnuplot-script and run-manifest writers."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .params import PhysicalParams, fingerprint


def run_hash(p: PhysicalParams, command: str, options: dict | None = None) -> str:
    """Hash over every physics input plus the command and its options."""
    blob = json.dumps({"params": fingerprint(p), "command": command, "options": options or {}},
                      sort_keys=True, default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path: Path, columns: list[str], rows, *, manifest_hash: str, comments: list[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# manifest_hash: {manifest_hash}\n")
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path: Path) -> tuple[dict, list[str], list[list[float]]]:
    """(comment dict, columns, numeric rows) of a file written by :func:`write_csv`."""
    meta, rows, cols = {}, [], None
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                if ":" in line:
                    k, v = line[1:].split(":", 1)
                    meta[k.strip()] = v.strip()
                continue
            if cols is None:
                cols = line.split(",")
                continue
            rows.append([float(x) for x in line.split(",")])
    return meta, cols or [], rows


@dataclass
class PlotSpec:
    title: str
    xlabel: str
    ylabel: str
    series: list[tuple[str, str]]  # (using-expression, legend title)
    logscale_y: bool = False
    extra: list[str] = field(default_factory=list)


def write_gnuplot(path: Path, csv_name: str, spec: PlotSpec) -> Path:
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
        f"set title {json.dumps(spec.title)}",
        f"set xlabel {json.dumps(spec.xlabel)}",
        f"set ylabel {json.dumps(spec.ylabel)}",
        "set terminal pngcairo size 900,600",
        f"set output '{Path(csv_name).stem}.png'",
    ]
    if spec.logscale_y:
        lines.append("set logscale y")
    lines += spec.extra
    if spec.series:
        parts = [f"'{csv_name}' every ::1 using {u} with lines title {json.dumps(t)}" for u, t in spec.series]
        lines.append("plot " + ", \\\n     ".join(parts))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@dataclass
class RunManifest:
    config_hash: str
    command: str
    outputs: list[str]
    code_version: str = __version__
    wall_time_s: float = 0.0
    failures: list[dict] = field(default_factory=list)
    options: dict = field(default_factory=dict)

    def write(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=repr) + "\n", encoding="utf-8")
        return path
