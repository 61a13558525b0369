"""TOML run configuration.

Top-level keys are the fields of :class:`PhysicalParams` (cyclic Hz, SI).
Optional tables:

``[constants]``      override physical constants.
``[working_point]``  ``modified_detuning`` (Hz) or ``modified_detuning_ratio``
                     (units of the mirror frequency), and ``branch``.

``base = "<preset>"`` fills unspecified keys from a named preset; without it
every physics key must be present.  Unknown keys are always an error.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .params import Constants, PhysicalParams, TWO_PI, physical_fields
from .presets import PRESETS

OPTIONAL_KEYS = {"gtilde_override"}
WORKING_POINT_KEYS = {"modified_detuning", "modified_detuning_ratio", "branch"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorkingPoint:
    modified_detuning: float | None = None        # Hz
    modified_detuning_ratio: float | None = None  # units of omega_phi
    branch: int | None = None

    def delta_prime(self, p: PhysicalParams) -> float | None:
        """Requested modified detuning in rad/s, or None."""
        if self.modified_detuning is not None:
            return TWO_PI * self.modified_detuning
        if self.modified_detuning_ratio is not None:
            return self.modified_detuning_ratio * TWO_PI * p.mirror_freq
        return None


@dataclass(frozen=True)
class RunConfig:
    params: PhysicalParams
    working_point: WorkingPoint = WorkingPoint()
    source: str = "<defaults>"


def _number(key: str, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"key {key!r} must be a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"key {key!r} must be finite, got {v!r}")
    return float(v)


def parse_config(data: dict, base: PhysicalParams | None = None, source: str = "<dict>") -> RunConfig:
    data = dict(data)
    preset = data.pop("base", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown base preset {preset!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[preset]
    const_tbl = data.pop("constants", {})
    wp_tbl = data.pop("working_point", {})
    known = set(physical_fields())
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    if base is None:
        missing = [k for k in physical_fields() if k not in data and k not in OPTIONAL_KEYS]
        if missing:
            raise ConfigError(f"missing key: {missing[0]}" + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else ""))
        base = PhysicalParams()
    changes = {}
    for k, v in data.items():
        changes[k] = None if (k == "gtilde_override" and v is None) else _number(k, v)

    if not isinstance(const_tbl, dict):
        raise ConfigError("[constants] must be a table")
    const_names = {f.name for f in fields(Constants)}
    bad = sorted(set(const_tbl) - const_names)
    if bad:
        raise ConfigError(f"unknown key(s) in [constants]: {', '.join(bad)}")
    if const_tbl:
        cur = base.constants
        changes["constants"] = Constants(**{
            f.name: _number(f"constants.{f.name}", const_tbl.get(f.name, getattr(cur, f.name)))
            for f in fields(Constants)
        })

    if not isinstance(wp_tbl, dict):
        raise ConfigError("[working_point] must be a table")
    bad = sorted(set(wp_tbl) - WORKING_POINT_KEYS)
    if bad:
        raise ConfigError(f"unknown key(s) in [working_point]: {', '.join(bad)}")
    if "modified_detuning" in wp_tbl and "modified_detuning_ratio" in wp_tbl:
        raise ConfigError("give modified_detuning or modified_detuning_ratio, not both")
    branch = wp_tbl.get("branch")
    if branch is not None and (isinstance(branch, bool) or not isinstance(branch, int) or branch < 0):
        raise ConfigError(f"branch must be a nonnegative integer, got {branch!r}")
    wp = WorkingPoint(
        modified_detuning=_number("modified_detuning", wp_tbl["modified_detuning"]) if "modified_detuning" in wp_tbl else None,
        modified_detuning_ratio=_number("modified_detuning_ratio", wp_tbl["modified_detuning_ratio"]) if "modified_detuning_ratio" in wp_tbl else None,
        branch=branch,
    )
    return RunConfig(base.replace(**changes), wp, source)


def load_config(path: str | Path, base: PhysicalParams | None = None) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(data, base, str(path))


def dump_params(p: PhysicalParams) -> str:
    """Full TOML text for a parameter set (round-trips through :func:`parse_config`)."""
    lines = []
    for name in physical_fields():
        v = getattr(p, name)
        if v is None:
            continue
        lines.append(f"{name} = {float(v)!r}")
    lines.append("")
    lines.append("[constants]")
    for f in fields(Constants):
        lines.append(f"{f.name} = {getattr(p.constants, f.name)!r}")
    return "\n".join(lines) + "\n"
