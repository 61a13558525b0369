#!/usr/bin/env python3
"""Cross-check the analytic covariance and spectrum against Monte-Carlo simulation.

Runs ``ringcavity mc-check`` at full statistics (10^4 trajectories for the
covariance, five random (omega, theta) points for the output spectrum), then
repeats it with a corrupted drift matrix to show the check can fail.
"""
import sys

from ringcavity.cli import EXIT_CHECK, EXIT_OK, main


def run() -> int:
    out = sys.argv[1] if len(sys.argv) > 1 else "results/mc"
    ok = main(["mc-check", "--out", out, "--threads", "4"])
    fault = main(["mc-check", "--out", f"{out}_fault", "--threads", "4", "--spectrum-points", "0",
                  "--n-traj", "500", "--inject-fault", "drift"])
    print(f"clean run exit {ok} (want {EXIT_OK}); injected fault exit {fault} (want {EXIT_CHECK})",
          file=sys.stderr)
    return 0 if (ok == EXIT_OK and fault == EXIT_CHECK) else 1


if __name__ == "__main__":
    sys.exit(run())
