"""Run every CLI experiment at acceptance size into one output directory.

    python3 scripts/run_all.py --out runs/acceptance [--quick]

--quick shrinks ensembles and horizons for a smoke run (gates may then be
underpowered).  Exit status is the worst exit status of the sub-commands.
"""

import argparse
import sys
import time
from pathlib import Path

from galerkin_ns import cli

ROOT = Path(__file__).resolve().parents[1]

FULL = [
    ["check-coefficients", "--N", "16"],
    ["check-conservation", "--N", "16", "--M", "100"],
    ["moment-test", "--N", "8", "--M", "100000", "--n", "3"],
    ["bnorm-test", "--N", "8", "--M", "10000"],
    ["series-bound", "--kmax", "64", "--R", "256"],
    ["invariance-test", "--mode", "linear-only", "--dt", "1/100", "--M", "1000"],
    ["invariance-test", "--mode", "full", "--dt", "1/1000", "--M", "1000"],
    ["contraction-test", "--N", "8"],
    ["uniqueness-divergence", "--T", "1/2", "--dt", "1/4000", "--stride", "20", "--seeds", "5"],
    ["sample", "--N", "8", "--seed", "7"],
    ["simulate", "--N", "8", "--T", "1", "--dt", "1/1000", "--stride", "10"],
]

QUICK = {
    "moment-test": ["--M", "10000"],
    "bnorm-test": ["--M", "500"],
    "invariance-test": ["--M", "200", "--T", "1/10"],
    "uniqueness-divergence": ["--T", "1/20", "--seeds", "2"],
    "simulate": ["--T", "1/10"],
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT / "runs" / "acceptance")
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args(argv)
    worst = 0
    for cmd in FULL:
        sub = args.out / "_".join(a.strip("-").replace("/", "_") for a in cmd[:3])
        sub.mkdir(parents=True, exist_ok=True)
        extra = QUICK.get(cmd[0], []) if args.quick else []
        t0 = time.perf_counter()
        code = cli.main(cmd + extra + ["--config", str(ROOT / "configs" / "acceptance.cfg"), "--output-dir", str(sub)])
        print(f"--> {' '.join(cmd + extra)}: exit {code} ({time.perf_counter() - t0:.0f} s)\n", flush=True)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
