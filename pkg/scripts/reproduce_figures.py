"""Write every figure data grid into one directory (default: ./figures).

Each figure lands in its own subdirectory with a manifest.json, so any of them
can be regenerated with ``noonbound replay``. The mesh optimisation grid is the
slow one; pass --restarts to trade accuracy for time.
"""
import argparse
import sys
import time
from pathlib import Path

from noonbound.cli import main

RUNS = {
    "fig2": ["figure", "fig2", "--points", "19"],
    "fig3_reference": ["figure", "fig3", "--gamma-ref", "0.5"],
    "fig3_equal": ["figure", "fig3", "--gamma-ref", "equal"],
    "fig4": ["figure", "fig4", "--max-n", "6", "--max-d", "6"],
    "fig6_d2": ["figure", "fig6", "--d", "2"],
    "fig6_d3": ["figure", "fig6", "--d", "3"],
    "fig7": ["figure", "fig7", "--instances", "10000"],
}


def run(out: Path, restarts: int, only: list[str]) -> int:
    for name, argv in RUNS.items():
        if only and name not in only:
            continue
        argv = list(argv)
        if argv[1] == "fig6":
            argv += ["--restarts", str(restarts)]
        t0 = time.perf_counter()
        code = main(argv + ["--out", str(out / name)])
        print(f"{name}: exit {code} in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
        if code:
            return code
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("figures"))
    ap.add_argument("--restarts", type=int, default=32)
    ap.add_argument("--only", nargs="*", default=[], choices=sorted(RUNS))
    args = ap.parse_args()
    sys.exit(run(args.out, args.restarts, args.only))
