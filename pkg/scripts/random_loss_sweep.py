"""Random per-mode loss sweep: summary table plus spread and dominance checks.

    python3 scripts/random_loss_sweep.py --instances 100000 --pin-reference 0.4
"""
import argparse

import numpy as np

from noonbound.montecarlo import SweepConfig, corner_values, relative_spread, run_sweep


def report(cfg: SweepConfig) -> None:
    res = run_sweep(cfg)
    corners = corner_values(cfg)
    print(f"{cfg.n_instances} instances, N={cfg.N}, d={cfg.d}, gamma in [{cfg.gamma_min}, {cfg.gamma_max}]"
          + ("" if cfg.pin_reference is None else f", gamma_0 = {cfg.pin_reference}"))
    print(f"{'series':16s} {'min':>9s} {'mean':>9s} {'max':>9s} {'skew':>7s} {'spread':>7s} {'corners':>20s}")
    for name, s in res.summary().items():
        lo, hi = corners[name]
        print(f"{name:16s} {s['min']:9.3f} {s['mean']:9.3f} {s['max']:9.3f} {s['skewness']:7.3f} "
              f"{relative_spread(res.series(name)):7.3f}   [{lo:.2f}, {hi:.2f}]")
    gain = 1 - res.qcrb_optimal / res.qcrb_humphreys
    print(f"optimal vs Humphreys weights: mean gain {gain.mean():.4f}, max gain {gain.max():.4f}, "
          f"dominance holds on every row: {bool(np.all(gain >= 0))}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=10_000)
    ap.add_argument("--gamma-min", type=float, default=0.2)
    ap.add_argument("--gamma-max", type=float, default=0.6)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--pin-reference", type=float)
    a = ap.parse_args()
    report(SweepConfig(a.instances, a.gamma_min, a.gamma_max, a.n, a.d, a.seed, a.pin_reference))
