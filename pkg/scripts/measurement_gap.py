"""How close photon counting gets to the QCRB as signal loss grows.

For each signal loss value prints the QCRB, the best counting CRB with the
QCRB-optimal state, the best joint CRB and the coherent-state SQL.
"""
import argparse

import numpy as np

from noonbound import bounds
from noonbound.core import LossProfile, Scenario
from noonbound.optimize import optimize_joint, optimize_mesh_for_state


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--gamma-ref", type=float, default=0.5)
    ap.add_argument("--gammas", type=float, nargs="*", default=list(np.round(np.arange(0, 0.45, 0.1), 2)))
    ap.add_argument("--restarts", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    print(f"{'gamma':>6s} {'QCRB':>9s} {'mesh-only':>10s} {'joint':>9s} {'SQL':>9s} {'joint/QCRB':>11s}")
    for g in a.gammas:
        s = Scenario(a.n, a.d, LossProfile.split(a.gamma_ref, g, a.d))
        q = bounds.min_qcrb_noon(s)
        mesh = optimize_mesh_for_state(s, bounds.optimal_weights(s), a.restarts, a.seed)
        joint = optimize_joint(s, a.restarts, a.seed)
        print(f"{g:6.2f} {q:9.4f} {mesh.best_crb:10.4f} {joint.best_crb:9.4f} {bounds.sql_coherent(s):9.4f} "
              f"{joint.best_crb / q:11.4f}")


if __name__ == "__main__":
    main()
