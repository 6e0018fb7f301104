"""Sweep alpha toward 2 and tabulate the distance to the local limit.

Uses the library API directly: one row per alpha with the L2 distance
to the classical Neumann solution, the energy pairing gap, and the
boundary-collapse residual.  All three columns should shrink as alpha
approaches 2.
"""

import math
import sys

from nonlocal_cvp import alpha_sweep

# edit here
ALPHAS = (1.2, 1.5, 1.8, 1.95)
H0 = 0.125
R_TRUNC = 4.0


def phi(x):
    return math.exp(-4.0 * (x - 0.5) ** 2)


def f(x):
    return 8.0 / math.e


def main():
    rows = alpha_sweep(phi, f, alphas=ALPHAS, h0=H0, truncation_radius=R_TRUNC)
    header = f"{'alpha':>6} {'h':>9} {'l2_error':>12} {'energy_gap':>12} {'gg_residual':>12}"
    print(header)
    print("-" * len(header))
    for r in rows:
        print(
            f"{r['alpha']:>6.2f} {r['h']:>9.5f} {r['l2_error']:>12.6f} "
            f"{r['energy_gap']:>12.6f} {r['gauss_green_residual']:>12.6f}"
        )
    l2 = [r["l2_error"] for r in rows]
    trend = "decreasing" if all(a > b for a, b in zip(l2, l2[1:])) else "NOT decreasing"
    print(f"\nL2 column is {trend}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
