"""Probe solvability across the gamma threshold.

For complement data decaying like (1 + |y|)^(-1-gamma), the Neumann
problem admits a variational solution only while the data stays
integrable against the complement weight.  Below the threshold the
discrete V-norms settle; above it they grow without bound as the
truncation radius is pushed out.
"""

import sys

from nonlocal_cvp import nonexistence_probe

# edit here
ALPHA = 1.0
GAMMAS = (0.3, 0.8)


def main():
    for gamma in GAMMAS:
        rep = nonexistence_probe(ALPHA, gamma)
        print(f"alpha = {ALPHA}, gamma = {gamma}")
        print(f"  admissible band {rep['admissible_band']}, "
              f"divergence band {rep['divergence_band']}")
        print(f"  {'h':>9} {'R_trunc':>9} {'n_dofs':>7} {'v_norm':>12}")
        for rung in rep["rungs"]:
            print(
                f"  {rung['h']:>9.5f} {rung['R_trunc']:>9.1f} "
                f"{rung['n_dofs']:>7d} {rung['v_norm']:>12.6f}"
            )
        ratios = ", ".join(f"{r:.3f}" for r in rep["growth_ratios"])
        print(f"  growth ratios: {ratios}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
