"""Regenerate the frozen double-well reference values.

Run from the repository root:  python3 tests/golden/generate_goldens.py

Eigenvalues and position matrix elements come from the 3-point solver
on a refined grid and are cross-checked against the independent 5-point
discretization; generation aborts if the stencils disagree beyond 1e-6.
Correlation series are eigensums over the frozen system.
"""

import json
from pathlib import Path

import numpy as np

from epac.exact import (
    GridSpec,
    exact_canonical_correlation,
    exact_correlation,
    solve_eigensystem,
    zero_temperature_correlation,
)
from epac.potentials import SystemParams, double_well

HERE = Path(__file__).parent
GRID = GridSpec(-8.0, 8.0, 64001)
# the banded 5-point solver scales ~n^2 in grid size, so the h^4
# discretization gets a coarser grid than the h^2 one; both sit below
# 1e-6 absolute error on the first eight states
CROSS_GRID_3PT = GridSpec(-8.0, 8.0, 40001)
CROSS_GRID_5PT = GridSpec(-8.0, 8.0, 8001)
N_STATES = 8


def main():
    pot = double_well()
    sys = SystemParams(beta=1.0)
    eig3c = solve_eigensystem(pot, sys, CROSS_GRID_3PT, N_STATES, stencil=3)
    eig5c = solve_eigensystem(pot, sys, CROSS_GRID_5PT, N_STATES, stencil=5)
    de = np.max(np.abs(eig3c.energies - eig5c.energies))
    dx = np.max(np.abs(np.abs(eig3c.q_elements) - np.abs(eig5c.q_elements)))
    assert de < 1.5e-6 and dx < 1e-6, (de, dx)

    eig3 = solve_eigensystem(pot, sys, GRID, N_STATES, stencil=3)
    big = solve_eigensystem(pot, sys, GRID, 45, stencil=3)
    t_exact = np.arange(0.0, 10.0001, 0.5)
    c1 = exact_correlation(big, 1.0, t_exact)
    t_can = np.arange(0.0, 15.0001, 0.5)
    c10 = exact_canonical_correlation(big, 10.0, t_can)
    zt = zero_temperature_correlation(big, t_can)

    payload = {
        "grid": {"q_min": GRID.q_min, "q_max": GRID.q_max, "n_points": GRID.n_points},
        "stencil_energy_disagreement": float(de),
        "stencil_element_disagreement": float(dx),
        "energies": [float(e) for e in eig3.energies],
        "abs_q_elements": [[float(abs(x)) for x in row] for row in eig3.q_elements],
        "series": {
            "exact_beta1": {
                "times": list(t_exact),
                "re": [float(v.real) for v in c1.values],
                "im": [float(v.imag) for v in c1.values],
            },
            "canonical_beta10": {
                "times": list(t_can),
                "re": [float(v.real) for v in c10.values],
                "im": [float(v.imag) for v in c10.values],
            },
            "zero_temperature": {
                "times": list(t_can),
                "re": [float(v.real) for v in zt.values],
                "im": [float(v.imag) for v in zt.values],
            },
        },
    }
    out = HERE / "double_well_reference.json"
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    print(f"wrote {out}; stencil disagreement E {de:.2e}, |x| {dx:.2e}")


if __name__ == "__main__":
    main()
