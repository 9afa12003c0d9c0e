"""Newton iteration counts for phi_std + d(a sigma) on a flat torus grid, swept over a.

Failures (lost positivity, no convergence) are reported as rows, never skipped.

    python3 scripts/amplitude_sweep.py --amplitudes 0.01 0.02 0.05 0.1 0.3 1 --out sweep.csv
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from g2cy.g2 import standard_phi_form
from g2cy.grid import GridForm, GridSpec
from g2cy.torsion import (NotConvergedError, PositivityError, SolveOptions, positivity, random_exact_direction,
                          remove_torsion)


def sweep(amplitudes, points=8, modes=2, seed=0, tol=1e-10):
    spec = GridSpec((2 * np.pi,) * 7, (1, points, points, 1, 1, 1, points))
    base = GridForm.constant(spec, standard_phi_form().to_float())
    ds = random_exact_direction(np.random.default_rng(seed), spec, modes=modes)
    ds = ds * (1.0 / np.max(np.abs(ds.data)))  # unit sup-norm direction
    rows = []
    for a in amplitudes:
        phi = base + ds * a
        margin, _ = positivity(phi.data)
        row = {"amplitude": a, "min_metric_eig": margin, "status": "", "iterations": "", "residual": "",
               "full_residual": ""}
        try:
            _, st = remove_torsion(phi, SolveOptions(tol=tol))
            row.update(status="converged", iterations=st.iterations, residual=f"{st.residual:.3e}",
                       full_residual=f"{st.history[-1].full_residual:.3e}")
        except PositivityError as err:
            row["status"] = f"positivity: {err}"
        except NotConvergedError as err:
            row["status"] = f"not converged: {err}"
        rows.append(row)
    return rows


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--amplitudes", type=float, nargs="+", default=[0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.3, 1.0])
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--modes", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    args = p.parse_args(argv)
    rows = sweep(args.amplitudes, args.points, args.modes, args.seed)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    if args.out:
        fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
