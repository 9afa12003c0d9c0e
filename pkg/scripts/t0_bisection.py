"""Empirical T0 for a gluing config: bisect on neck length T for pipeline success.

A run succeeds when glue_and_solve returns an ok report (positivity kept, solver
converged, SU(3) validation and class checks passed). Success is assumed monotone
in T between the bracket ends, which are checked first. Lowering --neck-points
speeds this up but also moves the class checks toward their tolerance, so the
estimate is per resolution.

    python3 scripts/t0_bisection.py --config perturbed --lo 3 --hi 5 --steps 6
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from g2cy.cli import _resolve_config
from g2cy.gluing import GluingConfig, parse_config
from g2cy.torsion import glue_and_solve


def attempt(base: dict, T: Fraction, neck_points: int | None) -> tuple[bool, str]:
    d = dict(base, T=str(T))
    if neck_points:
        d["neck_points"] = neck_points
    try:
        rep = glue_and_solve(parse_config(d))
    except Exception as err:  # every failure mode counts as "T too small"
        return False, f"{type(err).__name__}: {err}"
    st = rep.state
    return rep.ok, f"iterations {st.iterations}, residual {st.residual:.2e}, ok {rep.ok}"


def bisect(base: dict, lo: Fraction, hi: Fraction, steps: int, neck_points=None, log=print):
    ok_hi, msg = attempt(base, hi, neck_points)
    log(f"T={float(hi):.4f} {'ok' if ok_hi else 'FAIL'} {msg}")
    if not ok_hi:
        return None, lo, hi
    ok_lo, msg = attempt(base, lo, neck_points)
    log(f"T={float(lo):.4f} {'ok' if ok_lo else 'FAIL'} {msg}")
    if ok_lo:
        return lo, lo, hi
    for _ in range(steps):
        mid = (lo + hi) / 2
        ok, msg = attempt(base, mid, neck_points)
        log(f"T={float(mid):.4f} {'ok' if ok else 'FAIL'} {msg}")
        lo, hi = (lo, mid) if ok else (mid, hi)
    return hi, lo, hi


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default="perturbed")
    p.add_argument("--lo", type=Fraction, default=Fraction(3))
    p.add_argument("--hi", type=Fraction, default=Fraction(5))
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--neck-points", type=int, default=None, help="override the config resolution")
    args = p.parse_args(argv)
    base = GluingConfig.load(_resolve_config(args.config)).to_json()
    t0, lo, hi = bisect(base, args.lo, args.hi, args.steps, args.neck_points)
    print(json.dumps({"T0_upper_bound": None if t0 is None else float(t0), "bracket": [float(lo), float(hi)]}))
    return 0 if t0 is not None else 1


if __name__ == "__main__":
    sys.exit(main())
