"""Onset of |t| > 1 for the gain/loss pair +iV0 | -iV0 on a real background U0.

    python3 scripts/threshold_study.py [--u0 50] [--a 1] [--m 0.5]

Compares the zero-energy ratio criterion with a direct search on max_E |t|,
and shows that max|t| - 1 grows like V0^2 from zero, so the transmission
threshold is set by the tolerance, not by the physics.
"""
import argparse

import numpy as np

from nhqm import PhysicalParams, build_pt_unit_cell
from nhqm.errors import NumericalError
from nhqm.scattering import (common_ratio_log_magnitude, critical_strength, max_transmission,
                             threshold_by_transmission)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--u0", type=float, default=50.0)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--m", type=float, default=0.5)
    args = ap.parse_args()
    params = PhysicalParams(args.m)

    for V0 in (1e-12, 1e-6, 1e-3, 1.0, args.u0):
        lr = common_ratio_log_magnitude(V0, args.u0, args.a, 0.0, params)
        print(f"log|r1 r2 exp(2ik'a)| at E=0, V0={V0:g}: {lr:.4f}")
    try:
        print(f"critical_strength: {critical_strength(args.u0, args.a, params):.6g}")
    except NumericalError as exc:
        print(f"critical_strength: {type(exc).__name__}: {exc}")

    print(f"\n{'V0':>10} {'max|t|-1':>12} {'/V0^2':>10} {'at E':>10}")
    for V0 in np.geomspace(1e-4, 1e-1, 7):
        t, E = max_transmission(build_pt_unit_cell(V0, args.a, args.u0), params,
                                args.u0 / 400, 10 * args.u0)
        print(f"{V0:10.3g} {t - 1:12.4g} {(t - 1) / V0 ** 2:10.4f} {E:10.3f}")

    print(f"\n{'margin':>10} {'threshold':>12}")
    for margin in (1e-12, 1e-10, 1e-8, 1e-6):
        th = threshold_by_transmission(args.u0, args.a, params, margin=margin)
        print(f"{margin:10.0e} {th:12.4g}")


if __name__ == "__main__":
    main()
