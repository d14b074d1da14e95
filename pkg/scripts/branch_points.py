"""Branch points of the gain/loss lattice (cell +5i on [0,1], -5i on [1,2], m = 1).

    python3 scripts/branch_points.py

Branch points are stationary points of F(E) = cos(kd + theta)/|T| inside
[-1, 1].  For comparison the second table lists where the phase alone hits
kd + theta = n pi (odd n), i.e. where the numerator of F is stationary.
The two agree closely except at the first point, where |T| varies fastest.
"""
import math

import numpy as np
from scipy.optimize import brentq

from nhqm import PhysicalParams, build_pt_unit_cell
from nhqm.bloch import cell_amplitudes, find_branch_points


def phase_locked(cell, params, E_max=110.0, n=20000):
    d = cell.width
    E = np.linspace(0.05, E_max, n)
    T = cell_amplitudes(cell, E, params)[0]
    g = np.sqrt(2 * params.mass * E) * d + np.unwrap(np.angle(T))
    out = []
    for j in range(1, int(g.max() / math.pi) + 1, 2):
        i = np.nonzero((g[:-1] - j * math.pi) * (g[1:] - j * math.pi) <= 0)[0]
        if i.size == 0:
            continue
        lo, hi = E[i[0]], E[i[0] + 1]
        T_lo = cell_amplitudes(cell, lo, params)[0]
        theta_lo = g[i[0]] - math.sqrt(2 * params.mass * lo) * d  # unwrapped arg T at lo

        def phase(e):
            T = cell_amplitudes(cell, e, params)[0]
            return (math.sqrt(2 * params.mass * e) * d + theta_lo
                    + np.angle(T / T_lo) - j * math.pi)

        e = brentq(phase, lo, hi, xtol=1e-12)
        T = cell_amplitudes(cell, e, params)[0]
        out.append((j, e, abs(T), (d / 2) * math.sqrt(2 * params.mass * e) / math.pi))
    return out


def main():
    params = PhysicalParams(1.0)
    cell = build_pt_unit_cell(5, 1)
    print("branch points")
    print(f"{'E':>10} {'|T|':>8} {'theta':>8} {'n+1/2':>8} {'K*':>8}")
    for b in find_branch_points(cell, params, (0.01, 110)):
        print(f"{b.energy:10.4f} {b.absT:8.4f} {b.theta:8.4f} {b.n_half:8.4f} {b.K_star:8.4f}")
    print("\nphase condition kd + theta = n pi")
    print(f"{'n':>3} {'E':>10} {'|T|':>8} {'n+1/2':>8}")
    for j, e, t, nh in phase_locked(cell, params):
        print(f"{j:3d} {e:10.4f} {t:8.4f} {nh:8.4f}")


if __name__ == "__main__":
    main()
