"""Gaussian packet on the imaginary barrier V = 5i on [0, 2].

    python3 scripts/packet_amplification.py [--out-dir runs/packet]

x0 = -10, p0 = 5.23, b = 0.08.  For m = 1 and m = 0.5 prints the reflected and
transmitted lump heights at t = 5 relative to the initial peak (in |psi| and
in |psi|^2) and the number of local maxima of |psi| inside the barrier at t = 2.
"""
import argparse
from pathlib import Path

import numpy as np

from nhqm import PhysicalParams, single_barrier
from nhqm.errors import NotSeparatedError
from nhqm.io import write_csv
from nhqm.scattering import resonance_scan
from nhqm.wavepacket import (GaussianPacket, amplification_factors, interior_local_maxima,
                             propagate_direct)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir")
    args = ap.parse_args()
    pot = single_barrier(5, 2)
    pk = GaussianPacket(-10, 5.23, 0.08)
    for m in (1.0, 0.5):
        params = PhysicalParams(m)
        near = min(resonance_scan(pot, params, 1, 60), key=lambda p: abs(p.energy - 5.23 ** 2 / (2 * m)))
        print(f"m = {m}: E0 = {5.23 ** 2 / (2 * m):.3f}, nearest |t|^2 peak at "
              f"E = {near.energy:.3f} (k = {np.sqrt(2 * m * near.energy):.3f})")
        fields = propagate_direct(pk, pot, params, [0.0, 2.0, 5.0])
        print(f"  interior maxima of |psi| at t=2: {interior_local_maxima(fields[1], (0, 2))}")
        for q in ("amplitude", "density"):
            try:
                t, r = amplification_factors(fields[2], (0, 2), pk.peak_amplitude, q)
                print(f"  {q:9s} factors at t=5: transmitted {t:.2f}, reflected {r:.2f}")
            except NotSeparatedError as exc:
                print(f"  {q:9s}: {exc}")
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            for f in fields:
                v = f.values
                write_csv(out / f"m{m:g}_t{f.time:g}.csv", ("x", "RePsi", "ImPsi", "AbsPsi2"),
                          zip(f.grid, v.real, v.imag, np.abs(v) ** 2))


if __name__ == "__main__":
    main()
