"""Transmission resonances of the imaginary barrier V = 40i on [0, 2].

    python3 scripts/resonance_peaks.py [--out peaks.csv]

Prints every |t|^2 peak in [150, 400] for m = 1 and m = 0.5 together with
the index n = a Re k' / pi.
"""
import argparse

from nhqm import PhysicalParams, single_barrier
from nhqm.io import write_csv
from nhqm.scattering import resonance_scan


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out")
    args = ap.parse_args()
    rows = []
    for m in (1.0, 0.5):
        peaks = resonance_scan(single_barrier(40, 2), PhysicalParams(m), 150, 400)
        print(f"m = {m}")
        print(f"{'E':>12} {'|t|^2':>14} {'n':>8}")
        for p in peaks:
            print(f"{p.energy:12.3f} {p.peak_T2:14.2f} {p.n_index:8.3f}")
            rows.append((m, p.energy, p.peak_T2, p.n_index))
    if args.out:
        write_csv(args.out, ("m", "E", "T2", "n_index"), rows)


if __name__ == "__main__":
    main()
