"""Crossing counts and return-map checks on the direct disc family over several (c, E0).

usage: python3 scripts/return_map_table.py [--lmax 16]
"""
import argparse

from rkfol.foliation import (WindowError, crossing_table, disc_leaf, fixed_points,
                             return_map_agreement)

LEVELS = [(-2.0, -0.1), (-1.8, -0.1), (-2.5, -0.05), (-3.0, -0.03)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lmax", type=int, default=16)
    ap.add_argument("--samples", type=int, default=100)
    args = ap.parse_args()
    for c, E0 in LEVELS:
        try:
            disc = disc_leaf(c, E0)
        except WindowError as exc:
            print(f"c={c:5.2f} E0={E0:5.2f}: {exc}")
            continue
        margin, _ = disc.transversality()
        fp = fixed_points(c, E0)
        table = crossing_table(c, E0, lmax=args.lmax)
        bad = [t for t in table if t.integrated != t.closed_form]
        agree = return_map_agreement(c, E0, n=args.samples)
        print(f"c={c:5.2f} E0={E0:5.2f}  |x2'| >= {margin:.4f}  fixed points {len(fp)}  "
              f"tori {len(table)} (mismatch {len(bad)})  min crossings "
              f"{min((t.closed_form for t in table), default=0)}  agreement {agree:.2e}")


if __name__ == "__main__":
    main()
