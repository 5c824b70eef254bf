"""Conley-Zehnder indices of torus orbits over a grid of rational loop periods.

usage: python3 scripts/torus_cz_survey.py [--pmax 7] [--qmax 4] [--out survey.csv]
"""
import argparse

import numpy as np

from rkfol import io
from rkfol.cz import orbit_index
from rkfol.periodic import period_range, rational_ratios, torus_orbits
from rkfol.stack import SCENARIO_R, TWO_PI, build_stack


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pmax", type=int, default=7)
    ap.add_argument("--qmax", type=int, default=4)
    ap.add_argument("--phases", type=int, default=2)
    ap.add_argument("--out", default="torus_cz_survey.csv")
    args = ap.parse_args()

    model = build_stack(SCENARIO_R)
    specs = []
    for fam in ("inner", "outer"):
        lo, hi = (t / TWO_PI for t in period_range(model, fam))
        for r in rational_ratios(lo, hi, args.pmax, args.qmax):
            for ph in TWO_PI * np.arange(args.phases) / args.phases:
                specs.append((r, fam, ph))
    rows = []
    for (r, fam, ph), orb in zip(specs, torus_orbits(model, specs, n=1025)):
        mu, iv = orbit_index(model, orb, n_init=48)
        rows.append([fam, str(r), ph, orb.meta["h"], orb.period_H, iv.lo, iv.hi, mu])
        print(f"{fam:5s} {str(r):>5s} phase {ph:5.3f}  mu = {mu:3d}  I = [{iv.lo:.6f}, {iv.hi:.6f}]")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("family,ratio,phase,h,period,lo,hi,cz\n")
        for row in rows:
            fh.write(",".join(x if isinstance(x, str) else io.fmt(x) for x in row) + "\n")
    print(f"min index {min(r[-1] for r in rows)} over {len(rows)} orbits -> {args.out}")


if __name__ == "__main__":
    main()
