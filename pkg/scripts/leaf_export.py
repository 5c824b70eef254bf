"""Export the leaf families of scenario R to CSV, one file per leaf.

usage: python3 scripts/leaf_export.py [--per-case 5] [--out leaves/]
"""
import argparse
from pathlib import Path

import numpy as np

from rkfol import io
from rkfol.leaves import annulus_leaf, leaf_table, solve_leaf
from rkfol.stack import FOUR_PI, SCENARIO_APPENDIX, SCENARIO_R, TWO_PI, build_stack


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--per-case", type=int, default=5)
    ap.add_argument("--out", type=Path, default=Path("leaves"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    model = build_stack(SCENARIO_R)
    lam1, lam3 = model.lam1, SCENARIO_R.lam3
    k = args.per_case
    frac = (np.arange(k) + 0.5) / k
    jobs = [("plane_x2_0", lam1 + frac * (lam3 - lam1)),
            ("plane_x2_0", lam3 + frac * (model.lambda_max(0.0) - lam3)),
            ("plane_x2_2pi", lam1 + frac * (lam3 - lam1)),
            ("cyl_y2_L3", TWO_PI * (1 - frac) + 1e-3),
            ("cyl_y2_L3_mirror", TWO_PI + TWO_PI * frac - 1e-3)]
    index = []
    for case, inits in jobs:
        for v in inits:
            leaf = solve_leaf(model, case, float(v), n=1024)
            name = f"{case}_{len(index):03d}.csv"
            io.write_csv(args.out / name, ["s", "a", "x2", "y2", "r"], leaf_table(leaf))
            index.append({"file": name, **leaf.sidecar()})
    app = build_stack(SCENARIO_APPENDIX)
    for th in TWO_PI * np.arange(k) / k:
        leaf = annulus_leaf(app, float(th), n=1024)
        name = f"annulus_{len(index):03d}.csv"
        io.write_csv(args.out / name, ["s", "a", "x2", "y2", "r"], leaf_table(leaf))
        index.append({"file": name, **leaf.sidecar()})
    io.write_json(args.out / "index.json", index)
    print(f"{len(index)} leaves written to {args.out}")


if __name__ == "__main__":
    main()
