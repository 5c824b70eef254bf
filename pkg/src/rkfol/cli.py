"""Command line front end: rkfol <command> [options].

Every command writes deterministic JSON/CSV (17 significant digits, LF line
endings) into --out, or prints JSON to stdout with --json. A configuration
that violates one of the stack inequalities exits with status 2, names the
inequality and leaves no partial output behind.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import io
from .contact import assemble_liouville, involution_suite, reeb_period, transversality_scan
from .coords import DomainError, poincare_array, poincare_inverse_array, retrograde_array
from .coords import retrograde_inverse_array, wrap_diff
from .cz import orbit_index
from .foliation import (WindowError, assemble_report, crossing_table, disc_leaf, fixed_points,
                        window)
from .leaves import CASES, LeafError, annulus_leaf, leaf_table, solve_leaf
from .orbits import circular_orbits, hill_radii, tori_on_level, torus_on_level
from .periodic import binding_orbit
from .stack import FOUR_PI, TWO_PI, ParameterError, build_stack, sign_certificates
from .verify import run_suite, suite_report

CONFIG_ERRORS = (ParameterError, WindowError, DomainError, LeafError, ValueError)


class Outputs:
    """Tracks files written by a command so that a failure can remove them."""

    def __init__(self, out: Path | None):
        self.out = out
        self.paths: list[Path] = []

    def path(self, name) -> Path:
        p = self.out / name
        self.paths.append(p)
        return p

    def discard(self):
        for p in self.paths:
            if p.exists():
                p.unlink()


def _emit(args, outs: Outputs, name, obj):
    if args.json or outs.out is None:
        sys.stdout.write(io.dumps(obj))
    if outs.out is not None:
        io.write_json(outs.path(name), obj)


def _params(args):
    params, extra = io.load_scenario(args.scenario)
    over = {}
    if args.c is not None:
        over["c"] = args.c
    if args.e0 is not None:
        over["E0"] = args.e0
    if over:
        params = dataclasses.replace(params, **over)
    if getattr(args, "seed", None) is None:
        args.seed = int(extra.get("seed", 0))
    build_stack(params)  # validates
    return params


def _level(args, default=-2.0):
    if args.c is not None:
        return args.c
    if args.scenario is not None:
        return io.load_scenario(args.scenario)[0].c
    return default


# -- commands -------------------------------------------------------------------

def cmd_circular(args, outs):
    c = _level(args)
    cs = circular_orbits(c)
    tori = tori_on_level(c, args.lmax)
    rep = {"c": c, "roots": [{"label": r.label, "E": r.E, "L": r.L} for r in cs.roots],
           "tori": [dataclasses.asdict(t) for t in tori]}
    _emit(args, outs, "circular.json", rep)


def cmd_hill(args, outs):
    hr = hill_radii(_level(args))
    _emit(args, outs, "hill.json", dataclasses.asdict(hr))


def cmd_torus(args, outs):
    c = _level(args)
    rec = torus_on_level(c, args.k, args.l)
    if rec is None:
        raise ValueError(f"T_({args.k},{args.l}) is absent from the level c = {c}")
    _emit(args, outs, "torus.json", dataclasses.asdict(rec))


def cmd_transform(args, outs):
    header, data, text = io.read_csv(args.input)
    if header == ["q1", "q2", "p1", "p2"]:
        Z = data
        L = Z[:, 0] * Z[:, 3] - Z[:, 1] * Z[:, 2]
        X = np.empty_like(Z)
        back = np.empty_like(Z)
        d = L > 0
        if d.any():
            X[d] = poincare_array(Z[d])
            back[d] = poincare_inverse_array(X[d])
        if (~d).any():
            X[~d] = retrograde_array(Z[~d])
            back[~d] = retrograde_inverse_array(X[~d])
        err = float(np.max(np.abs(back - Z))) if len(Z) else 0.0
        rows = [list(x) + ["direct" if di else "retrograde"] for x, di in zip(X, d)]
        head = ["eta", "lambda", "xi", "Lambda", "regime"]
    elif header == ["eta", "lambda", "xi", "Lambda"]:
        X = data
        if "regime" in text:
            d = np.array([r != "retrograde" for r in text["regime"]], dtype=bool)
        else:
            d = X[:, 3] > 0
        Z = np.empty_like(X)
        if d.any():
            Z[d] = poincare_inverse_array(X[d])
        if (~d).any():
            Z[~d] = retrograde_inverse_array(X[~d])
        again = np.empty_like(X)
        if d.any():
            again[d] = poincare_array(Z[d])
        if (~d).any():
            again[~d] = retrograde_array(Z[~d])
        diff = again - X
        diff[:, 1] = wrap_diff(diff[:, 1])
        err = float(np.max(np.abs(diff))) if len(X) else 0.0
        rows = [list(z) for z in Z]
        head = ["q1", "q2", "p1", "p2"]
        d = np.asarray(d, dtype=bool)
    else:
        raise ValueError("input header must be q1,q2,p1,p2 or eta,lambda,xi,Lambda[,regime]")
    if outs.out is not None:
        io.write_csv(outs.path("transform.csv"), head, rows)
    _emit(args, outs, "transform.json", {"n": len(rows), "roundtrip_error": err})


def cmd_stack(args, outs):
    params = _params(args)
    model = build_stack(params)
    cp = model.critical_points()
    rep = {"params": params.to_dict(), "lam1": model.lam1, "lam2": model.lam2,
           "critical_points": [dataclasses.asdict(p) for p in cp.points],
           "degenerate_points": len(cp.degenerate)}
    if model.regime != "appendix":
        sc = sign_certificates(model, args.grid)
        rep["sign_certificates"] = dataclasses.asdict(sc)
    if outs.out is not None:
        x = np.linspace(-0.5, FOUR_PI + 0.5, 64)
        lo, hi = (params.lam3 - 3, -0.2) if model.regime == "upper" else (0.5, params.lam3 + 3)
        y = np.linspace(lo, hi, 64)
        X, Y = np.meshgrid(x, y, indexing="ij")
        H = model.h2(X, Y)
        io.write_csv(outs.path("stack_grid.csv"), ["x2", "y2", "H2"],
                     np.stack([X.ravel(), Y.ravel(), np.broadcast_to(H, X.shape).ravel()], 1))
    _emit(args, outs, "stack.json", rep)


def cmd_leaf(args, outs):
    params = _params(args)
    model = build_stack(params)
    if args.case == "annulus":
        if model.regime != "appendix":
            model = build_stack(dataclasses.replace(params, regime="appendix"))
        leaf = annulus_leaf(model, args.theta, args.init)
    else:
        if args.init is None:
            raise ValueError("--init is required for plane and cylinder leaves")
        leaf = solve_leaf(model, args.case, args.init)
    if outs.out is not None:
        io.write_csv(outs.path(f"leaf_{leaf.case}.csv"), ["s", "a", "x2", "y2", "r"],
                     leaf_table(leaf))
    _emit(args, outs, f"leaf_{leaf.case}.json", leaf.sidecar())


def _binding(model, names):
    field = assemble_liouville(model)
    out = {}
    for name in names:
        orb = binding_orbit(model, name)
        if model.regime != "appendix":
            orb.cz, _ = orbit_index(model, orb)
            rep = involution_suite(field, orb)
            orb.symmetric = rep.symmetric
        orb.period_reeb = reeb_period(field, orb)
        out[name] = orb
    return out


def cmd_cz(args, outs):
    params = _params(args)
    model = build_stack(params)
    orbits = _binding(model, args.orbits)
    rep = {}
    for name, orb in orbits.items():
        mu, iv = orbit_index(model, orb)
        rep[name] = dict(orb.to_dict(), interval=[iv.lo, iv.hi], degenerate=iv.degenerate)
    _emit(args, outs, "cz.json", rep)


def cmd_foliation(args, outs):
    params = _params(args)
    model = build_stack(params)
    if model.regime != "lower":
        raise ValueError("the foliation command needs a lower-regime scenario")
    orbits = _binding(model, ["P2", "P3", "P3p"])
    lam1, lam3 = model.lam1, params.lam3
    mid, up0 = 0.5 * (lam1 + lam3), 0.5 * (lam3 + model.lambda_max(0.0))
    up2 = 0.5 * (lam3 + model.lambda_max(TWO_PI))
    specs = [("plane_x2_0", mid), ("plane_x2_0", up0), ("plane_x2_4pi", mid),
             ("plane_x2_4pi", up0), ("plane_x2_2pi", mid), ("plane_x2_2pi", up2),
             ("cyl_y2_L3", np.pi), ("cyl_y2_L3_mirror", 3 * np.pi)]
    leaves = [solve_leaf(model, case, init) for case, init in specs]
    field = assemble_liouville(model)
    scan = transversality_scan(model, field, args.samples, args.seed)
    fixed = fixed_points(params.c, params.E0)
    cross = crossing_table(params.c, params.E0, integrate=False)
    rep = assemble_report("lower", model, leaves, orbits, scan.to_dict(), fixed, cross)
    if outs.out is not None:
        rows = []
        disc = disc_leaf(params.c, params.E0)
        pts = disc.sample(256, np.random.default_rng(args.seed))
        rows += [[0.0, p[3], p[0], p[2], p[3]] for p in pts]
        io.write_csv(outs.path("disc_samples.csv"), ["theta_or_x2", "s", "x1", "y1", "y2"],
                     rows)
    _emit(args, outs, "foliation.json", rep.to_dict())


def cmd_return_map(args, outs):
    c = _level(args)
    e0 = args.e0
    if e0 is None:
        e0 = io.load_scenario(args.scenario)[0].E0 if args.scenario else -0.1
    w = window(c, e0, args.regime)
    fixed = fixed_points(c, e0, args.regime)
    table = crossing_table(c, e0, args.regime, lmax=args.lmax, integrate=args.integrate)
    rep = {"c": c, "E0": e0, "regime": args.regime, "y_range": list(w.y_range),
           "fixed_points": [f.to_dict() for f in fixed],
           "crossings": [t.to_dict() for t in table]}
    _emit(args, outs, "return_map.json", rep)


def cmd_verify(args, outs):
    params = _params(args)
    only = {int(x) for x in args.only.split(",")} if args.only else None
    results = run_suite(params, args.seed, only,
                        log=None if args.json else lambda line: print(line, flush=True))
    rep = suite_report(params, args.seed, results)
    if outs.out is not None:
        io.write_json(outs.path("verify.json"), rep)
    if args.json:
        sys.stdout.write(io.dumps(rep))
    return 0 if not rep["failed"] else 1


COMMANDS = {"circular": cmd_circular, "hill": cmd_hill, "torus": cmd_torus,
            "transform": cmd_transform, "stack": cmd_stack, "leaf": cmd_leaf,
            "foliation": cmd_foliation, "return-map": cmd_return_map, "cz": cmd_cz,
            "verify": cmd_verify}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario name (R, appendix, upper) or JSON file")
    common.add_argument("--c", type=float, help="energy level")
    common.add_argument("--e0", type=float, help="upper energy E0 of the window")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    common.add_argument("--json", action="store_true", help="print JSON to stdout")

    ap = argparse.ArgumentParser(prog="rkfol", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("circular", parents=[common], help="circular orbits and tori on a level")
    p.add_argument("--lmax", type=int, default=12)
    sub.add_parser("hill", parents=[common], help="Hill radii")
    p = sub.add_parser("torus", parents=[common], help="one T_{k,l} torus")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p = sub.add_parser("transform", parents=[common], help="Poincare map round trips on a CSV")
    p.add_argument("--input", type=Path, required=True)
    p = sub.add_parser("stack", parents=[common], help="critical points and sign certificates")
    p.add_argument("--grid", type=int, default=512)
    p = sub.add_parser("leaf", parents=[common], help="one leaf as CSV plus JSON sidecar")
    p.add_argument("--case", required=True, choices=CASES)
    p.add_argument("--init", type=float, default=None)
    p.add_argument("--theta", type=float, default=0.0)
    p = sub.add_parser("foliation", parents=[common], help="foliation report")
    p.add_argument("--samples", type=int, default=10000)
    p = sub.add_parser("return-map", parents=[common], help="fixed points and crossings")
    p.add_argument("--regime", choices=("direct", "retro"), default="direct")
    p.add_argument("--lmax", type=int, default=24)
    p.add_argument("--integrate", action="store_true", help="also count crossings numerically")
    p = sub.add_parser("cz", parents=[common], help="Conley-Zehnder indices of binding orbits")
    p.add_argument("--orbits", nargs="+", default=["P2", "P3", "P3p"])
    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--only", help="comma-separated criterion numbers")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
    outs = Outputs(args.out)
    try:
        status = COMMANDS[args.command](args, outs)
    except CONFIG_ERRORS as exc:
        outs.discard()
        print(f"rkfol {args.command}: {exc}", file=sys.stderr)
        return 2
    except BaseException:
        outs.discard()
        raise
    return int(status or 0)


if __name__ == "__main__":
    sys.exit(main())
