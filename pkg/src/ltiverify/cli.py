"""Command-line entry point: ``ltiverify {verify,study,reach,compile,simulate}``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import jsonschema
import numpy as np

from . import pipeline
from .pipeline import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _config(args, seed_key):
    overrides = {}
    if args.seed is not None:
        overrides[seed_key] = args.seed
    return pipeline.load_config(args.config, overrides)


def _out(args, cfg):
    return args.out or cfg.output_dir


def cmd_verify(args):
    cfg = _config(args, "experiment.seed")
    pipeline.run(cfg, _out(args, cfg), quiet=args.quiet)


def cmd_study(args):
    cfg = _config(args, "study.master_seed")
    out = _out(args, cfg)
    os.makedirs(out, exist_ok=True)
    result = pipeline.repeat_study(cfg, repetitions=args.repeat, workers=args.workers)
    pipeline.write_json(os.path.join(out, "study.json"), result, "study.schema.json")
    with open(os.path.join(out, "study.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta0", "mean", "variance"])
        for row in result["results"]:
            w.writerow([" ".join(repr(x) for x in row["theta0"]), repr(row["mean"]), repr(row["variance"])])
    if not args.quiet:
        for row in result["results"]:
            print(f"theta0={row['theta0']}: mean={row['mean']:.4f} variance={row['variance']:.4f}")


def cmd_reach(args):
    from .logic import compile_formula
    from .logic.formula import atomic_propositions
    from .logic.invariance import _extended_vertices
    from .geometry import Polytope
    from .reach import bound_table, reach, write_bounds_csv

    cfg = _config(args, "experiment.seed")
    out = _out(args, cfg)
    os.makedirs(out, exist_ok=True)
    psi = pipeline._always_body(cfg)
    if psi is None:
        raise ConfigError("the reach command needs a formula of the form 'G psi'")
    k_max = cfg.verification["k_max"]
    tol = cfg.verification["tol"]
    model, Xv, Uv = _extended_vertices(cfg.ms, cfg.setup)
    X0 = Polytope.from_points(Xv, tol)
    x0 = None if np.allclose(X0.vertices, 0) else X0
    cs = compile_formula(psi, model, Uv)
    rows = bound_table(model, cfg.setup.U_ver, cs, atomic_propositions(psi), range(1, k_max + 1), X0=x0, tol=tol)
    write_bounds_csv(rows, os.path.join(out, "bounds.csv"))
    seq = reach(model, cfg.setup.U_ver, X0=X0, k=k_max, tube=True, tol=tol)
    pipeline.write_json(os.path.join(out, "reach_sets.json"), {
        "kind": seq.kind,
        "fixed_point_at": seq.fixed_point_at,
        "sets": [P.to_dict() for P in seq.sets],
    })
    if not args.quiet:
        for r in rows:
            print(f"k={r.k:3d} eps_reach={r.eps_reach:.6g} eps_theta={r.eps_theta:.6g}")


def cmd_compile(args):
    from .logic import verify_formula

    cfg = _config(args, "experiment.seed")
    out = _out(args, cfg)
    os.makedirs(out, exist_ok=True)
    ver = cfg.verification
    res = verify_formula(cfg.formula, cfg.ms, cfg.setup, cfg.domain, ver["k_max"], ver["tol"], ver["ball_facets"])
    data = {"formula": cfg.formula_text, "k_used": res.k_used,
            "inner": res.inner.to_dict(), "outer": res.outer.to_dict()}
    path = os.path.join(out, "feasible_sets.json")
    with open(path, "w") as fh:
        json.dump(pipeline._clean(data), fh, indent=2, sort_keys=True)
    if not args.quiet:
        print(f"feasible sets written to {path}")


def cmd_simulate(args):
    cfg = _config(args, "experiment.seed")
    out = _out(args, cfg)
    os.makedirs(out, exist_ok=True)
    ds = pipeline.experiment_dataset(cfg)
    path = os.path.join(out, "dataset.csv")
    ds.save(path)
    if not args.quiet:
        print(f"{ds.n_samples} samples written to {path}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ltiverify",
        description="Data-driven verification of safety formulas for LTI systems with unknown output maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "verify": (cmd_verify, "run the full pipeline and write report.json"),
        "study": (cmd_study, "repeat synthetic experiments and summarise the confidence"),
        "reach": (cmd_reach, "write the reach-bound table for a 'G psi' formula"),
        "compile": (cmd_compile, "write the feasible parameter sets of the formula"),
        "simulate": (cmd_simulate, "generate the synthetic dataset only"),
    }
    for name, (fn, text) in commands.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override the experiment seed (study: master seed)")
        p.add_argument("--out", help="output directory (default: output_dir from the config)")
        p.add_argument("--quiet", action="store_true", help="suppress the console summary")
        if name == "study":
            p.add_argument("--repeat", type=int, help="number of repetitions per theta0")
            p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.set_defaults(func=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, jsonschema.ValidationError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
