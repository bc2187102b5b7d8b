"""Config-driven verification runs: data, posterior, feasible sets, confidence, reports."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from .bayes import (
    Dataset,
    GaussianPosterior,
    GaussianPrior,
    UniformBox,
    UniformPosterior,
    posterior_gaussian,
    posterior_numeric,
    sample_experiment,
)
from .confidence import confidence, confidence_trace
from .geometry import DEFAULT_TOL, Polytope
from .lti import ParameterDomain, model_from_dict
from .logic import (
    AtomicProposition,
    Letter,
    Top,
    VerificationSetup,
    atomic_propositions,
    compile_formula,
    conjunction,
    normalize,
    parse,
    verify_formula,
)
from .logic.invariance import _extended_vertices
from .reach import bound_table, write_bounds_csv


class ConfigError(ValueError):
    pass


def _schema(name):
    return json.loads(resources.files("ltiverify").joinpath("schemas", name).read_text())


def bundled_config(name):
    """Path of a config shipped with the package (e.g. ``casestudy_bounded.json``)."""
    return str(resources.files("ltiverify").joinpath("configs", name))


VERIFICATION_DEFAULTS = {
    "k_max": 20,
    "tol": DEFAULT_TOL,
    "method": None,
    "posterior": "closed_form",
    "grid_resolution": 201,
    "n_samples": 1_000_000,
    "mc_seed": 0,
    "ball_facets": 64,
    "trace": True,
    "bounds": True,
    "trace_stop_tol": None,
}


@dataclass
class RunConfig:
    raw: dict
    base_dir: str
    ms: object
    labels: list
    formula_text: str
    formula: object
    setup: VerificationSetup
    domain: ParameterDomain | None
    prior: object
    experiment: dict | None
    dataset_path: str | None
    verification: dict
    study: dict = field(default_factory=dict)
    output_dir: str = "out"


def _labels(items):
    out = []
    for item in items:
        name = item["name"]
        if "interval" in item:
            lo, hi = item["interval"]
            if lo >= hi:
                raise ConfigError(f"label {name!r}: interval lower end must be below upper end")
            out.append(Letter(name, (AtomicProposition(f"{name}_hi", [1.0], hi),
                                     AtomicProposition(f"{name}_lo", [-1.0], -lo))))
        elif "halfspaces" in item:
            aps = tuple(AtomicProposition(f"{name}_{i}", h["normal"], h["offset"])
                        for i, h in enumerate(item["halfspaces"]))
            out.append(Letter(name, aps))
        else:
            out.append(AtomicProposition(name, item["normal"], item["offset"]))
    names = [lab.name for lab in out]
    if len(set(names)) != len(names):
        raise ConfigError("label names must be unique")
    return out


def _polytope(data, dim, what, tol):
    d = dict(data)
    d.setdefault("dim", dim)
    if d["dim"] != dim:
        raise ConfigError(f"{what} has dimension {d['dim']}, expected {dim}")
    try:
        P = Polytope.from_dict(d, tol)
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None
    if P.is_empty:
        raise ConfigError(f"{what} is empty")
    if not P.bounded:
        raise ConfigError(f"{what} must be bounded")
    return P


def load_config(source, overrides=None):
    """Validate a config (path or dict) and build a RunConfig."""
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        base = os.path.dirname(os.path.abspath(source))
    else:
        raw = json.loads(json.dumps(source))
        base = os.getcwd()
    for key, val in (overrides or {}).items():
        node = raw
        *path, last = key.split(".")
        for p in path:
            node = node.setdefault(p, {})
        node[last] = val
    try:
        jsonschema.validate(raw, _schema("config.schema.json"))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    if ("experiment" in raw) == ("dataset" in raw):
        raise ConfigError("config needs exactly one of 'experiment' and 'dataset'")
    try:
        ms = model_from_dict(raw["model"])
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None
    ver = dict(VERIFICATION_DEFAULTS)
    ver.update(raw.get("verification", {}))
    tol = float(ver["tol"])
    labels = _labels(raw["labels"])
    for lab in labels:
        for ap in (lab.atoms if isinstance(lab, Letter) else (lab,)):
            if ap.normal.size != ms.p:
                raise ConfigError(f"label {ap.name!r} has {ap.normal.size} components, model has {ms.p} outputs")
    try:
        formula = parse(raw["formula"], labels)
    except ValueError as exc:
        raise ConfigError(f"formula: {exc}") from None
    X = _polytope(raw["X_ver"], ms.n, "X_ver", tol)
    U = _polytope(raw["U_ver"], ms.m, "U_ver", tol)
    domain = None
    if "domain" in raw:
        try:
            domain = ParameterDomain(raw["domain"]["lower"], raw["domain"]["upper"])
        except ValueError as exc:
            raise ConfigError(f"domain: {exc}") from None
        if domain.dim != ms.theta_dim:
            raise ConfigError(f"domain has dimension {domain.dim}, model has {ms.theta_dim} parameters")
    prior_spec = raw.get("prior", {"type": "uniform" if domain is not None else "flat"})
    if prior_spec["type"] == "uniform":
        if domain is None:
            raise ConfigError("a uniform prior needs a domain")
        prior = UniformBox(domain)
    elif prior_spec["type"] == "gaussian":
        if "mean" not in prior_spec or "cov" not in prior_spec:
            raise ConfigError("a Gaussian prior needs 'mean' and 'cov'")
        try:
            prior = GaussianPrior(prior_spec["mean"], prior_spec["cov"])
        except ValueError as exc:
            raise ConfigError(f"prior: {exc}") from None
        if prior.mean.size != ms.theta_dim:
            raise ConfigError("prior mean does not match the number of parameters")
    else:
        prior = None
    exp = raw.get("experiment")
    if exp is not None and len(exp["theta0"]) != ms.theta_dim:
        raise ConfigError("experiment theta0 does not match the number of parameters")
    ds_path = None
    if "dataset" in raw:
        ds_path = raw["dataset"]["path"]
        if not os.path.isabs(ds_path):
            ds_path = os.path.join(base, ds_path)
    study = dict(raw.get("study", {}))
    for th in study.get("theta0_list", []):
        if len(th) != ms.theta_dim:
            raise ConfigError("study theta0 entries must match the number of parameters")
    return RunConfig(
        raw=raw,
        base_dir=base,
        ms=ms,
        labels=labels,
        formula_text=raw["formula"],
        formula=formula,
        setup=VerificationSetup(X, U, tuple(labels)),
        domain=domain,
        prior=prior,
        experiment=exp,
        dataset_path=ds_path,
        verification=ver,
        study=study,
        output_dir=raw.get("output_dir", "out"),
    )


def experiment_dataset(cfg, seed=None, theta0=None):
    exp = cfg.experiment
    if exp is None:
        raise ConfigError("synthetic data requested but the config has no 'experiment'")
    law = ("uniform", -0.2, 0.2)
    inp = exp.get("input", {})
    if "sequence" in inp:
        law = np.asarray(inp["sequence"], dtype=float)
    elif "uniform" in inp:
        law = ("uniform", *inp["uniform"])
    return sample_experiment(
        cfg.ms,
        exp["theta0"] if theta0 is None else theta0,
        exp.get("x0"),
        law,
        exp["n_samples"],
        exp["sigma_e"],
        exp.get("seed", 0) if seed is None else seed,
    )


def load_dataset(cfg):
    try:
        ds = Dataset.load(cfg.dataset_path)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"dataset: {exc}") from None
    if ds.x0.size == 0:
        ds.x0 = np.zeros(cfg.ms.n)
    return ds


def make_posterior(cfg, ds):
    if cfg.verification["posterior"] == "grid":
        return posterior_numeric(cfg.prior, ds, cfg.ms, cfg.verification["grid_resolution"])
    return posterior_gaussian(cfg.prior, ds, cfg.ms)


def prior_distribution(cfg):
    if isinstance(cfg.prior, UniformBox):
        return UniformPosterior(cfg.prior.domain)
    if isinstance(cfg.prior, GaussianPrior):
        return GaussianPosterior(cfg.prior.mean, cfg.prior.cov)
    return None


def _set_stats(P):
    out = {"n_halfspaces": P.n_halfspaces, "empty": bool(P.is_empty)}
    bounded = bool(P.is_empty or P.bounded)
    out["bounded"] = bounded
    if bounded and not P.is_empty:
        out["n_vertices"] = int(len(P.vertices))
        if P.dim == 2:
            out["area"] = P.volume
    return out


def _conf(post, F, ver):
    return confidence(post, F, ver["method"], ver["mc_seed"], ver["n_samples"]).to_dict()


def _always_body(cfg):
    """psi when the formula normalises to a single G psi, else None."""
    bounded, parts = normalize(cfg.formula)
    if not isinstance(bounded, Top) or not parts or any(s != 0 for s, _ in parts):
        return None
    return conjunction(f for _, f in parts)


def run(cfg, out_dir=None, quiet=True):
    """Full verification; writes the report files and returns the report dict."""
    ver = cfg.verification
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    if cfg.dataset_path is not None:
        ds = load_dataset(cfg)
        generated = False
    else:
        ds = experiment_dataset(cfg)
        generated = True
    res = verify_formula(cfg.formula, cfg.ms, cfg.setup, cfg.domain, ver["k_max"], ver["tol"], ver["ball_facets"])
    post = make_posterior(cfg, ds)
    prior_post = prior_distribution(cfg)
    report = {
        "formula": cfg.formula_text,
        "model": cfg.ms.to_dict(),
        "theta_dim": cfg.ms.theta_dim,
        "k_used": res.k_used,
        "always_parts": [
            {"shift": p.shift, "k_used": p.k_used, "fixed_point_at": p.fixed_point_at, "eps": p.eps,
             "tube_vertices": p.tube_vertices}
            for p in res.parts
        ],
        "feasible_set": {"inner": _set_stats(res.inner), "outer": _set_stats(res.outer)},
        "posterior_confidence": _conf(post, res.outer, ver),
        "posterior_confidence_inner": _conf(post, res.inner, ver),
        "dataset": {
            "n_samples": ds.n_samples,
            "generated": generated,
            "seed": ds.seed,
            "theta0": None if ds.theta0 is None else np.asarray(ds.theta0).tolist(),
        },
    }
    if isinstance(post, GaussianPosterior):
        report["posterior"] = {"kind": "gaussian", "mean": post.mean.tolist(), "cov": post.cov.tolist(),
                               "truncated_to_domain": post.box is not None}
    elif isinstance(post, UniformPosterior):
        report["posterior"] = {"kind": "uniform"}
    else:
        report["posterior"] = {"kind": "grid", "resolution": list(post.resolution)}
    if prior_post is not None:
        report["prior_confidence"] = _conf(prior_post, res.outer, ver)
        report["prior_confidence_inner"] = _conf(prior_post, res.inner, ver)
    else:
        report["prior_confidence"] = None
        report["prior_confidence_inner"] = None

    psi = _always_body(cfg)
    model, Xv, Uv = _extended_vertices(cfg.ms, cfg.setup)
    report["bounds"] = None
    if ver["bounds"] and psi is not None:
        cs = compile_formula(psi, model, Uv)
        X0 = Polytope.from_points(Xv, ver["tol"])
        x0 = None if np.allclose(X0.vertices, 0) else X0
        rows = bound_table(model, cfg.setup.U_ver, cs, atomic_propositions(psi), range(1, ver["k_max"] + 1), X0=x0,
                           tol=ver["tol"])
        write_bounds_csv(rows, os.path.join(out_dir, "bounds.csv"))
        report["bounds"] = [
            {"k": r.k, "eps_reach": r.eps_reach, "c1": r.c1, "eps_p": r.eps_p,
             "eps_theta": None if math.isinf(r.eps_theta) else r.eps_theta,
             "max_vertex_norm": None if math.isinf(r.max_vertex_norm) else r.max_vertex_norm}
            for r in rows
        ]
    report["trace"] = None
    if ver["trace"] and psi is not None:
        trace = confidence_trace(post, cfg.ms, cfg.setup, psi, range(1, ver["k_max"] + 1), cfg.domain,
                                 ver["method"], ver["mc_seed"], ver["n_samples"], ver["trace_stop_tol"], ver["tol"])
        report["trace"] = [{"k": t.k, **t.result.to_dict()} for t in trace]
        with open(os.path.join(out_dir, "trace.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "value", "error"])
            for t in trace:
                w.writerow([t.k, repr(t.result.value), repr(t.result.error_estimate)])
    if generated:
        ds.save(os.path.join(out_dir, "dataset.csv"))
    with open(os.path.join(out_dir, "feasible_sets.json"), "w") as fh:
        json.dump({"inner": res.inner.to_dict(), "outer": res.outer.to_dict()}, fh, indent=2, sort_keys=True)
    write_json(os.path.join(out_dir, "report.json"), report, "report.schema.json")
    if not quiet:
        pc = report["prior_confidence"]
        print(f"formula: {cfg.formula_text}")
        if pc is not None:
            print(f"prior confidence:     {pc['value']:.6f} ({pc['method']})")
        print(f"posterior confidence: {report['posterior_confidence']['value']:.6f} "
              f"(inner {report['posterior_confidence_inner']['value']:.6f})")
        print(f"reports written to {out_dir}")
    return report


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path, data, schema=None):
    data = _clean(data)
    if schema is not None:
        jsonschema.validate(data, _schema(schema))
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def study_seed(master_seed, i):
    """Seed material of repetition ``i``: SeedSequence entropy [master_seed, i]."""
    return [int(master_seed), int(i)]


def _study_task(args):
    cfg, F, theta0, seed = args
    ds = experiment_dataset(cfg, seed=seed, theta0=theta0)
    post = make_posterior(cfg, ds)
    ver = cfg.verification
    return confidence(post, F, ver["method"], ver["mc_seed"], ver["n_samples"]).value


def repeat_study(cfg, repetitions=None, master_seed=None, theta0_list=None, workers=1):
    """Posterior-confidence mean and population variance over seeded repetitions per θ0.

    Repetition ``i`` uses the same seed for every θ0 (common random numbers).
    """
    if cfg.experiment is None:
        raise ConfigError("a study needs an 'experiment' section")
    st = cfg.study
    reps = repetitions or st.get("repetitions", 100)
    master = st.get("master_seed", 0) if master_seed is None else master_seed
    thetas = theta0_list or st.get("theta0_list") or [cfg.experiment["theta0"]]
    ver = cfg.verification
    res = verify_formula(cfg.formula, cfg.ms, cfg.setup, cfg.domain, ver["k_max"], ver["tol"], ver["ball_facets"])
    F = res.outer
    tasks = [(cfg, F, th, study_seed(master, i)) for th in thetas for i in range(reps)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_study_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        values = [_study_task(t) for t in tasks]
    rows = []
    for j, th in enumerate(thetas):
        v = np.array(values[j * reps:(j + 1) * reps])
        rows.append({
            "theta0": [float(x) for x in th],
            "mean": float(np.mean(v)),
            "variance": float(np.var(v)),
            "values": v.tolist(),
        })
    return {"formula": cfg.formula_text, "repetitions": reps, "master_seed": master, "results": rows}
