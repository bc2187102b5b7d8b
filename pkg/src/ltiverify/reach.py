"""Forward reachable sets, reach tubes and the analytic error bounds built on them."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    DEFAULT_TOL,
    GeometryError,
    Polytope,
    UnboundedError,
    hull_from_points,
    is_subset,
)
from .lti import StabilityError


def post(P, ms, U):
    """conv{A v + B u : v vertex of P, u vertex of U}."""
    if P.dim != ms.n or U.dim != ms.m:
        raise GeometryError("state or input set dimension does not match the model")
    if not U.bounded:
        raise UnboundedError("input set must be bounded")
    V, W = P.vertices, U.vertices
    pts = (V @ ms.A.T)[:, None, :] + (W @ ms.B.T)[None, :, :]
    return hull_from_points(pts.reshape(-1, ms.n), max(P.tol, U.tol))


@dataclass
class ReachSequence:
    sets: list
    kind: str
    fixed_point_at: int | None = None

    @property
    def last(self):
        return self.sets[-1]


def reach(ms, U, X0=None, k=20, tube=False, tol=DEFAULT_TOL, stop_at_fixed_point=False):
    """Sets 0..k of the origin-started sequence (X0 None) or of the reach tube from X0.

    Tube sets are stored as convex hulls of the union of the previous set and
    its successor. ``fixed_point_at`` is the first index whose set equals its
    predecessor within ``tol``.
    """
    if k < 0:
        raise ValueError("number of steps must be nonnegative")
    start = Polytope.point(np.zeros(ms.n), tol) if X0 is None else X0
    sets = [start]
    fixed = None
    for i in range(1, k + 1):
        prev = sets[-1]
        nxt = post(prev, ms, U)
        if tube:
            nxt = hull_from_points(np.vstack([prev.vertices, nxt.vertices]), tol)
        sets.append(nxt)
        if fixed is None and is_subset(nxt, prev) and is_subset(prev, nxt):
            fixed = i
            if stop_at_fixed_point:
                break
    return ReachSequence(sets, "tube" if tube else "origin_started", fixed)


def power_norms(ms, tail_tol=1e-12, max_terms=100_000):
    """‖A^i‖₂ for i = 0, 1, ... until the remaining sum provably drops below ``tail_tol``.

    Returns (norms, tail) with ``tail`` an upper bound on Σ_{i >= len(norms)} ‖A^i‖₂.
    """
    rho = ms.spectral_radius()
    if rho >= 1.0:
        raise StabilityError(f"spectral radius {rho:.6g} is not below 1")
    n = ms.n
    norms = [1.0]
    P = np.eye(n)
    l = None
    head = 1.0  # Σ_{i<l} ‖A^i‖
    while len(norms) < max_terms:
        P = P @ ms.A
        nrm = float(np.linalg.norm(P, 2))
        norms.append(nrm)
        if l is None:
            if nrm < 1.0:
                l = len(norms) - 1
            else:
                head += nrm
        if l is not None:
            # Σ_{i>K} ‖A^i‖ <= ‖A^{K+1}‖ Σ_{j>=0} ‖A^j‖ <= ‖A^{K+1}‖ head / (1 - ‖A^l‖)
            nxt = float(np.linalg.norm(P @ ms.A, 2))
            tail = nxt * head / (1.0 - norms[l])
            if tail < tail_tol:
                return np.array(norms), tail
    raise StabilityError("power series converges too slowly to bound")


def c1_bound(ms, tail_tol=1e-12, method="summed"):
    """Upper bound on Σ_i ‖A^i B‖₂ used by the reach bounds.

    ``summed`` adds ‖A^i‖₂ numerically with a rigorous geometric tail;
    ``closed_form`` uses Σ_{i<l} ‖A^i‖₂ / (1 - ‖A^l‖₂) for the least l with ‖A^l‖₂ < 1.
    """
    norms, tail = power_norms(ms, tail_tol)
    b = float(np.linalg.norm(ms.B, 2))
    if method == "summed":
        return b * (float(np.sum(norms)) + tail)
    if method == "closed_form":
        l = int(np.argmax(norms[1:] < 1.0)) + 1
        return b * float(np.sum(norms[:l])) / (1.0 - norms[l])
    raise ValueError(f"unknown c1 method {method!r}")


def _max_norm(P):
    return float(np.max(np.linalg.norm(P.vertices, axis=1)))


def matrix_power_norm(A, k):
    return float(np.linalg.norm(np.linalg.matrix_power(A, k), 2))


def eps_reach(ms, U, k, X0=None, x0_term="next_power", tail_tol=1e-12, c1=None):
    """Bound on the Hausdorff distance between the k-step set and its limit.

    With X0 = None (or {0}) this is ‖A^k‖₂ · max‖u‖ · c₁. For a nonzero X0,
    ``x0_term="next_power"`` adds ‖A^{k+1}‖₂ · max‖x0‖, while ``"rigorous"`` adds
    ‖A^k‖₂ (1 + sup_{j>=1} ‖A^j‖₂) · max‖x0‖, which holds for every stable A.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if not U.bounded:
        raise UnboundedError("input set must be bounded")
    if c1 is None:
        c1 = c1_bound(ms, tail_tol)
    Ak = matrix_power_norm(ms.A, k)
    eps = Ak * _max_norm(U) * c1
    if X0 is not None:
        r0 = _max_norm(X0)
        if r0 > 0:
            if x0_term == "next_power":
                eps += matrix_power_norm(ms.A, k + 1) * r0
            elif x0_term == "rigorous":
                norms, _ = power_norms(ms, tail_tol)
                sup = float(np.max(norms[1:])) if len(norms) > 1 else 0.0
                eps += Ak * (1.0 + sup) * r0
            else:
                raise ValueError(f"unknown x0_term {x0_term!r}")
    return eps


def label_precision(labels):
    """max over labels of ‖normal‖₂ / |offset|."""
    vals = []
    for ap in labels:
        if ap.offset == 0:
            raise ValueError(f"label precision undefined: {ap.name!r} has zero offset")
        vals.append(float(np.linalg.norm(ap.normal)) / abs(ap.offset))
    if not vals:
        raise ValueError("label precision undefined for an empty label set")
    return max(vals)


def max_vertex_norm(theta_set):
    if theta_set.is_empty:
        raise GeometryError("parameter set is empty")
    if not theta_set.bounded:
        raise UnboundedError("no finite bound: parameter set is unbounded")
    return _max_norm(theta_set)


def eps_theta(eps_x, eps_p, theta_set, simplified=False):
    """Parameter-space inflation matching a state-space inflation of ``eps_x``.

    Full form: ε_x ε_p m² / (1 + ε_x ε_p m) with m the largest vertex norm of
    ``theta_set``; the simplified form drops the denominator.
    """
    if eps_x < 0 or eps_p < 0:
        raise ValueError("precisions must be nonnegative")
    m = max_vertex_norm(theta_set)
    A, b = theta_set.halfspaces
    if len(b) and not np.all(b > theta_set.tol):
        raise GeometryError("origin is not in the interior of the parameter set")
    num = eps_x * eps_p * m * m
    if simplified:
        return num
    return num / (1.0 + eps_x * eps_p * m)


@dataclass
class BoundReport:
    k: int
    eps_reach: float
    c1: float
    eps_p: float
    eps_theta: float
    max_vertex_norm: float
    bounded: bool = True
    extra: dict = field(default_factory=dict)

    def row(self):
        return {
            "k": self.k,
            "eps_reach": self.eps_reach,
            "eps_theta": self.eps_theta,
            "max_vertex_norm": self.max_vertex_norm,
        }


def bound_table(ms, U, cs, labels, k_values, X0=None, domain=None,
                simplified=False, tol=DEFAULT_TOL, x0_term="rigorous"):
    """BoundReport for each k; ``cs`` is evaluated on the vertices of the k-step tube."""
    from .logic.compile import feasible_set

    c1 = c1_bound(ms)
    eps_p = label_precision(labels)
    k_max = max(k_values)
    seq = reach(ms, U, X0=X0, k=k_max, tube=True, tol=tol)
    reports = []
    for k in k_values:
        S = seq.sets[k]
        ex = eps_reach(ms, U, k, X0=X0, x0_term=x0_term, c1=c1)
        theta_set = feasible_set(cs, S.vertices, domain, tol)
        if theta_set.is_empty:
            raise GeometryError(f"feasible set at k={k} is empty")
        if theta_set.bounded:
            m = _max_norm(theta_set)
            et = eps_theta(ex, eps_p, theta_set, simplified)
            reports.append(BoundReport(k, ex, c1, eps_p, et, m, True))
        else:
            reports.append(BoundReport(k, ex, c1, eps_p, math.inf, math.inf, False))
    return reports


def write_bounds_csv(reports, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["k", "eps_reach", "eps_theta", "max_vertex_norm"])
        w.writeheader()
        for r in reports:
            w.writerow({key: repr(val) if isinstance(val, float) else val for key, val in r.row().items()})
