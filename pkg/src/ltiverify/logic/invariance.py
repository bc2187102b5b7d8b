"""Feasible parameter sets for formulas containing unbounded always.

``G f`` holds from every initial state iff ``f`` holds from every state of the
reach tube, so the feasible set of ``G f`` is sandwiched between the feasible
set of ``f`` over a finite tube (outer) and over the same tube inflated by a
bound on its distance to the limit (inner).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..geometry import DEFAULT_TOL, Polytope, ball_approx, intersect, minkowski_sum
from ..lti import augment_d
from ..reach import eps_reach, post, reach
from .compile import CompileError, compile_formula, conjunction, feasible_set, normalize


@dataclass(frozen=True)
class VerificationSetup:
    X_ver: Polytope
    U_ver: Polytope
    labels: tuple = ()

    def __post_init__(self):
        if not self.U_ver.bounded:
            raise ValueError("input set must be bounded")
        if not self.X_ver.bounded:
            raise ValueError("initial-state set must be bounded")

    @property
    def origin_in_inputs(self):
        return self.U_ver.contains(np.zeros(self.U_ver.dim))


@dataclass
class AlwaysPart:
    shift: int
    k_used: int
    fixed_point_at: int | None
    eps: float
    tube_vertices: int


@dataclass
class InvarianceResult:
    inner: Polytope
    outer: Polytope
    k_used: int
    parts: list = field(default_factory=list)


def _extended_vertices(ms, setup):
    """Initial vertices (X × U for augmented models) and input vertices."""
    Xv = setup.X_ver.vertices
    Uv = setup.U_ver.vertices
    if ms.d_parameterised:
        ext = np.array([np.concatenate([x, u]) for x, u in itertools.product(Xv, Uv)])
        return augment_d(ms), ext, Uv
    return ms, Xv, Uv


def verify_formula(phi, ms, setup, domain=None, k_max=50, tol=DEFAULT_TOL, ball_facets=64):
    """InvarianceResult for any fragment formula; inner == outer when no G occurs.

    Models with a parameterised feed-through are handled through ``augment_d``.
    """
    model, Xv, Uv = _extended_vertices(ms, setup)
    bounded, parts = normalize(phi)
    base = feasible_set(compile_formula(bounded, model, Uv), Xv, domain, tol)
    if not parts:
        return InvarianceResult(base, base, 0)
    model.require_stable()
    if not setup.origin_in_inputs:
        raise ValueError("unbounded-time verification needs the origin in the input set")
    X0 = Polytope.from_points(Xv, tol)
    U = setup.U_ver
    inner, outer = base, base
    reports = []
    k_used = 0
    groups = {}
    for shift, f in parts:
        groups.setdefault(shift, []).append(f)
    for shift in sorted(groups):
        cs = compile_formula(conjunction(groups[shift]), model, Uv)
        S0 = X0
        for _ in range(shift):
            S0 = post(S0, model, U)
        seq = reach(model, U, X0=S0, k=k_max, tube=True, tol=tol, stop_at_fixed_point=True)
        hull = seq.last
        k = len(seq.sets) - 1
        if seq.fixed_point_at is not None:
            eps = 0.0
        else:
            eps = eps_reach(model, U, k, X0=S0, x0_term="rigorous")
        grown = hull if eps == 0.0 else minkowski_sum(hull, ball_approx(model.n, eps, ball_facets).polytope(tol))
        outer = intersect(outer, feasible_set(cs, hull.vertices, None, tol))
        inner = intersect(inner, feasible_set(cs, grown.vertices, None, tol))
        k_used = max(k_used, k)
        reports.append(AlwaysPart(shift, k, seq.fixed_point_at, eps, len(hull.vertices)))
    return InvarianceResult(inner, outer, k_used, reports)


def feasible_set_always(phi, ms, setup, k_max=50, tol=DEFAULT_TOL, domain=None, ball_facets=64):
    """(inner, outer, k_used) with inner ⊆ feasible set of ``phi`` ⊆ outer."""
    ms.require_stable()
    res = verify_formula(phi, ms, setup, domain, k_max, tol, ball_facets)
    return res.inner, res.outer, res.k_used


__all__ = [
    "AlwaysPart",
    "CompileError",
    "InvarianceResult",
    "VerificationSetup",
    "feasible_set_always",
    "verify_formula",
]
