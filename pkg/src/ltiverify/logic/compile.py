"""Inductive compilation of fragment formulas into linear constraints on θ.

A compiled formula is a family of rows indexed by ``j``: the formula holds
from state ``x`` under output parameters ``θ`` iff
``(xᵀ N_j + K_j) θ <= Boff_j`` for every ``j``, where ``N_j`` is the ``j``-th
``n``-row block of ``N``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import DEFAULT_TOL, Polytope
from .formula import (
    Always,
    And,
    Atom,
    BoundedAlways,
    Letter,
    Next,
    Top,
    conjunction,
    conjuncts,
    expand_bounded,
    next_power,
)


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintSystem:
    n_psi: int
    N: np.ndarray  # (n * n_psi, theta_dim)
    K: np.ndarray  # (n_psi, theta_dim)
    Boff: np.ndarray  # (n_psi,)
    model_dims: tuple  # (n, theta_dim)

    @property
    def blocks(self):
        """N as an (n_psi, n, theta_dim) array."""
        n, d = self.model_dims
        return self.N.reshape(self.n_psi, n, d)

    def rows_at(self, x):
        """Constraint rows (n_psi, theta_dim) and offsets at state ``x``."""
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.einsum("n,jnd->jd", x, self.blocks) + self.K, self.Boff

    def holds(self, theta, x, tol=0.0):
        H, b = self.rows_at(x)
        return bool(np.all(H @ np.asarray(theta, dtype=float) <= b + tol))


def _empty_system(n, d):
    return ConstraintSystem(0, np.zeros((0, d)), np.zeros((0, d)), np.zeros(0), (n, d))


def _atom(ap, ms):
    if ap.normal.size != ms.p:
        raise CompileError(
            f"label {ap.name!r} has {ap.normal.size} output components, model has {ms.p}"
        )
    n, d = ms.n, ms.theta_dim
    N = np.kron(np.eye(n), ap.normal[None, :])
    return ConstraintSystem(1, N, np.zeros((1, d)), np.array([ap.offset]), (n, d))


def _stack(a, b):
    return ConstraintSystem(
        a.n_psi + b.n_psi,
        np.vstack([a.N, b.N]),
        np.vstack([a.K, b.K]),
        np.concatenate([a.Boff, b.Boff]),
        a.model_dims,
    )


def _next(cs, ms, U_vertices):
    # rows at x for successor A x + B u_i: xᵀ AᵀN_j + (u_iᵀ BᵀN_j + K_j)
    blocks = cs.blocks
    n, d = cs.model_dims
    AN = np.einsum("kn,jkd->jnd", ms.A, blocks)
    BN = np.einsum("km,jkd->jmd", ms.B, blocks)
    uBN = np.einsum("im,jmd->ijd", U_vertices, BN)
    nu = len(U_vertices)
    N = np.broadcast_to(AN, (nu,) + AN.shape).reshape(nu * cs.n_psi * n, d)
    K = (uBN + cs.K[None, :, :]).reshape(nu * cs.n_psi, d)
    Boff = np.tile(cs.Boff, nu)
    return ConstraintSystem(nu * cs.n_psi, N.copy(), K, Boff, (n, d))


def compile_formula(phi, ms, U_vertices):
    """ConstraintSystem of a formula without unbounded always.

    ``G[k]`` nodes are expanded first. ``U_vertices`` are the input vertices,
    one per row, in the order they are stacked.
    """
    if ms.d_parameterised:
        raise CompileError("parameterised feed-through: compile the augment_d model instead")
    U = np.asarray(U_vertices, dtype=float).reshape(-1, ms.m)
    if len(U) == 0:
        raise CompileError("at least one input vertex is required")
    phi = expand_bounded(phi)
    cache = {}

    def go(f):
        key = id(f)
        if key in cache:
            return cache[key][1]
        if isinstance(f, Atom):
            out = _atom(f.ap, ms)
        elif isinstance(f, Letter):
            out = go(conjunction(Atom(ap) for ap in f.atoms))
        elif isinstance(f, Top):
            out = _empty_system(ms.n, ms.theta_dim)
        elif isinstance(f, Next):
            out = _next(go(f.arg), ms, U)
        elif isinstance(f, And):
            out = _stack(go(f.left), go(f.right))
        elif isinstance(f, Always):
            raise CompileError("unbounded always must normalize first")
        else:
            raise CompileError(f"cannot compile {f!r}")
        # keep f alive so its id stays unique while cached
        cache[key] = (f, out)
        return out

    return go(phi)


def feasible_set(cs, X_vertices, domain=None, tol=DEFAULT_TOL):
    """H-polytope of parameters satisfying the compiled formula from every vertex."""
    n, d = cs.model_dims
    X = np.asarray(X_vertices, dtype=float).reshape(-1, n)
    if len(X) == 0:
        raise CompileError("at least one initial-state vertex is required")
    H = (np.einsum("vn,jnd->vjd", X, cs.blocks) + cs.K[None]).reshape(-1, d)
    b = np.tile(cs.Boff, len(X))
    if domain is not None:
        H = np.vstack([H, np.eye(d), -np.eye(d)])
        b = np.concatenate([b, domain.upper, -domain.lower])
    if len(b) == 0:
        return Polytope(d, halfspaces=(np.zeros((0, d)), np.zeros(0)), tol=tol)
    return Polytope.from_halfspaces(H, b, tol)


def normalize(phi):
    """Split into (bounded_part, [(shift, f), ...]) with phi ≡ bounded ∧ ⋀ X^shift G f.

    Every ``f`` is free of unbounded always. Rules: G distributes over &,
    G G f = G f, G X f = X G f, and X shifts every always-part it encloses.
    """
    if isinstance(phi, (Atom, Letter, Top)):
        return phi, []
    if isinstance(phi, BoundedAlways):
        return normalize(expand_bounded(phi))
    if isinstance(phi, Next):
        b, parts = normalize(phi.arg)
        bounded = Top() if isinstance(b, Top) else Next(b)
        return bounded, [(s + 1, f) for s, f in parts]
    if isinstance(phi, And):
        b1, p1 = normalize(phi.left)
        b2, p2 = normalize(phi.right)
        return conjunction(conjuncts(b1) + conjuncts(b2)), p1 + p2
    if isinstance(phi, Always):
        b, parts = normalize(phi.arg)
        out = []
        for c in conjuncts(b):
            shift = 0
            while isinstance(c, Next):
                c = c.arg
                shift += 1
            out.append((shift, c))
        return Top(), out + list(parts)
    raise CompileError(f"unsupported nesting: {phi!r}")


def denormalize(bounded, parts):
    """Formula equivalent to a normalize result (for round-trip checks)."""
    return conjunction(
        conjuncts(bounded) + [next_power(Always(f), s) for s, f in parts]
    )
