"""Independent reference computations used to check the library."""

import itertools

import numpy as np
from scipy.optimize import linprog

from ltiverify.logic.formula import And, Atom, BoundedAlways, Letter, Next, Top


def is_convex_combination(point, others):
    """LP feasibility: point = Σ λ_i others_i with λ >= 0, Σ λ = 1."""
    k = len(others)
    if k == 0:
        return False
    A_eq = np.vstack([np.asarray(others).T, np.ones((1, k))])
    b_eq = np.concatenate([point, [1.0]])
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
    return res.status == 0


def lp_vertices(points):
    """Points that are not convex combinations of the remaining points."""
    points = np.unique(np.asarray(points, dtype=float), axis=0)
    keep = []
    for i, p in enumerate(points):
        others = np.delete(points, i, axis=0)
        if not is_convex_combination(p, others):
            keep.append(p)
    return np.array(keep)


def satisfies(phi, ms, theta, x, U_vertices):
    """Direct semantics: every vertex input sequence keeps the labels true."""
    C = np.asarray(theta, dtype=float).reshape(ms.n, ms.p).T
    x = np.asarray(x, dtype=float)
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Atom):
        return float(phi.ap.normal @ (C @ x)) <= phi.ap.offset
    if isinstance(phi, Letter):
        return all(float(ap.normal @ (C @ x)) <= ap.offset for ap in phi.atoms)
    if isinstance(phi, And):
        return satisfies(phi.left, ms, theta, x, U_vertices) and satisfies(phi.right, ms, theta, x, U_vertices)
    if isinstance(phi, Next):
        return all(satisfies(phi.arg, ms, theta, ms.A @ x + ms.B @ np.atleast_1d(u), U_vertices)
                   for u in U_vertices)
    if isinstance(phi, BoundedAlways):
        return all(satisfies(_next_pow(phi.arg, i), ms, theta, x, U_vertices) for i in range(phi.k + 1))
    raise TypeError(phi)


def _next_pow(phi, i):
    for _ in range(i):
        phi = Next(phi)
    return phi


def satisfies_along(phi, ms, theta, x0, inputs):
    """Check phi at time 0 along one concrete input sequence (for interior sampling)."""
    C = np.asarray(theta, dtype=float).reshape(ms.n, ms.p).T
    xs = [np.asarray(x0, dtype=float)]
    for u in inputs:
        xs.append(ms.A @ xs[-1] + ms.B @ np.atleast_1d(u))

    def go(f, t):
        if isinstance(f, Top):
            return True
        if isinstance(f, Atom):
            return float(f.ap.normal @ (C @ xs[t])) <= f.ap.offset
        if isinstance(f, Letter):
            return all(float(ap.normal @ (C @ xs[t])) <= ap.offset for ap in f.atoms)
        if isinstance(f, And):
            return go(f.left, t) and go(f.right, t)
        if isinstance(f, Next):
            return go(f.arg, t + 1)
        if isinstance(f, BoundedAlways):
            return all(go(f.arg, t + i) for i in range(f.k + 1))
        raise TypeError(f)

    return go(phi, 0)


def normal_equations(Phi, y):
    return np.linalg.solve(Phi.T @ Phi, Phi.T @ y)


def square(lo, hi):
    return np.array(list(itertools.product([lo, hi], repeat=2)), dtype=float)


def random_stable_model(rng, n=2, radius=0.95):
    from ltiverify.lti import LtiModelSet

    A = rng.standard_normal((n, n))
    A *= rng.uniform(0.1, radius) / max(1e-9, np.max(np.abs(np.linalg.eigvals(A))))
    B = rng.standard_normal((n, 1))
    return LtiModelSet(A, B)


def random_labels(rng, count=3):
    from ltiverify.logic import AtomicProposition

    return [AtomicProposition(f"p{i}", [rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)],
                              rng.uniform(0.2, 1.5)) for i in range(count)]


def random_formula(rng, atoms, horizon, depth=3):
    """Random fragment formula (atoms, X, &, G[k]) whose horizon is at most ``horizon``."""
    from ltiverify.logic import And, Atom, BoundedAlways, Next

    def go(h, d):
        choice = rng.integers(0, 4) if d > 0 else 0
        if choice == 0 or (choice in (1, 3) and h == 0):
            return Atom(atoms[rng.integers(len(atoms))])
        if choice == 1:
            return Next(go(h - 1, d - 1))
        if choice == 2:
            return And(go(h, d - 1), go(h, d - 1))
        k = int(rng.integers(1, h + 1))
        return BoundedAlways(k, go(h - k, d - 1))

    return go(horizon, depth)


def satisfies_grid(phi, ms, thetas, x, U_vertices):
    """Vectorised ``satisfies`` over many parameter vectors at once."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    Cs = thetas.reshape(len(thetas), ms.n, ms.p)

    def go(f, x):
        if isinstance(f, Top):
            return np.ones(len(thetas), dtype=bool)
        if isinstance(f, (Atom, Letter)):
            aps = (f.ap,) if isinstance(f, Atom) else f.atoms
            y = np.einsum("gnp,n->gp", Cs, x)
            return np.all([y @ ap.normal <= ap.offset for ap in aps], axis=0)
        if isinstance(f, And):
            return go(f.left, x) & go(f.right, x)
        if isinstance(f, Next):
            return np.all([go(f.arg, ms.A @ x + ms.B @ np.atleast_1d(u)) for u in U_vertices], axis=0)
        if isinstance(f, BoundedAlways):
            return np.all([go(_next_pow(f.arg, i), x) for i in range(f.k + 1)], axis=0)
        raise TypeError(f)

    return go(phi, np.asarray(x, dtype=float))
