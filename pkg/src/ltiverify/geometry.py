"""Convex polytopes with vertex (V) and half-space (H) descriptions.

Reachable sets are carried in V-rep (images of vertices), feasible parameter
sets are produced in H-rep; the other description is computed on demand and
cached. Exact conversions are guaranteed up to three dimensions and attempted
through qhull up to ``MAX_DIM``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

DEFAULT_TOL = 1e-9
MAX_DIM = 6
# cap on the number of d-subsets tried when enumerating vertices of a thin H-polytope
_MAX_COMBINATIONS = 2_000_000


class GeometryError(ValueError):
    """Base class for polytope calculus failures."""


class DimensionMismatch(GeometryError):
    pass


class UnboundedError(GeometryError):
    pass


class EmptySetError(GeometryError):
    pass


def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def _check_dim(dim):
    if dim > MAX_DIM:
        raise GeometryError(
            f"polytope operations are limited to dimension {MAX_DIM}, got {dim}"
        )


class Polytope:
    """Convex polytope (or polyhedron) in R^dim.

    At least one of ``vertices`` (k x dim) or ``halfspaces`` ((A, b) with
    ``A @ x <= b``) must be given. When both are given they are trusted to
    describe the same set. Instances are immutable; the missing description is
    computed lazily.
    """

    def __init__(self, dim, vertices=None, halfspaces=None, tol=DEFAULT_TOL):
        dim = int(dim)
        if dim < 1:
            raise GeometryError("dimension must be positive")
        if vertices is None and halfspaces is None:
            raise GeometryError("a polytope needs vertices or halfspaces")
        if tol < 0:
            raise GeometryError("tolerance must be nonnegative")
        self.dim = dim
        self.tol = float(tol)
        self.certificate = None
        self._V = None
        self._A = None
        self._b = None
        if vertices is not None:
            V = np.asarray(vertices, dtype=float).reshape(-1, dim) if len(vertices) else np.zeros((0, dim))
            if V.shape[1] != dim:
                raise DimensionMismatch(f"vertices have dimension {V.shape[1]}, expected {dim}")
            self._V = _readonly(V)
        if halfspaces is not None:
            A, b = halfspaces
            A = np.asarray(A, dtype=float).reshape(-1, dim)
            b = np.asarray(b, dtype=float).reshape(-1)
            if A.shape[0] != b.shape[0]:
                raise DimensionMismatch("halfspace normals and offsets differ in count")
            self._A = _readonly(A)
            self._b = _readonly(b)

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_points(cls, points, tol=DEFAULT_TOL):
        return hull_from_points(points, tol)

    @classmethod
    def from_halfspaces(cls, A, b, tol=DEFAULT_TOL, reduce=True):
        """H-polytope ``{x : A x <= b}`` with rows normalised to unit normals.

        With ``reduce`` the redundant rows are removed. An infeasible system
        yields an empty polytope whose ``certificate`` holds Farkas multipliers.
        """
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise DimensionMismatch("halfspace normals and offsets differ in count")
        dim = A.shape[1]
        norms = np.linalg.norm(A, axis=1)
        zero = norms <= 1e-14
        if np.any(b[zero] < -tol):
            i = int(np.flatnonzero(zero & (b < -tol))[0])
            y = np.zeros(len(b))
            y[i] = 1.0
            return cls._empty_with_certificate(dim, A, b, tol, y)
        A = A[~zero] / norms[~zero, None]
        b = b[~zero] / norms[~zero]
        if not reduce:
            return cls(dim, halfspaces=(A, b), tol=tol)
        if len(b) == 0:
            return cls(dim, halfspaces=(A, b), tol=tol)
        center, radius = _chebyshev(A, b)
        if center is None:
            y = _farkas_certificate(A, b)
            return cls._empty_with_certificate(dim, A, b, tol, y)
        keep = _irredundant_rows(A, b, center, radius, tol)
        P = cls(dim, halfspaces=(A[keep], b[keep]), tol=tol)
        P.__dict__["_chebyshev"] = (center, radius)
        return P

    @classmethod
    def _empty_with_certificate(cls, dim, A, b, tol, y):
        P = cls(dim, vertices=np.zeros((0, dim)), halfspaces=(A, b), tol=tol)
        P.certificate = y
        return P

    @classmethod
    def empty(cls, dim, tol=DEFAULT_TOL):
        return cls(dim, vertices=np.zeros((0, dim)), tol=tol)

    @classmethod
    def point(cls, x, tol=DEFAULT_TOL):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x.size, vertices=x[None, :], tol=tol)

    @classmethod
    def box(cls, lower, upper, tol=DEFAULT_TOL):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.shape != upper.shape:
            raise DimensionMismatch("box bounds differ in length")
        if np.any(lower > upper):
            raise GeometryError("box lower bound exceeds upper bound")
        d = lower.size
        A = np.vstack([np.eye(d), -np.eye(d)])
        b = np.concatenate([upper, -lower])
        corners = np.array(list(itertools.product(*zip(lower, upper))))
        V = hull_from_points(corners, tol).vertices
        return cls(d, vertices=V, halfspaces=(A, b), tol=tol)

    # -- representations ----------------------------------------------------

    @property
    def has_vrep(self):
        return self._V is not None

    @property
    def has_hrep(self):
        return self._A is not None

    @cached_property
    def vertices(self):
        """Irredundant vertex array (k x dim); raises for unbounded sets."""
        if self._V is not None:
            return self._V
        if self.is_empty:
            return _readonly(np.zeros((0, self.dim)))
        if not is_bounded(self):
            raise UnboundedError("vertex enumeration requires a bounded polyhedron")
        center, radius = self._chebyshev
        V = _vertices_from_halfspaces(self._A, self._b, center, radius, self.tol)
        if self.dim >= 3:
            # intersections of nearly parallel facets carry ~1e-8 relative error
            V = _merge_close(V, max(self.tol, 1e-7 * max(1.0, float(np.abs(V).max()))))
        return hull_from_points(V, self.tol).vertices

    @cached_property
    def halfspaces(self):
        """(A, b) with unit-norm rows such that the set is ``A x <= b``."""
        if self._A is not None:
            return self._A, self._b
        if len(self._V) == 0:
            # 0 x <= -1 encodes the empty set
            A = np.zeros((1, self.dim))
            return _readonly(A), _readonly([-1.0])
        A, b = _facets_from_vertices(self._V, self.tol)
        return _readonly(A), _readonly(b)

    @property
    def A(self):
        return self.halfspaces[0]

    @property
    def b(self):
        return self.halfspaces[1]

    @cached_property
    def _chebyshev(self):
        A, b = self.halfspaces
        return _chebyshev(A, b)

    @cached_property
    def is_empty(self):
        if self._V is not None:
            return len(self._V) == 0
        if len(self._b) == 0:
            return False
        return self._chebyshev[0] is None

    @cached_property
    def bounded(self):
        if self._V is not None:
            return True
        return is_bounded(self)

    @cached_property
    def volume(self):
        """Lebesgue measure; zero for lower-dimensional sets."""
        V = self.vertices
        if len(V) <= self.dim:
            return 0.0
        if self.dim == 1:
            return float(V.max() - V.min())
        if self.dim == 2:
            return abs(_shoelace(_ccw_order(V)))
        try:
            return float(ConvexHull(V).volume)
        except QhullError:
            return 0.0

    @property
    def n_halfspaces(self):
        return len(self.halfspaces[1])

    def contains(self, x):
        return contains(self, x)

    def contains_points(self, X):
        """Vectorised membership for the rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"points have dimension {X.shape[1]}, expected {self.dim}")
        if self.is_empty:
            return np.zeros(len(X), dtype=bool)
        A, b = self.halfspaces
        if len(b) == 0:
            return np.ones(len(X), dtype=bool)
        return np.all(X @ A.T <= b + self.tol, axis=1)

    def intersect(self, other):
        return intersect(self, other)

    def to_dict(self, include_vertices=True):
        out = {"dim": self.dim}
        if include_vertices and (self.has_vrep or self.bounded):
            out["vertices"] = self.vertices.tolist()
        A, b = self.halfspaces
        out["halfspaces"] = [
            {"normal": a.tolist(), "offset": float(o)} for a, o in zip(A, b)
        ]
        if self.is_empty:
            out["empty"] = True
            if self.certificate is not None:
                out["infeasibility_certificate"] = np.asarray(self.certificate).tolist()
        return out

    @classmethod
    def from_dict(cls, data, tol=DEFAULT_TOL):
        dim = int(data["dim"])
        V = data.get("vertices")
        H = data.get("halfspaces")
        if V is None and H is None:
            raise GeometryError("polytope JSON needs 'vertices' or 'halfspaces'")
        if H is not None:
            A = np.array([h["normal"] for h in H], dtype=float).reshape(-1, dim)
            b = np.array([h["offset"] for h in H], dtype=float)
        if V is not None:
            P = hull_from_points(np.asarray(V, dtype=float).reshape(-1, dim), tol) if len(V) else cls.empty(dim, tol)
            if H is not None:
                P = cls(dim, vertices=P.vertices, halfspaces=(A, b), tol=tol)
            return P
        return cls.from_halfspaces(A, b, tol)

    def __repr__(self):
        parts = [f"dim={self.dim}"]
        if self._V is not None:
            parts.append(f"vertices={len(self._V)}")
        if self._A is not None:
            parts.append(f"halfspaces={len(self._b)}")
        return f"Polytope({', '.join(parts)})"


# -- low-level helpers ---------------------------------------------------


def _shoelace(P):
    x, y = P[:, 0], P[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _ccw_order(V):
    c = V.mean(axis=0)
    ang = np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0])
    return V[np.argsort(ang)]


def _affine_frame(points, tol):
    """Centroid, basis of the affine hull, and basis of its orthogonal complement."""
    c = points.mean(axis=0)
    D = points - c
    if len(points) == 1:
        return c, np.zeros((points.shape[1], 0)), np.eye(points.shape[1])
    _, _, vt = np.linalg.svd(D, full_matrices=True)
    proj = D @ vt.T
    extent = proj.max(axis=0) - proj.min(axis=0)
    r = int(np.sum(extent > tol))
    # singular directions are sorted by decreasing spread
    return c, vt[:r].T, vt[r:].T


def _planar_hull(Z, tol):
    """Monotone-chain hull; drops points within ``tol`` of a hull edge. CCW indices."""
    order = np.lexsort((Z[:, 1], Z[:, 0]))

    def chain(seq):
        out = []
        for i in seq:
            while len(out) >= 2:
                o, a, b = Z[out[-2]], Z[out[-1]], Z[i]
                ob = b - o
                length = math.hypot(ob[0], ob[1])
                cross = (a[0] - o[0]) * ob[1] - (a[1] - o[1]) * ob[0]
                if length == 0.0 or cross <= tol * length:
                    out.pop()
                else:
                    break
            out.append(int(i))
        return out

    lower = chain(order)
    upper = chain(order[::-1])
    return lower[:-1] + upper[:-1]


def _extreme_indices(P, tol):
    """Indices of the extreme points of conv(P) (any affine dimension)."""
    P = np.asarray(P, dtype=float)
    c, U, _ = _affine_frame(P, tol)
    r = U.shape[1]
    if r == 0:
        return [0]
    Z = (P - c) @ U
    if r == 1:
        z = Z[:, 0]
        return [int(np.argmin(z)), int(np.argmax(z))]
    if r == 2:
        idx = _planar_hull(Z, tol)
        if len(idx) < 3:
            z = Z[:, 0]
            return [int(np.argmin(z)), int(np.argmax(z))]
        return idx
    _check_dim(r)
    try:
        return [int(i) for i in ConvexHull(Z).vertices]
    except QhullError:
        return [int(i) for i in ConvexHull(Z, qhull_options="QJ").vertices]


def _facets_from_vertices(V, tol):
    c, U, W = _affine_frame(V, tol)
    rows, offs = [], []
    for w in W.T:
        proj = V @ w
        rows += [w, -w]
        offs += [proj.max(), -proj.min()]
    r = U.shape[1]
    Z = (V - c) @ U
    if r == 1:
        u = U[:, 0]
        rows += [u, -u]
        offs += [Z[:, 0].max() + u @ c, -Z[:, 0].min() - u @ c]
    elif r == 2:
        idx = _planar_hull(Z, tol)
        ring = Z[idx]
        for p, q in zip(ring, np.roll(ring, -1, axis=0)):
            e = q - p
            n = np.array([e[1], -e[0]]) / math.hypot(e[0], e[1])
            nf = U @ n
            rows.append(nf)
            offs.append(n @ p + nf @ c)
    elif r >= 3:
        _check_dim(r)
        eq = ConvexHull(Z).equations
        eq = np.unique(np.round(eq, 12), axis=0)
        for row in eq:
            n, e = row[:-1], row[-1]
            nrm = np.linalg.norm(n)
            nf = U @ (n / nrm)
            rows.append(nf)
            offs.append(-e / nrm + nf @ c)
    A = np.array(rows, dtype=float).reshape(-1, V.shape[1])
    b = np.array(offs, dtype=float)
    return A, b


def _linprog(c, A_ub, b_ub, bounds=None, A_eq=None, b_eq=None):
    return linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                   bounds=bounds if bounds is not None else (None, None), method="highs")


def _chebyshev(A, b, cap=1.0):
    """Deepest interior point (ball radius capped at ``cap``); (None, None) if infeasible."""
    m, d = A.shape
    if m == 0:
        return np.zeros(d), cap
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = np.hstack([A, np.linalg.norm(A, axis=1)[:, None]])
    bounds = [(None, None)] * d + [(0.0, cap)]
    res = _linprog(c, A_ub, b, bounds=bounds)
    if res.status == 2:
        return None, None
    if res.status != 0:
        raise GeometryError(f"Chebyshev-centre LP failed: {res.message}")
    return res.x[:d], float(res.x[-1])


def _farkas_certificate(A, b):
    """y >= 0 with A^T y = 0, sum(y) = 1 and b^T y < 0."""
    m, d = A.shape
    A_eq = np.vstack([A.T, np.ones((1, m))])
    b_eq = np.concatenate([np.zeros(d), [1.0]])
    res = _linprog(b, None, None, bounds=[(0, None)] * m, A_eq=A_eq, b_eq=b_eq)
    if res.status == 0 and res.fun < 0:
        return res.x
    return None


def _irredundant_rows(A, b, center, radius, tol):
    m, d = A.shape
    if m == 1:
        return np.array([0])
    if radius > tol:
        # polar dual: row i is irredundant iff its dual point is a vertex of conv({0} u duals)
        slack = b - A @ center
        D = A / slack[:, None]
        pts = np.vstack([np.zeros(d), D])
        scale = float(np.abs(D).max())
        idx = _extreme_indices(pts, 1e-12 * scale)
        keep = sorted(i - 1 for i in idx if i > 0)
        return np.array(keep, dtype=int)
    # thin set: one LP per row, removing redundant rows as they are found
    active = list(range(m))
    for i in range(m):
        others = [j for j in active if j != i]
        if not others:
            continue
        res = _linprog(-A[i], A[others], b[others])
        if res.status == 0 and -res.fun <= b[i] + tol:
            active = others
    return np.array(active, dtype=int)


def _vertices_from_halfspaces(A, b, center, radius, tol):
    m, d = A.shape
    if radius is not None and radius > tol:
        if d == 1:
            a = A[:, 0]
            upper = np.min(b[a > 0] / a[a > 0])
            lower = np.max(b[a < 0] / a[a < 0])
            return np.array([[lower], [upper]])
        if d == 2:
            ang = np.arctan2(A[:, 1], A[:, 0])
            order = np.argsort(ang)
            out = []
            for i, j in zip(order, np.roll(order, -1)):
                M = np.array([A[i], A[j]])
                if abs(np.linalg.det(M)) < 1e-14:
                    continue
                out.append(np.linalg.solve(M, [b[i], b[j]]))
            return np.array(out)
        _check_dim(d)
        hs = HalfspaceIntersection(np.hstack([A, -b[:, None]]), center)
        return hs.intersections
    # lower-dimensional: brute force over d-subsets of rows
    if math.comb(m, d) > _MAX_COMBINATIONS:
        raise GeometryError("vertex enumeration of a thin polytope is too large")
    out = []
    for rows in itertools.combinations(range(m), d):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ x <= b + 10 * tol):
            out.append(x)
    if not out:
        raise GeometryError("no vertices found for a nonempty polytope")
    return np.array(out)


def _min_norm_point(P, gap_tol=1e-10, max_iter=500):
    """Wolfe's minimum-norm-point iteration over conv(rows of P).

    Returns (x, gap) where ``gap`` is the Frank-Wolfe duality gap at exit.
    """
    norms = np.einsum("ij,ij->i", P, P)
    S = [int(np.argmin(norms))]
    lam = np.array([1.0])
    x = P[S[0]].copy()
    gap = np.inf
    for _ in range(max_iter):
        scores = P @ x
        j = int(np.argmin(scores))
        gap = float(x @ x - scores[j])
        if gap <= gap_tol or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        for _ in range(max_iter):
            Q = P[S]
            k = len(S)
            M = np.zeros((k + 1, k + 1))
            M[:k, :k] = Q @ Q.T
            M[:k, k] = 1.0
            M[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            mu = np.linalg.lstsq(M, rhs, rcond=None)[0][:k]
            if np.all(mu > 1e-15):
                lam = mu
                break
            neg = mu <= 1e-15
            ratios = lam[neg] / (lam[neg] - mu[neg])
            theta = float(np.min(ratios))
            lam = (1 - theta) * lam + theta * mu
            drop = lam <= 1e-15
            drop[np.flatnonzero(neg)[np.argmin(ratios)]] = True
            S = [s for s, dd in zip(S, drop) if not dd]
            lam = lam[~drop]
            lam = lam / lam.sum()
        x = lam @ P[S]
    return x, gap


def point_distance(P, x):
    """Euclidean distance from ``x`` to the bounded polytope ``P``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (P.dim,):
        raise DimensionMismatch(f"point has shape {x.shape}, expected ({P.dim},)")
    if not P.bounded:
        raise UnboundedError("distance computation requires a bounded operand")
    V = P.vertices
    if len(V) == 0:
        raise EmptySetError("distance to an empty set is undefined")
    y, _ = _min_norm_point(V - x)
    return float(np.linalg.norm(y))


# -- public operations -------------------------------------------------------


def hull_from_points(points, tol=DEFAULT_TOL):
    """Irredundant V-rep of conv(points)."""
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if P.size == 0 or len(P) == 0:
        raise GeometryError("hull of an empty point set")
    if P.ndim != 2:
        raise DimensionMismatch("points must form a 2-D array")
    P = np.unique(P, axis=0)
    V = P[_extreme_indices(P, tol)]
    # qhull keeps clusters of near-coincident vertices from round-off
    V = _merge_close(V, tol)
    return Polytope(P.shape[1], vertices=V + 0.0, tol=tol)


def _merge_close(V, radius):
    if len(V) < 2:
        return V
    d2 = np.sum((V[:, None, :] - V[None, :, :]) ** 2, axis=2)
    keep = []
    for i in range(len(V)):
        if all(d2[i, j] > radius * radius for j in keep):
            keep.append(i)
    return V[keep]


def linear_image(P, M):
    """conv{M v : v vertex of P}."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != P.dim:
        raise DimensionMismatch(f"matrix has {M.shape[1]} columns, polytope dimension {P.dim}")
    V = P.vertices
    if len(V) == 0:
        return Polytope.empty(M.shape[0], P.tol)
    return hull_from_points(V @ M.T, P.tol)


def minkowski_sum(P, Q):
    if P.dim != Q.dim:
        raise DimensionMismatch("Minkowski sum of polytopes of different dimension")
    Vp, Vq = P.vertices, Q.vertices
    if len(Vp) == 0 or len(Vq) == 0:
        return Polytope.empty(P.dim, max(P.tol, Q.tol))
    S = (Vp[:, None, :] + Vq[None, :, :]).reshape(-1, P.dim)
    return hull_from_points(S, max(P.tol, Q.tol))


def contains(P, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (P.dim,):
        raise DimensionMismatch(f"point has shape {x.shape}, expected ({P.dim},)")
    return bool(P.contains_points(x[None, :])[0])


def intersect(P, Q):
    if P.dim != Q.dim:
        raise DimensionMismatch("intersection of polytopes of different dimension")
    A = np.vstack([P.A, Q.A])
    b = np.concatenate([P.b, Q.b])
    return Polytope.from_halfspaces(A, b, max(P.tol, Q.tol))


def is_subset(P, Q):
    """P ⊆ Q, tested on the vertices of P with Q's half-spaces relaxed by tol."""
    if P.dim != Q.dim:
        raise DimensionMismatch("subset test between polytopes of different dimension")
    if not P.has_vrep and not P.bounded:
        raise UnboundedError("subset test requires bounded operand")
    V = P.vertices
    if len(V) == 0:
        return True
    tol = max(P.tol, Q.tol)
    if Q.is_empty:
        return False
    A, b = Q.halfspaces
    return bool(np.all(V @ A.T <= b + tol))


def is_bounded(P):
    """True iff every coordinate is bounded above and below on P (2·dim LPs)."""
    if P.has_vrep:
        return True
    A, b = P.halfspaces
    if len(b) == 0:
        return False
    for i in range(P.dim):
        for sign in (1.0, -1.0):
            c = np.zeros(P.dim)
            c[i] = -sign
            res = _linprog(c, A, b)
            if res.status == 2:
                raise EmptySetError("boundedness of an empty polyhedron is undefined")
            if res.status == 3:
                return False
            if res.status != 0:
                raise GeometryError(f"boundedness LP failed: {res.message}")
    return True


def hausdorff(P, Q):
    """Hausdorff distance between two bounded polytopes."""
    if P.dim != Q.dim:
        raise DimensionMismatch("Hausdorff distance between different dimensions")
    for S in (P, Q):
        if not S.bounded:
            raise UnboundedError("Hausdorff distance requires bounded operands")
    Vp, Vq = P.vertices, Q.vertices
    if len(Vp) == 0 or len(Vq) == 0:
        raise EmptySetError("Hausdorff distance with an empty set")
    d1 = max(float(np.linalg.norm(_min_norm_point(Vq - v)[0])) for v in Vp)
    d2 = max(float(np.linalg.norm(_min_norm_point(Vp - w)[0])) for w in Vq)
    return max(d1, d2)


@dataclass(frozen=True)
class BallApprox:
    """Circumscribed polytope of the Euclidean ball of ``radius`` (facet normals in ``facets``)."""

    dim: int
    radius: float
    facets: np.ndarray

    @property
    def resolution(self):
        """Relative excess of the circumscribed polytope over the ball."""
        P = ball_polytope(self.dim, 1.0, self.facets)
        return float(np.max(np.linalg.norm(P.vertices, axis=1)) - 1.0)

    def polytope(self, tol=DEFAULT_TOL):
        return ball_polytope(self.dim, self.radius, self.facets, tol)


def ball_approx(dim, radius, n_facets=64, seed=0):
    """BallApprox with a regular ``n_facets``-gon in 2-D, a spread direction set otherwise."""
    if radius < 0:
        raise GeometryError("ball radius must be nonnegative")
    if dim == 1:
        facets = np.array([[1.0], [-1.0]])
    elif dim == 2:
        ang = 2 * np.pi * np.arange(n_facets) / n_facets
        facets = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        _check_dim(dim)
        rng = np.random.default_rng(seed)
        F = rng.standard_normal((n_facets, dim))
        F = np.vstack([np.eye(dim), -np.eye(dim), F])
        facets = F / np.linalg.norm(F, axis=1, keepdims=True)
    return BallApprox(dim, float(radius), facets)


def ball_polytope(dim, radius, facets, tol=DEFAULT_TOL):
    if radius == 0:
        return Polytope.point(np.zeros(dim), tol)
    facets = np.asarray(facets, dtype=float)
    if dim == 2:
        n = len(facets)
        ang = np.arctan2(facets[:, 1], facets[:, 0])
        if np.allclose(np.diff(np.sort(ang)), 2 * np.pi / n):
            # regular polygon: vertices in closed form
            va = np.sort(ang) + np.pi / n
            R = radius / math.cos(np.pi / n)
            V = R * np.column_stack([np.cos(va), np.sin(va)])
            return Polytope(2, vertices=V, halfspaces=(facets, np.full(n, radius)), tol=tol)
    P = Polytope.from_halfspaces(facets, np.full(len(facets), radius), tol)
    return Polytope(dim, vertices=P.vertices, halfspaces=P.halfspaces, tol=tol)
