"""Posterior mass of feasible parameter sets, and its evolution with the horizon."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtr

from .bayes import GaussianPosterior, GridPosterior, UniformPosterior, make_rng
from .geometry import DEFAULT_TOL, Polytope, intersect
from .lti import ParameterDomain

METHODS = ("polygon_exact", "quadrature", "grid", "monte_carlo")


class ConfidenceError(ValueError):
    pass


@dataclass(frozen=True)
class ConfidenceResult:
    value: float
    method: str
    error_estimate: float
    samples_used: int = 0

    def to_dict(self):
        return asdict(self)


def _ccw(V):
    c = V.mean(axis=0)
    return V[np.argsort(np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]))]


def _clip(F, domain):
    return intersect(F, domain.polytope(F.tol))


def polygon_exact(feasible, domain):
    """Uniform-prior mass: area(feasible ∩ box) / area(box)."""
    if feasible.dim != 2 or domain.dim != 2:
        raise ConfidenceError("polygon_exact needs a 2-D parameter space")
    if feasible.is_empty:
        return ConfidenceResult(0.0, "polygon_exact", 0.0)
    clipped = _clip(feasible, domain)
    if clipped.is_empty:
        return ConfidenceResult(0.0, "polygon_exact", 0.0)
    V = clipped.vertices
    if len(V) < 3:
        return ConfidenceResult(0.0, "polygon_exact", 0.0)
    P = _ccw(V)
    x, y = P[:, 0], P[:, 1]
    area = 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
    value = min(1.0, area / domain.volume)
    return ConfidenceResult(value, "polygon_exact", 0.0)


def _chords(P, z2):
    """x-extent of the convex polygon P (CCW vertices) on each horizontal line z2."""
    a = P
    b = np.roll(P, -1, axis=0)
    dy = b[:, 1] - a[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (z2[:, None] - a[None, :, 1]) / dy[None, :]
    ok = (dy[None, :] != 0) & (t >= 0) & (t <= 1)
    x = a[None, :, 0] + t * (b[:, 0] - a[:, 0])[None, :]
    lo = np.where(ok, x, np.inf).min(axis=1)
    hi = np.where(ok, x, -np.inf).max(axis=1)
    return lo, np.maximum(hi, lo)


def _std_normal_polygon_mass(P, max_panel=0.5, n_nodes=16, cutoff=10.0):
    """Standard bivariate normal mass of a convex polygon, with an error estimate.

    The inner integral over each horizontal chord is exact (normal CDFs); the
    outer one uses Gauss-Legendre panels split at vertex heights.
    """
    lo_y = max(P[:, 1].min(), -cutoff)
    hi_y = min(P[:, 1].max(), cutoff)
    if hi_y <= lo_y:
        return 0.0, 0.0
    breaks = np.unique(np.concatenate([[lo_y, hi_y], P[:, 1][(P[:, 1] > lo_y) & (P[:, 1] < hi_y)]]))
    edges = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        k = max(1, int(math.ceil((b - a) / max_panel)))
        edges.extend(np.linspace(a, b, k + 1)[1:])
    edges = np.array(edges)
    a, b = edges[:-1], edges[1:]

    def rule(n):
        x, w = np.polynomial.legendre.leggauss(n)
        z = (0.5 * (b - a)[:, None] * (x[None, :] + 1) + a[:, None]).reshape(-1)
        ww = (0.5 * (b - a)[:, None] * w[None, :]).reshape(-1)
        lo, hi = _chords(P, z)
        f = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * (ndtr(hi) - ndtr(lo))
        return float(np.dot(ww, f))

    fine = rule(n_nodes)
    coarse = rule(n_nodes // 2)
    return fine, abs(fine - coarse)


def gaussian_polytope_mass(mean, cov, F):
    """(mass, error) of N(mean, cov) over the 2-D polytope F (possibly unbounded)."""
    mean = np.asarray(mean, dtype=float)
    if F.is_empty:
        return 0.0, 0.0
    sd = np.sqrt(np.diag(cov))
    # the ±12σ box holds all but e^-72 of the mass
    window = ParameterDomain(mean - 12 * sd, mean + 12 * sd)
    clipped = _clip(F, window)
    if clipped.is_empty or len(clipped.vertices) < 3:
        return 0.0, 0.0
    L = np.linalg.cholesky(cov)
    Z = np.linalg.solve(L, (clipped.vertices - mean).T).T
    return _std_normal_polygon_mass(_ccw(Z))


def gaussian_box_mass(post):
    if post.box is None:
        return 1.0
    return gaussian_polytope_mass(post.mean, post.cov, post.box.polytope())[0]


def _gaussian_1d(post, F):
    A, b = F.halfspaces
    a = A[:, 0]
    lo, hi = -np.inf, np.inf
    if np.any(a > 0):
        hi = float(np.min(b[a > 0] / a[a > 0]))
    if np.any(a < 0):
        lo = float(np.max(b[a < 0] / a[a < 0]))
    s = math.sqrt(post.cov[0, 0])
    m = post.mean[0]
    if post.box is not None:
        lo = max(lo, post.box.lower[0])
        hi = min(hi, post.box.upper[0])
    if hi <= lo:
        return 0.0
    mass = ndtr((hi - m) / s) - ndtr((lo - m) / s)
    if post.box is not None:
        mass /= ndtr((post.box.upper[0] - m) / s) - ndtr((post.box.lower[0] - m) / s)
    return float(mass)


def gaussian_confidence(post, feasible):
    if feasible.is_empty:
        return ConfidenceResult(0.0, "quadrature", 0.0)
    if post.dim == 1:
        return ConfidenceResult(min(1.0, _gaussian_1d(post, feasible)), "quadrature", 1e-15)
    if post.dim != 2:
        raise ConfidenceError("quadrature is implemented for one or two parameters")
    F = feasible if post.box is None else _clip(feasible, post.box)
    num, err = gaussian_polytope_mass(post.mean, post.cov, F)
    if post.box is None:
        return ConfidenceResult(min(1.0, num), "quadrature", err)
    den, err_d = gaussian_polytope_mass(post.mean, post.cov, post.box.polytope())
    if den <= 0:
        raise ConfidenceError("posterior puts no mass on its truncation box")
    value = min(1.0, num / den)
    return ConfidenceResult(value, "quadrature", (err + value * err_d) / den)


def grid_confidence(post, feasible):
    """Trapezoid-weighted sum of the tabulated density over nodes inside the set."""
    if feasible.is_empty:
        return ConfidenceResult(0.0, "grid", 0.0)
    nodes = post.nodes()
    inside = feasible.contains_points(nodes).reshape(post.density_values.shape)

    def mass(step):
        sl = tuple(slice(None, None, step) for _ in range(post.dim))
        axes = [a[::step] for a in post.axes]
        from .bayes import trapezoid_weights

        w = trapezoid_weights(axes) * post.density_values[sl]
        return float(np.sum(w[inside[sl]]) / np.sum(w))

    fine = mass(1)
    coarse = mass(2)
    return ConfidenceResult(min(1.0, fine), "grid", abs(fine - coarse))


def monte_carlo(post, feasible, seed=0, n_samples=10**6, chunk=2**16):
    """Membership fraction of posterior samples; per-chunk streams spawned from ``seed``."""
    if feasible.is_empty:
        return ConfidenceResult(0.0, "monte_carlo", 0.0, 0)
    n_chunks = max(1, math.ceil(n_samples / chunk))
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    hits = 0
    left = n_samples
    for ss in streams:
        k = min(chunk, left)
        X = post.sample(make_rng(ss), k)
        hits += int(np.count_nonzero(feasible.contains_points(X)))
        left -= k
    v = hits / n_samples
    return ConfidenceResult(v, "monte_carlo", math.sqrt(v * (1 - v) / n_samples), n_samples)


def default_method(post):
    if isinstance(post, UniformPosterior):
        return "polygon_exact" if post.dim == 2 else "monte_carlo"
    if isinstance(post, GaussianPosterior):
        return "quadrature" if post.dim <= 2 else "monte_carlo"
    if isinstance(post, GridPosterior):
        return "grid"
    raise ConfidenceError(f"unsupported posterior {type(post).__name__}")


def confidence(post, feasible, method=None, seed=0, n_samples=10**6):
    """Posterior probability that θ lies in ``feasible``."""
    if feasible.dim != post.dim:
        raise ConfidenceError("feasible set and posterior differ in dimension")
    method = method or default_method(post)
    if method == "polygon_exact":
        if not isinstance(post, UniformPosterior):
            raise ConfidenceError("polygon_exact applies only to a uniform posterior")
        return polygon_exact(feasible, post.domain)
    if method == "quadrature":
        if not isinstance(post, GaussianPosterior):
            raise ConfidenceError("quadrature applies only to a Gaussian posterior")
        return gaussian_confidence(post, feasible)
    if method == "grid":
        if not isinstance(post, GridPosterior):
            raise ConfidenceError("grid method applies only to a grid posterior")
        return grid_confidence(post, feasible)
    if method == "monte_carlo":
        return monte_carlo(post, feasible, seed, n_samples)
    raise ConfidenceError(f"unknown confidence method {method!r}")


@dataclass
class TracePoint:
    k: int
    feasible: Polytope
    result: ConfidenceResult


def _boundary_stop(post, F, eps_th, tol):
    """ε_θ · max density on the boundary · boundary length < tol (2-D only)."""
    if F.dim != 2 or not np.isfinite(eps_th):
        return False
    P = _ccw(F.vertices)
    nxt = np.roll(P, -1, axis=0)
    t = np.linspace(0, 1, 33)[:, None, None]
    pts = (P[None] * (1 - t) + nxt[None] * t).reshape(-1, 2)
    dmax = float(np.max(post.density(pts)))
    perimeter = float(np.sum(np.linalg.norm(nxt - P, axis=1)))
    return eps_th * dmax * perimeter < tol


def confidence_trace(post, ms, setup, psi, k_range, domain=None, method=None, seed=0,
                     n_samples=10**6, stop_tol=None, tol=DEFAULT_TOL):
    """Confidence of G[k] psi for each k in ``k_range`` (nested sets, so non-increasing).

    With ``stop_tol`` the trace ends once the boundary heuristic says the
    remaining change is below ``stop_tol``.
    """
    from .logic.compile import compile_formula, feasible_set
    from .logic.formula import atomic_propositions
    from .logic.invariance import _extended_vertices
    from .reach import eps_reach, eps_theta, label_precision, reach

    model, Xv, Uv = _extended_vertices(ms, setup)
    model.require_stable()
    ks = sorted(k_range)
    if not ks or ks[0] < 0:
        raise ValueError("k_range must hold nonnegative integers")
    cs = compile_formula(psi, model, Uv)
    X0 = Polytope.from_points(Xv, tol)
    seq = reach(model, setup.U_ver, X0=X0, k=ks[-1], tube=True, tol=tol)
    out = []
    eps_p = None
    for k in ks:
        F = feasible_set(cs, seq.sets[k].vertices, domain, tol)
        res = confidence(post, F, method, seed, n_samples)
        out.append(TracePoint(k, F, res))
        if stop_tol is not None and k >= 1 and not F.is_empty and F.bounded:
            if eps_p is None:
                eps_p = label_precision(atomic_propositions(psi))
            try:
                et = eps_theta(eps_reach(model, setup.U_ver, k, X0, x0_term="rigorous"), eps_p,
                               feasible_set(cs, seq.sets[k].vertices, None, tol))
            except ValueError:
                continue
            if _boundary_stop(post, F, et, stop_tol):
                break
    return out
