"""Synthetic experiments, Gaussian likelihood and posteriors over output parameters."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lti import ParameterDomain, regressors


class BayesError(ValueError):
    pass


def _as_cov(sigma, p):
    S = np.atleast_2d(np.asarray(sigma, dtype=float))
    if S.shape == (1, 1) and p > 1:
        S = S[0, 0] * np.eye(p)
    if S.shape != (p, p):
        raise BayesError(f"noise covariance must be {p}x{p}, got {S.shape}")
    if not np.allclose(S, S.T, rtol=0, atol=1e-14 * max(1.0, np.abs(S).max())):
        raise BayesError("noise covariance must be symmetric")
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise BayesError("noise covariance must be positive definite") from None
    return S


def make_rng(seed):
    """PCG64 generator from an int, a sequence of ints, or a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class Dataset:
    u: np.ndarray  # (N_s, m)
    y: np.ndarray  # (N_s, p)
    x0: np.ndarray
    sigma_e: np.ndarray  # (p, p)
    seed: object = None
    theta0: np.ndarray | None = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.u.ndim == 1:
            self.u = self.u[:, None]
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        if len(self.u) != len(self.y):
            raise BayesError("input and output sequences differ in length")
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        self.sigma_e = _as_cov(self.sigma_e, self.y.shape[1])

    @property
    def n_samples(self):
        return len(self.y)

    def to_csv(self, path):
        m, p = self.u.shape[1], self.y.shape[1]
        ucols = ["u"] if m == 1 else [f"u{i}" for i in range(m)]
        ycols = ["y_measured"] if p == 1 else [f"y_measured{i}" for i in range(p)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + ucols + ycols)
            for t in range(self.n_samples):
                w.writerow([t] + [repr(float(v)) for v in self.u[t]] + [repr(float(v)) for v in self.y[t]])

    def metadata(self):
        meta = {"x0": self.x0.tolist(), "sigma_e": self.sigma_e.tolist()}
        if self.seed is not None:
            meta["seed"] = self.seed
        if self.theta0 is not None:
            meta["theta0"] = np.asarray(self.theta0, dtype=float).tolist()
        return meta

    def save(self, csv_path, meta_path=None):
        self.to_csv(csv_path)
        meta_path = meta_path or str(csv_path) + ".json"
        with open(meta_path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, csv_path, meta_path=None):
        meta_path = meta_path or str(csv_path) + ".json"
        with open(meta_path) as fh:
            meta = json.load(fh)
        with open(csv_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise BayesError("dataset CSV has no rows")
        ucols = [c for c in rows[0] if c == "u" or (c.startswith("u") and c[1:].isdigit())]
        ycols = [c for c in rows[0] if c.startswith("y_measured")]
        if not ucols or not ycols:
            raise BayesError("dataset CSV needs u and y_measured columns")
        u = np.array([[float(r[c]) for c in ucols] for r in rows])
        y = np.array([[float(r[c]) for c in ycols] for r in rows])
        theta0 = meta.get("theta0")
        return cls(u, y, meta.get("x0", np.zeros(0)), meta["sigma_e"], meta.get("seed"),
                   None if theta0 is None else np.asarray(theta0))


def sample_experiment(ms, theta0, x0=None, input_law=("uniform", -0.2, 0.2), n_samples=200,
                      sigma_e=0.5, seed=0):
    """Simulated experiment y = y(θ0) + white Gaussian noise of covariance ``sigma_e``.

    ``input_law`` is ("uniform", lo, hi) or an explicit (N_s, m) input array.
    Inputs are drawn first, then the noise, from one PCG64 stream.
    """
    if n_samples < 1:
        raise BayesError("an experiment needs at least one sample")
    S = _as_cov(sigma_e, ms.p)
    theta0 = ms.check_theta(theta0)
    x0 = np.zeros(ms.n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    rng = make_rng(seed)
    if isinstance(input_law, (tuple, list)) and len(input_law) == 3 and input_law[0] == "uniform":
        _, lo, hi = input_law
        u = rng.uniform(lo, hi, size=(n_samples, ms.m))
    else:
        u = np.asarray(input_law, dtype=float).reshape(n_samples, ms.m)
    Phi = regressors(ms, x0, u)
    y0 = (Phi @ theta0).reshape(n_samples, ms.p)
    noise = rng.standard_normal((n_samples, ms.p)) @ np.linalg.cholesky(S).T
    seed_meta = seed if isinstance(seed, (int, list)) else None
    return Dataset(u, y0 + noise, x0, S, seed_meta, theta0)


def _design(ds, ms):
    """Regressor Φ and stacked measurements."""
    if ds.x0.size != ms.n:
        raise BayesError("the experiment's initial state must be known and match the model")
    Phi = regressors(ms, ds.x0, ds.u)
    y = ds.y.reshape(-1)
    return Phi, y


def information(ds, ms):
    """(ΦᵀW Φ, ΦᵀW y) with W = I ⊗ Σ_e⁻¹."""
    Phi, y = _design(ds, ms)
    Si = np.linalg.inv(ds.sigma_e)
    p = ms.p
    Pr = Phi.reshape(ds.n_samples, p, -1)
    yr = y.reshape(ds.n_samples, p)
    J = np.einsum("tai,ab,tbj->ij", Pr, Si, Pr)
    h = np.einsum("tai,ab,tb->i", Pr, Si, yr)
    return J, h


def log_likelihood(theta, ds, ms):
    """Gaussian log density of the measured outputs given θ."""
    theta = ms.check_theta(theta)
    Phi, y = _design(ds, ms)
    p = ms.p
    r = (Phi @ theta - y).reshape(ds.n_samples, p)
    Si = np.linalg.inv(ds.sigma_e)
    quad = float(np.einsum("ta,ab,tb->", r, Si, r))
    _, logdet = np.linalg.slogdet(ds.sigma_e)
    N = ds.n_samples
    return -0.5 * quad - 0.5 * N * logdet - 0.5 * p * N * math.log(2 * math.pi)


@dataclass(frozen=True)
class GaussianPrior:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise BayesError("prior covariance does not match the mean")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise BayesError("prior covariance must be positive definite") from None
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class UniformBox:
    domain: ParameterDomain


@dataclass
class UniformPosterior:
    """Uniform density on a box (a box prior with no data)."""

    domain: ParameterDomain

    @property
    def dim(self):
        return self.domain.dim

    def density(self, theta):
        theta = np.atleast_2d(theta)
        inside = np.all((theta >= self.domain.lower) & (theta <= self.domain.upper), axis=1)
        return inside / self.domain.volume

    def sample(self, rng, n):
        return rng.uniform(self.domain.lower, self.domain.upper, size=(n, self.dim))


@dataclass
class GaussianPosterior:
    """N(mean, cov), optionally truncated to (and renormalised on) ``box``."""

    mean: np.ndarray
    cov: np.ndarray
    box: ParameterDomain | None = None

    @property
    def dim(self):
        return self.mean.size

    def untruncated_density(self, theta):
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        L = np.linalg.cholesky(self.cov)
        z = np.linalg.solve(L, (theta - self.mean).T)
        logn = -0.5 * np.sum(z * z, axis=0) - np.sum(np.log(np.diag(L))) - 0.5 * self.dim * math.log(2 * math.pi)
        return np.exp(logn)

    def density(self, theta):
        dens = self.untruncated_density(theta)
        if self.box is None:
            return dens
        from .confidence import gaussian_box_mass

        theta = np.atleast_2d(theta)
        inside = np.all((theta >= self.box.lower) & (theta <= self.box.upper), axis=1)
        return np.where(inside, dens / gaussian_box_mass(self), 0.0)

    def sample(self, rng, n, max_rounds=1000):
        L = np.linalg.cholesky(self.cov)
        if self.box is None:
            return self.mean + rng.standard_normal((n, self.dim)) @ L.T
        out = []
        have = 0
        for _ in range(max_rounds):
            Z = self.mean + rng.standard_normal((n, self.dim)) @ L.T
            ok = np.all((Z >= self.box.lower) & (Z <= self.box.upper), axis=1)
            out.append(Z[ok])
            have += int(ok.sum())
            if have >= n:
                return np.vstack(out)[:n]
        raise BayesError("truncated Gaussian sampler: acceptance rate too low")


def posterior_gaussian(prior, ds, ms):
    """Closed-form posterior for a Gaussian, flat (None) or uniform-box prior.

    A box prior yields the flat-prior Gaussian truncated to the box.
    """
    d = ms.theta_dim
    if ds.n_samples == 0:
        J, h = np.zeros((d, d)), np.zeros(d)
    else:
        J, h = information(ds, ms)
    if isinstance(prior, GaussianPrior):
        if prior.mean.size != d:
            raise BayesError("prior dimension does not match the model")
        Ri = np.linalg.inv(prior.cov)
        cov = np.linalg.inv(Ri + J)
        cov = 0.5 * (cov + cov.T)
        return GaussianPosterior(cov @ (Ri @ prior.mean + h), cov)
    if prior is None or isinstance(prior, UniformBox):
        box = None if prior is None else prior.domain
        if box is not None and ds.n_samples == 0:
            return UniformPosterior(box)
        if np.linalg.matrix_rank(J) < d:
            raise BayesError("information matrix is singular: the data do not identify θ under a flat prior")
        cov = np.linalg.inv(J)
        cov = 0.5 * (cov + cov.T)
        mean = np.linalg.solve(J, h)
        return GaussianPosterior(mean, cov, box)
    raise BayesError(f"unsupported prior {prior!r}")


def trapezoid_weights(axes):
    """Tensor-product trapezoid weights for a rectilinear grid."""
    ws = []
    for ax in axes:
        h = np.diff(ax)
        w = np.zeros(len(ax))
        w[:-1] += h / 2
        w[1:] += h / 2
        ws.append(w)
    W = ws[0]
    for w in ws[1:]:
        W = np.multiply.outer(W, w)
    return W


@dataclass
class GridPosterior:
    """Density tabulated on a rectilinear grid over a box, zero outside."""

    domain: ParameterDomain
    axes: list
    density_values: np.ndarray  # normalised density at grid nodes
    log_normaliser: float
    extra: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.domain.dim

    @property
    def resolution(self):
        return tuple(len(a) for a in self.axes)

    def nodes(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=1)

    def weights(self):
        return trapezoid_weights(self.axes)

    def density(self, theta):
        """Multilinear interpolation of the tabulated density."""
        from scipy.interpolate import RegularGridInterpolator

        f = RegularGridInterpolator(self.axes, self.density_values, bounds_error=False, fill_value=0.0)
        return f(np.atleast_2d(theta))

    def sample(self, rng, n):
        """Inverse-CDF sampling over grid cells, uniform within a cell."""
        # cell mass from the average of its corner densities
        dens = self.density_values
        for ax in range(self.dim):
            dens = 0.5 * (np.take(dens, range(dens.shape[ax] - 1), axis=ax)
                          + np.take(dens, range(1, dens.shape[ax]), axis=ax))
        vol = np.ones_like(dens)
        for ax, a in enumerate(self.axes):
            shape = [1] * self.dim
            shape[ax] = -1
            vol = vol * np.diff(a).reshape(shape)
        p = (dens * vol).reshape(-1)
        cdf = np.cumsum(p)
        cdf /= cdf[-1]
        idx = np.searchsorted(cdf, rng.random(n), side="right")
        idx = np.minimum(idx, len(cdf) - 1)
        sub = np.unravel_index(idx, dens.shape)
        out = np.empty((n, self.dim))
        for ax, a in enumerate(self.axes):
            lo = a[sub[ax]]
            hi = a[sub[ax] + 1]
            out[:, ax] = lo + (hi - lo) * rng.random(n)
        return out


def posterior_numeric(prior, ds, ms, resolution=201, chunk=8192):
    """Grid posterior for a uniform-box prior (θ dimension at most 3)."""
    if not isinstance(prior, UniformBox):
        raise BayesError("grid posterior needs a uniform-box prior")
    dom = prior.domain
    d = ms.theta_dim
    if dom.dim != d:
        raise BayesError("prior box dimension does not match the model")
    if d > 3:
        raise BayesError("grid posterior supports at most 3 parameters; use Monte Carlo confidence instead")
    if resolution < 51:
        raise BayesError("grid resolution must be at least 51 per axis")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(dom.lower, dom.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in mesh], axis=1)
    if ds.n_samples == 0:
        ll = np.zeros(len(nodes))
    else:
        Phi, y = _design(ds, ms)
        Si = np.linalg.inv(ds.sigma_e)
        p = ms.p
        ll = np.empty(len(nodes))
        for s in range(0, len(nodes), chunk):
            R = (nodes[s:s + chunk] @ Phi.T - y).reshape(-1, ds.n_samples, p)
            ll[s:s + chunk] = -0.5 * np.einsum("gta,ab,gtb->g", R, Si, R)
    ll = ll.reshape(mesh[0].shape)
    peak = float(ll.max())
    w = trapezoid_weights(axes)
    Z = float(np.sum(w * np.exp(ll - peak)))
    dens = np.exp(ll - peak) / Z
    return GridPosterior(dom, axes, dens, peak + math.log(Z))
