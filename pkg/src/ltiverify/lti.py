"""Linearly parameterised LTI model sets.

A model set fixes the state dynamics ``x(t+1) = A x(t) + B u(t)`` and leaves
the output map free: ``y(t) = C(θ) x(t)`` (plus ``D(θ) u(t)`` when the
feed-through is parameterised). ``θ`` stacks ``C`` (or ``[C D]``) column by
column, so for scalar outputs ``y(t) = θᵀ x(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    pass


class StabilityError(ModelError):
    pass


@dataclass(frozen=True)
class LtiModelSet:
    A: np.ndarray
    B: np.ndarray
    p: int = 1
    d_parameterised: bool = False
    # set by augment_d: the verification vertex set must be X_ver × U_ver
    needs_input_extension: bool = field(default=False, compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if A.shape[0] != A.shape[1]:
            raise ModelError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ModelError(f"B has {B.shape[0]} rows, A has {A.shape[0]}")
        if self.p < 1:
            raise ModelError("output dimension must be positive")
        A.flags.writeable = False
        B.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def theta_dim(self):
        return self.p * (self.n + self.m) if self.d_parameterised else self.p * self.n

    def output_matrices(self, theta):
        """Return (C, D) for a parameter vector; D is None for strictly proper sets."""
        theta = self.check_theta(theta)
        cols = self.n + self.m if self.d_parameterised else self.n
        M = theta.reshape(cols, self.p).T
        if self.d_parameterised:
            return M[:, : self.n], M[:, self.n :]
        return M, None

    def check_theta(self, theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.theta_dim:
            raise ModelError(f"parameter vector has length {theta.size}, expected {self.theta_dim}")
        return theta

    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))

    def require_stable(self):
        rho = self.spectral_radius()
        if rho >= 1.0:
            raise StabilityError(f"spectral radius {rho:.6g} is not below 1")
        return rho

    def to_dict(self):
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "p": self.p,
            "d_parameterised": self.d_parameterised,
        }


@dataclass(frozen=True)
class ParameterDomain:
    """Axis-aligned box of admissible parameters."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise ModelError("domain bounds differ in length")
        if np.any(lo >= hi):
            raise ModelError("domain lower bounds must be below upper bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    @property
    def volume(self):
        return float(np.prod(self.upper - self.lower))

    def polytope(self, tol=1e-9):
        from .geometry import Polytope

        return Polytope.box(self.lower, self.upper, tol)


def laguerre_set(a, order=2):
    """Laguerre-basis model set: a first-order section followed by all-pass sections.

    Order 2 gives A = [[a, 0], [1-a², a]], B = [√(1-a²), -a√(1-a²)].
    """
    if not abs(a) < 1:
        raise StabilityError(f"Laguerre pole must satisfy |a| < 1, got {a}")
    order = int(order)
    if order < 1:
        raise ModelError("Laguerre order must be positive")
    s = math.sqrt(1.0 - a * a)
    A = np.zeros((order, order))
    B = np.zeros(order)
    A[0, 0] = a
    B[0] = s
    for k in range(1, order):
        # x_k(t+1) = a x_k(t) + x_{k-1}(t) - a x_{k-1}(t+1)
        A[k] = -a * A[k - 1]
        A[k, k] += a
        A[k, k - 1] += 1.0
        B[k] = -a * B[k - 1]
    return LtiModelSet(A, B)


def fir_set(n):
    """Shift register whose parameters are the first ``n`` impulse-response taps."""
    if n < 1:
        raise ModelError("FIR length must be positive")
    A = np.eye(n, k=-1)
    B = np.zeros(n)
    B[0] = 1.0
    return LtiModelSet(A, B)


def _inputs(ms, u):
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None] if ms.m == 1 else u[None, :]
    if u.shape[1] != ms.m:
        raise ModelError(f"inputs have dimension {u.shape[1]}, expected {ms.m}")
    return u


def states(ms, x0, u):
    """State trajectory x(0..T-1) for inputs u(0..T-1), shape (T, n)."""
    u = _inputs(ms, u)
    x = np.zeros(ms.n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x.size != ms.n:
        raise ModelError(f"initial state has length {x.size}, expected {ms.n}")
    X = np.empty((len(u), ms.n))
    for t in range(len(u)):
        X[t] = x
        x = ms.A @ x + ms.B @ u[t]
    return X


def regressors(ms, x0, u):
    """Stacked regressor Φ with rows such that y = Φ θ, shape (T·p, theta_dim)."""
    u = _inputs(ms, u)
    Z = states(ms, x0, u)
    if ms.d_parameterised:
        Z = np.hstack([Z, u])
    # vec(C z) = (zᵀ ⊗ I_p) vec(C)
    return np.einsum("tj,ik->tijk", Z, np.eye(ms.p)).reshape(len(u) * ms.p, -1)


def simulate(ms, theta, x0=None, u=()):
    """Noise-free outputs y(0..T-1); shape (T,) for scalar outputs, else (T, p)."""
    theta = ms.check_theta(theta)
    u = _inputs(ms, u)
    y = (regressors(ms, x0, u) @ theta).reshape(len(u), ms.p)
    return y[:, 0] if ms.p == 1 else y


def augment_d(ms):
    """Strictly proper model set whose appended state carries the current input.

    The augmented state is (x(t), u(t)) and its input at time t is u(t+1);
    use ``augmented_inputs`` and the initial state (x0, u(0)).
    """
    if not ms.d_parameterised:
        raise ModelError("augment_d applies only to models with a parameterised D")
    n, m = ms.n, ms.m
    A = np.zeros((n + m, n + m))
    A[:n, :n] = ms.A
    A[:n, n:] = ms.B
    B = np.zeros((n + m, m))
    B[n:, :] = np.eye(m)
    return LtiModelSet(A, B, p=ms.p, d_parameterised=False, needs_input_extension=True)


def augmented_inputs(ms, x0, u):
    """(initial state, input sequence) driving the augmented model like (x0, u) drives ``ms``."""
    u = _inputs(ms, u)
    x0 = np.zeros(ms.n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    z0 = np.concatenate([x0, u[0]])
    shifted = np.vstack([u[1:], np.zeros((1, ms.m))])
    return z0, shifted


def model_from_dict(data):
    if "laguerre" in data:
        spec = data["laguerre"]
        return laguerre_set(float(spec["a"]), int(spec.get("order", 2)))
    if "fir" in data:
        return fir_set(int(data["fir"]["n"]))
    if "A" not in data or "B" not in data:
        raise ModelError("model JSON needs 'A' and 'B', or a 'laguerre'/'fir' shortcut")
    return LtiModelSet(
        np.asarray(data["A"], dtype=float),
        np.asarray(data["B"], dtype=float),
        p=int(data.get("p", 1)),
        d_parameterised=bool(data.get("d_parameterised", False)),
    )
