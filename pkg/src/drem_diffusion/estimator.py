"""
Diffusion estimators built on the scalar DREM regressions.

Both variants update every dimension independently. Combine-then-adapt
(CTA) first mixes neighbour estimates with ``A(k)`` and then corrects the
mixed value with the local innovation; adapt-then-combine (ATC) does the
correction first and mixes afterwards. All sensors read the pre-step state.

Estimates may carry leading batch axes (one per Monte Carlo trial): shape
``(..., n, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .drem import DremBank, DremWindow, adjugate, determinant
from .graph import WeightedDigraph, validate

CTA = "cta"
ATC = "atc"
VARIANTS = (CTA, ATC)


@dataclass(frozen=True)
class StepsizeSchedule:
    """``alpha(k) = min(1, c / (k + k0)**p)`` or a constant (diagnostics only)."""

    c: float = 1.0
    k0: float = 1.0
    p: float = 1.0
    family: str = "power"

    def __post_init__(self):
        if self.family not in ("power", "constant"):
            raise ValueError(f"unknown stepsize family {self.family!r}")
        if self.c <= 0:
            raise ValueError("stepsize constant c must be positive")
        if self.family == "power":
            if self.k0 < 1:
                raise ValueError("stepsize offset k0 must be at least 1")
            if not 0.5 < self.p <= 1:
                raise ValueError("stepsize exponent p must lie in (1/2, 1]")
        elif self.c > 1:
            raise ValueError("constant stepsize must lie in (0, 1]")

    @property
    def square_summable(self) -> bool:
        return self.family == "power"

    def __call__(self, k: int) -> float:
        return alpha(self, k)

    def to_dict(self):
        return {"family": self.family, "c": self.c, "k0": self.k0, "p": self.p}


def alpha(s: StepsizeSchedule, k: int) -> float:
    if k < 0:
        raise ValueError("time index must be non-negative")
    if s.family == "constant":
        return float(s.c)
    return min(1.0, s.c / (k + s.k0) ** s.p)


@dataclass(frozen=True)
class EstimatorState:
    estimates: np.ndarray
    mu: np.ndarray
    variant: str = CTA
    k: int = 0

    def __post_init__(self):
        est = np.array(self.estimates, dtype=float)
        mu = np.array(self.mu, dtype=float)
        if est.ndim < 2:
            raise ValueError("estimates must have shape (..., n, d)")
        if mu.shape != (est.shape[-2],):
            raise ValueError(f"mu must have shape ({est.shape[-2]},), got {mu.shape}")
        if np.any(mu <= 0):
            raise ValueError("every mu_i must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        object.__setattr__(self, "estimates", est)
        object.__setattr__(self, "mu", mu)

    @property
    def n(self):
        return self.estimates.shape[-2]

    @property
    def d(self):
        return self.estimates.shape[-1]


def regressions(windows):
    """``(delta, ybar)`` arrays from a :class:`DremBank` or a list of :class:`DremWindow`."""
    if isinstance(windows, DremBank):
        return windows.delta, windows.ybar
    windows = list(windows)
    if not all(isinstance(w, DremWindow) for w in windows):
        raise TypeError("windows must be a DremBank or a sequence of DremWindow")
    return np.array([w.delta for w in windows]), np.stack([w.ybar for w in windows])


def _adjacency(A, n, check):
    a = A.adjacency if isinstance(A, WeightedDigraph) else np.asarray(A, dtype=float)
    if a.shape != (n, n):
        raise ValueError(f"adjacency has shape {a.shape}, expected {(n, n)}")
    if check:
        report = validate(a)
        if not report.valid:
            raise ValueError("adjacency is not doubly stochastic: " + "; ".join(report.violations))
    return a


def gains(delta, mu, alpha_k):
    """Per-sensor innovation gain ``alpha delta / (mu + delta**2)``."""
    return alpha_k * delta / (mu + delta ** 2)


def contraction(delta, mu, alpha_k):
    """Per-sensor scalar factor ``1 - alpha delta**2 / (mu + delta**2)``, always in (0, 1]."""
    return 1.0 - alpha_k * delta ** 2 / (mu + delta ** 2)


def _adapt(theta, delta, ybar, mu, alpha_k):
    g = gains(delta, mu, alpha_k)[:, None]
    return theta + g * (ybar - delta[:, None] * theta)


def _inputs(state, A, windows, alpha_k, check):
    if not 0 < alpha_k <= 1:
        raise ValueError(f"stepsize must lie in (0, 1], got {alpha_k}")
    a = _adjacency(A, state.n, check)
    delta, ybar = regressions(windows)
    if delta.shape != (state.n,) or ybar.shape[-2:] != (state.n, state.d):
        raise ValueError("windows do not match the estimator dimensions")
    return a, delta, ybar


def cta_step(state: EstimatorState, A, windows, alpha_k: float, check: bool = True) -> EstimatorState:
    """Combine with ``A``, then adapt with the scalar regressions."""
    a, delta, ybar = _inputs(state, A, windows, alpha_k, check)
    mixed = a @ state.estimates
    nxt = _adapt(mixed, delta, ybar, state.mu, alpha_k)
    return replace(state, estimates=nxt, k=state.k + 1)


def atc_step(state: EstimatorState, A, windows, alpha_k: float, check: bool = True) -> EstimatorState:
    """Adapt with the scalar regressions, then combine with ``A``."""
    a, delta, ybar = _inputs(state, A, windows, alpha_k, check)
    adapted = _adapt(state.estimates, delta, ybar, state.mu, alpha_k)
    return replace(state, estimates=a @ adapted, k=state.k + 1)


def step(state, A, windows, alpha_k, check=True):
    return (cta_step if state.variant == CTA else atc_step)(state, A, windows, alpha_k, check)


def error_recursion_oracle(state: EstimatorState, A, phi_matrices, alpha_k: float, raw_noise, theta):
    """Next CTA error matrix from the explicit linear error dynamics.

    Builds ``L = diag(delta_i / (mu_i + delta_i**2))``, ``Delta = diag(delta_i)``
    and ``G = I - alpha L Delta`` per step, and returns
    ``G A Theta_err + alpha L W`` for every dimension, where ``W`` is the
    adjugate-mixed raw noise. Only ground truth and raw noise enter; the
    transformed measurements do not.

    Parameters
    ----------
    phi_matrices : ndarray, shape (n, d, d)
        Extended regressors of all sensors at this step.
    raw_noise : ndarray, shape (..., n, d)
        Noise samples ``[w_i(k), ..., w_i(k-d+1)]`` aligned with the regressor rows.
    theta : ndarray, shape (d,)

    Returns
    -------
    ndarray, shape (..., n, d)
        Predicted ``theta_hat(k+1) - theta``.
    """
    a = np.asarray(A.adjacency if isinstance(A, WeightedDigraph) else A, dtype=float)
    phi_matrices = np.asarray(phi_matrices, dtype=float)
    n = a.shape[0]
    delta = determinant(phi_matrices)
    L = np.diag(delta / (state.mu + delta ** 2))
    Delta = np.diag(delta)
    G = np.eye(n) - alpha_k * L @ Delta
    err = state.estimates - np.asarray(theta, dtype=float)
    W = np.einsum("nij,...nj->...ni", adjugate(phi_matrices), np.asarray(raw_noise, dtype=float))
    return G @ a @ err + alpha_k * L @ W

