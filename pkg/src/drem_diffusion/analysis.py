"""
Error diagnostics, matrix-inequality oracles and the Monte Carlo engine.

The squared error of one dimension splits as ``V = V1 + V2`` with
``V1 = n * nu**2`` (``nu`` the network-average error) and
``V2 = sum_i (err_i - nu)**2`` (spread across sensors).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .drem import DremBank
from .estimator import ATC, CTA, EstimatorState, contraction, error_recursion_oracle, step
from .graph import validate
from .model import NoiseStreams

ISOLATED = "isolated"


class Lyapunov(NamedTuple):
    V: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    nu: np.ndarray
    sigma: np.ndarray


def lyapunov(theta_hat, theta) -> Lyapunov:
    """Per-dimension ``V``, ``V1``, ``V2``, mean error ``nu`` and spread ``sigma = V2``.

    `theta_hat` has shape ``(..., n, d)``; every output has shape ``(..., d)``.
    """
    err = np.asarray(theta_hat, dtype=float) - np.asarray(theta, dtype=float)
    n = err.shape[-2]
    nu = err.mean(axis=-2)
    V = (err ** 2).sum(axis=-2)
    V1 = n * nu ** 2
    V2 = ((err - nu[..., None, :]) ** 2).sum(axis=-2)
    return Lyapunov(V, V1, V2, nu, V2)


def averaging_matrix(n: int) -> np.ndarray:
    return np.full((n, n), 1.0 / n)


def random_doubly_stochastic(n: int, rng: np.random.Generator, tol: float = 1e-12,
                             density: float = 1.0, max_iter: int = 100_000) -> np.ndarray:
    """Alternating row/column normalization of a positive random matrix.

    With ``density < 1`` off-diagonal entries are dropped at random first. The
    kept support is symmetric and includes the diagonal, so every kept entry
    lies on a positive diagonal and the normalization converges quickly.
    """
    m = rng.random((n, n)) + 0.05
    if density < 1:
        mask = rng.random((n, n)) < density
        mask |= mask.T
        np.fill_diagonal(mask, True)
        m = m * mask
    for _ in range(max_iter):
        m = m / m.sum(axis=1, keepdims=True)
        m = m / m.sum(axis=0, keepdims=True)
        if np.abs(m.sum(axis=1) - 1).max() < tol:
            return m
    raise RuntimeError("normalization did not converge")


def random_birkhoff(n: int, rng: np.random.Generator, terms: int = 2, include_identity: bool = True):
    """Convex combination of random permutation matrices (exactly doubly stochastic up to rounding)."""
    weights = rng.dirichlet(np.ones(terms + include_identity))
    out = np.zeros((n, n))
    perms = [np.arange(n)] if include_identity else []
    perms += [rng.permutation(n) for _ in range(terms)]
    for w, p in zip(weights, perms):
        out[np.arange(n), p] += w
    return out


class Check(NamedTuple):
    """Oracle outcome; ``applicable`` is False when the premise fails (vacuous)."""

    applicable: np.ndarray
    holds: np.ndarray

    @property
    def counterexamples(self) -> int:
        return int(np.count_nonzero(np.asarray(self.applicable) & ~np.asarray(self.holds)))


def consensus_sign_oracle(x, c, tol: float = 1e-12) -> Check:
    """Near-consensus vectors share one sign and no entry is far below the mean.

    Premise: ``0 < c < 1/(n+1)`` and ``x'(I-J)x <= c x'x``. Conclusion: either
    every entry is non-negative or every entry is negative, and
    ``x_i**2 >= (1/n)(1 - sqrt(cn/(1-c)))**2 x'Jx`` for all ``i``.
    Works on a single vector or a batch ``(..., n)``; `c` may be a scalar or
    one value per vector.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    nu = x.mean(axis=-1)
    xJx = n * nu ** 2
    xx = (x ** 2).sum(axis=-1)
    spread = ((x - nu[..., None]) ** 2).sum(axis=-1)
    c = np.asarray(c, dtype=float)
    applicable = (c > 0) & (c < 1 / (n + 1)) & (spread <= c * xx)
    same_sign = np.all(x >= 0, axis=-1) | np.all(x < 0, axis=-1)
    floor = (1 - np.sqrt(c * n / (1 - c))) ** 2 * xJx / n
    tight = np.all(x ** 2 >= floor[..., None] * (1 - tol) - tol, axis=-1)
    return Check(np.asarray(applicable), np.asarray(same_sign & tight))


def mixing_contraction_oracle(x, A, tol: float = 1e-12) -> Check:
    """Doubly stochastic mixing shrinks both ``x'x`` and the spread ``x'(I-J)x``.

    `x` may be a batch ``(..., n)``; `A` is one matrix or a matching batch.
    Both inequalities are checked with slack `tol` relative to ``x'x``.
    """
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=float)
    Ax = np.einsum("...ij,...j->...i", A, x)
    xx = (x ** 2).sum(axis=-1)
    slack = tol * np.maximum(1.0, xx)

    def spread(v):
        return ((v - v.mean(axis=-1, keepdims=True)) ** 2).sum(axis=-1)

    holds = (xx - (Ax ** 2).sum(axis=-1) >= -slack) & (spread(x) - spread(Ax) >= -slack)
    applicable = np.ones(holds.shape, dtype=bool)
    return Check(applicable, holds)


def zeta(alpha_k, omega_underbar, mu):
    r = alpha_k * omega_underbar / (mu + omega_underbar)
    return (2 - r) * r


def adaptation_drop_oracle(x, deltas, mus, alpha_k, omega_underbar, tol: float = 1e-12) -> Check:
    """Energy drop from the adaptation gain at every excited sensor.

    With ``G = diag(1 - alpha delta_i**2 / (mu_i + delta_i**2))``, checks
    ``x'x - x'G'Gx >= zeta_i x_i**2`` and ``0 < zeta_i < 1`` for each sensor
    with ``delta_i**2 >= omega_underbar``. Batched over leading axes of `x`
    and `deltas`.
    """
    x = np.asarray(x, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    mus = np.asarray(mus, dtype=float)
    g = contraction(deltas, mus, alpha_k)
    drop = (x ** 2).sum(axis=-1) - ((g * x) ** 2).sum(axis=-1)
    z = zeta(alpha_k, omega_underbar, mus)
    excited = deltas ** 2 >= omega_underbar
    slack = tol * np.maximum(1.0, (x ** 2).sum(axis=-1))
    ok = (drop[..., None] >= z * x ** 2 - slack[..., None]) & (z > 0) & (z < 1)
    holds = np.all(ok | ~excited, axis=-1)
    return Check(np.any(excited, axis=-1), holds)


@dataclass
class Problem:
    """Runtime objects for one simulation setup."""

    model: object
    source: object
    schedule: object
    stepsize: object
    mu: np.ndarray
    initial: np.ndarray
    horizon: int
    variant: str = CTA
    name: str = "custom"

    @property
    def n(self):
        return self.model.n

    @property
    def d(self):
        return self.model.d


@dataclass
class TrialTrace:
    """Per-iteration metrics.

    Row ``r`` describes the estimates after step ``r``, i.e. at time
    ``k[r] = r + 1``; ``alpha[r]`` and ``delta[r]`` are the stepsize and
    scalar regressors used by that step. Rows with ``r < warmup`` were
    produced with a zero-padded regressor window.
    """

    k: np.ndarray
    err_norm: np.ndarray        # (K, n)
    mean_error: np.ndarray      # (K, n, d), theta_hat - theta
    V: np.ndarray               # (K, d)
    V1: np.ndarray
    V2: np.ndarray
    nu: np.ndarray
    sigma: np.ndarray
    alpha: np.ndarray           # (K,)
    delta: np.ndarray           # (K, n)
    theta: np.ndarray
    warmup: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def total_V(self) -> np.ndarray:
        """Squared error summed over dimensions."""
        return self.V.sum(axis=1)

    @property
    def mean_estimates(self) -> np.ndarray:
        return self.mean_error + self.theta

    def at(self, k: int) -> int:
        """Row index for time `k`."""
        return int(k) - int(self.k[0])


@dataclass
class AggregateTrace(TrialTrace):
    """Across-trial means of every :class:`TrialTrace` field."""

    trials: int = 1
    seeds: list = field(default_factory=list)


def simulate(problem: Problem, seeds: Sequence[int], oracle_check: bool = False,
             keep_trials: bool = False, noise_block: int = 1024):
    """Run all trials of `problem` together, one noise stream per (seed, sensor).

    Regressors, topology and initial estimates are shared by all trials;
    only the measurement noise differs. Returns an :class:`AggregateTrace` and,
    with `keep_trials`, the final estimates of each trial.
    """
    seeds = [int(s) for s in seeds]
    T, n, d, K = len(seeds), problem.n, problem.d, problem.horizon
    if T < 1:
        raise ValueError("at least one trial required")
    theta = problem.model.theta
    scale = np.sqrt(problem.model.noise_variances)
    noise = NoiseStreams(seeds, n, block=noise_block)
    bank = DremBank(n, d, T)
    variant = CTA if problem.variant == ISOLATED else problem.variant
    state = EstimatorState(np.broadcast_to(problem.initial, (T, n, d)).copy(), problem.mu, variant)
    eye = np.eye(n)
    raw = np.zeros((T, n, d))

    out = {name: np.empty(shape) for name, shape in [
        ("err_norm", (K, n)), ("mean_error", (K, n, d)), ("V", (K, d)), ("V1", (K, d)),
        ("V2", (K, d)), ("nu", (K, d)), ("sigma", (K, d)), ("alpha", (K,)), ("delta", (K, n))]}
    bad_topology, bad_contraction, oracle_dev = [], 0, 0.0

    for k in range(K):
        phi = problem.source.all_phi(k)
        w = noise.at(k) * scale
        y = phi @ theta + w
        bank.push(phi, y)
        if problem.variant == ISOLATED:
            a = eye
        else:
            a = problem.schedule.adjacency(k)
            if not validate(a, min_weight=None):
                bad_topology.append(k)
        al = problem.stepsize(k)
        g = contraction(bank.delta, state.mu, al)
        if not np.all((g > 0) & (g <= 1)):
            bad_contraction += 1
        if oracle_check:
            raw = np.concatenate([w[:, :, None], raw[:, :, :-1]], axis=2)
            if variant == CTA:
                predicted = error_recursion_oracle(state, a, bank.phi, al, raw, theta)
        state = step(state, a, bank, al, check=False)
        if oracle_check and variant == CTA:
            oracle_dev = max(oracle_dev, float(np.abs(state.estimates - theta - predicted).max()))

        est = state.estimates
        lv = lyapunov(est, theta)
        err = est - theta
        out["err_norm"][k] = np.sqrt((err ** 2).sum(axis=-1)).mean(axis=0)
        out["mean_error"][k] = err.mean(axis=0)
        for name, val in zip(("V", "V1", "V2", "nu", "sigma"), lv):
            out[name][k] = val.mean(axis=0)
        out["alpha"][k] = al
        out["delta"][k] = bank.delta

    diagnostics = {"topology_violation_steps": bad_topology,
                   "contraction_violations": bad_contraction}
    if oracle_check and variant == CTA:
        diagnostics["oracle_max_deviation"] = oracle_dev
    trace = AggregateTrace(k=np.arange(1, K + 1), theta=np.array(theta), warmup=d - 1,
                           diagnostics=diagnostics, trials=T, seeds=seeds, **out)
    if keep_trials:
        return trace, state.estimates.copy()
    return trace


def run_monte_carlo(scenario, trials: int, base_seed: int, **kwargs) -> AggregateTrace:
    """Trials with seeds ``base_seed + t`` for ``t < trials``; deterministic for fixed arguments."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    problem = scenario.build() if hasattr(scenario, "build") else scenario
    return simulate(problem, [base_seed + t for t in range(trials)], **kwargs)


def run_trial(scenario, seed: int, **kwargs) -> TrialTrace:
    """Single seeded trial."""
    trace = run_monte_carlo(scenario, 1, seed, **kwargs)
    return trace
