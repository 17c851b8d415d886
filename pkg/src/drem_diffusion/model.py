"""
Ground-truth regression model, Gaussian noise streams and regressor sources.

Every sensor ``i`` observes ``y_i(k) = theta' phi_i(k) + w_i(k)`` with
``w_i(k) ~ N(0, R_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class RegressionModel:
    """True parameter and per-sensor noise variances."""

    theta: np.ndarray
    noise_variances: np.ndarray

    def __post_init__(self):
        theta = np.atleast_1d(np.array(self.theta, dtype=float))
        var = np.atleast_1d(np.array(self.noise_variances, dtype=float))
        if theta.ndim != 1 or theta.size < 1:
            raise ValueError("theta must be a non-empty vector")
        if var.ndim != 1 or np.any(var < 0):
            raise ValueError("noise variances must be a vector of non-negative reals")
        theta.setflags(write=False)
        var.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "noise_variances", var)

    @property
    def d(self) -> int:
        return self.theta.size

    @property
    def n(self) -> int:
        return self.noise_variances.size


def measure(m: RegressionModel, i: int, phi, rng: np.random.Generator) -> float:
    """One noisy scalar measurement of sensor `i`.

    Noise-free sensors (``R_i = 0``) return ``theta' phi`` exactly and do not
    consume from `rng`.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (m.d,):
        raise ValueError(f"regressor has shape {phi.shape}, expected ({m.d},)")
    if not 0 <= i < m.n:
        raise ValueError(f"sensor index {i} out of range for n={m.n}")
    clean = float(m.theta @ phi)
    r = m.noise_variances[i]
    if r == 0:
        return clean
    return clean + float(np.sqrt(r) * rng.standard_normal())


def noise_generator(seed: int, sensor: int) -> np.random.Generator:
    """Independent counter-based (Philox) stream for one ``(trial seed, sensor)`` pair."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(sensor)])))


class NoiseStreams:
    """Unit Gaussian draws for several trials, one stream per ``(trial, sensor)``.

    Draws are produced in blocks of `block` steps. Block size never changes
    the values, so results are reproducible whatever the chunking.
    """

    def __init__(self, seeds, n: int, block: int = 1024):
        self.seeds = [int(s) for s in seeds]
        self.n = n
        self.block = block
        self._gens = [[noise_generator(s, i) for i in range(n)] for s in self.seeds]
        self._buf = None
        self._start = 0

    def _refill(self, k):
        buf = np.empty((len(self.seeds), self.n, self.block))
        for t, gens in enumerate(self._gens):
            for i, g in enumerate(gens):
                buf[t, i] = g.standard_normal(self.block)
        self._buf = buf
        self._start = k

    def at(self, k: int) -> np.ndarray:
        """Unit draws at step `k` with shape ``(trials, n)``; steps must be visited in order."""
        if self._buf is None or k >= self._start + self.block:
            self._refill(k)
        return self._buf[:, :, k - self._start]


class RegressorSource:
    """Rule producing ``phi_i(k)``.

    Subclasses implement :meth:`phi`; :meth:`all_phi` stacks all sensors.

    Attributes
    ----------
    n, d : int
        Sensor count and parameter dimension.
    bound : float
        Declared bound on the absolute value of every regressor entry.
    """

    n: int
    d: int
    bound: float

    def phi(self, i: int, k: int) -> np.ndarray:
        raise NotImplementedError

    def all_phi(self, k: int) -> np.ndarray:
        return np.stack([self.phi(i, k) for i in range(self.n)])

    def _check(self, i, k):
        if not 0 <= i < self.n:
            raise ValueError(f"sensor index {i} out of range for n={self.n}")
        if k < 0:
            raise ValueError(f"time index must be non-negative, got {k}")


class ScriptedSource(RegressorSource):
    """Regressors from an explicit table ``table[i][k]``, optionally periodic in ``k``."""

    def __init__(self, table, periodic: bool = False, bound: Optional[float] = None):
        arr = np.array(table, dtype=float)
        if arr.ndim != 3:
            raise ValueError("regressor table must have shape (n, steps, d)")
        arr.setflags(write=False)
        self.table = arr
        self.n, self.steps, self.d = arr.shape
        self.periodic = periodic
        self.bound = float(np.abs(arr).max()) if bound is None else float(bound)

    def phi(self, i, k):
        self._check(i, k)
        if self.periodic:
            k = k % self.steps
        elif k >= self.steps:
            raise ValueError(f"regressor undefined for sensor {i} at k={k} (table has {self.steps} steps)")
        return self.table[i, k]

    def all_phi(self, k):
        if k < 0:
            raise ValueError(f"time index must be non-negative, got {k}")
        if self.periodic:
            k = k % self.steps
        elif k >= self.steps:
            raise ValueError(f"regressor undefined at k={k} (table has {self.steps} steps)")
        return self.table[:, k]


class CosineSineSource(RegressorSource):
    """Four sensors, two dimensions, driven by two cumulative trigonometric sequences.

    ``phi_1 = [1, 0]``, ``phi_2 = [a(k), 1]``, ``phi_3 = [1, b(k)]`` and
    ``phi_4 = [1, 1]``, with ``a(0) = 1``, ``b(0) = 2``,
    ``a(k) = a(k-1) + cos(k pi / 4)`` and ``b(k) = b(k-1) + sin(k pi / 2)``.
    Both increments have zero mean over a period, so the sequences are
    periodic (period 8 and 4) and stored for one combined period.
    """

    n = 4
    d = 2

    def __init__(self, a0=1.0, b0=2.0):
        self.a0, self.b0 = a0, b0
        self._a = self._unroll(a0, lambda k: np.cos(k * np.pi / 4), 8)
        self._b = self._unroll(b0, lambda k: np.sin(k * np.pi / 2), 8)
        self.bound = float(max(1.0, np.abs(self._a).max(), np.abs(self._b).max()))

    @staticmethod
    def _unroll(x0, increment, steps):
        out = [x0]
        for k in range(1, steps):
            out.append(out[-1] + increment(k))
        return np.array(out)

    def a(self, k):
        """Cumulative cosine sequence; increments over one period of 8 sum to zero."""
        return self._a[k % 8]

    def b(self, k):
        return self._b[k % 8]

    def phi(self, i, k):
        self._check(i, k)
        return self.all_phi(k)[i]

    def all_phi(self, k):
        if k < 0:
            raise ValueError(f"time index must be non-negative, got {k}")
        return np.array([[1.0, 0.0], [self.a(k), 1.0], [1.0, self.b(k)], [1.0, 1.0]])


def recurrence_values(x0, increment, K):
    """Unroll ``x(k) = x(k-1) + increment(k)`` from ``x(0) = x0`` without periodic folding."""
    out = np.empty(K)
    out[0] = x0
    for k in range(1, K):
        out[k] = out[k - 1] + increment(k)
    return out


class RotatingCanonicalSource(RegressorSource):
    """Sensors take turns being excited by canonical basis vectors.

    For excited sensor ``s`` (1-based label ``i = s + 1``), ``phi(k) = e_p``
    when ``k mod n`` equals ``i + offsets[p]``, and zero otherwise. The other
    sensors always report the zero regressor.
    """

    def __init__(self, n: int = 30, d: int = 5, excited: int = 6, offsets=(0, 6, 12, 13, 14)):
        if len(offsets) != d:
            raise ValueError("need one activation offset per dimension")
        self.n, self.d = n, d
        self.excited = excited
        self.offsets = tuple(int(o) for o in offsets)
        self.bound = 1.0

    def phi(self, i, k):
        self._check(i, k)
        out = np.zeros(self.d)
        if i < self.excited:
            r = k % self.n
            for p, off in enumerate(self.offsets):
                if r == i + 1 + off:
                    out[p] = 1.0
                    break
        return out


class SensorField:
    """Sensor and target positions on a square grid.

    Targets and static sensors stay put; mobile sensors take one unit step
    per time step in a uniformly random cardinal direction, reflecting at the
    grid edges. Moves that bring a sensor closer than `min_distance` to any
    target are excluded (equivalent to resampling); a sensor with no allowed
    move stays where it is. Positions are integer grid points in
    ``[0, grid - 1]^2`` and are computed lazily, so ``positions(k)`` is a
    pure function of ``k`` and the seed.
    """

    _moves = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]])

    def __init__(self, n: int = 100, n_targets: int = 10, grid: int = 20, mobile: Optional[int] = None,
                 min_distance: float = 0.5, seed: int = 0):
        self.n, self.n_targets, self.grid = n, n_targets, grid
        self.mobile = n // 2 if mobile is None else mobile
        self.min_distance = min_distance
        self.seed = seed
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
        cells = rng.permutation(grid * grid)
        self.targets = np.stack(np.divmod(cells[:n_targets], grid), axis=1).astype(float)
        free = cells[n_targets:]
        pick = rng.choice(free.size, size=n, replace=free.size < n)
        start = np.stack(np.divmod(free[pick], grid), axis=1).astype(float)
        self._walk_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        self._path = [start]

    def _step(self, pos):
        new = pos.copy()
        for s in range(self.mobile):
            candidates = pos[s] + self._moves
            candidates = np.where(candidates < 0, -candidates, candidates)
            candidates = np.where(candidates > self.grid - 1, 2 * (self.grid - 1) - candidates, candidates)
            dist = np.linalg.norm(candidates[:, None, :] - self.targets[None], axis=2).min(axis=1)
            allowed = np.nonzero(dist >= self.min_distance)[0]
            # draw once per sensor per step so the stream stays aligned
            u = self._walk_rng.random()
            if allowed.size:
                new[s] = candidates[allowed[int(u * allowed.size)]]
        return new

    def positions(self, k: int) -> np.ndarray:
        if k < 0:
            raise ValueError(f"time index must be non-negative, got {k}")
        while len(self._path) <= k:
            self._path.append(self._step(self._path[-1]))
        return self._path[k]

    def distances(self, k: int) -> np.ndarray:
        """Sensor-to-target distances, shape ``(n, n_targets)``."""
        p = self.positions(k)
        return np.linalg.norm(p[:, None, :] - self.targets[None], axis=2)


class TemperatureSource(RegressorSource):
    """Distance-weighted target readings: entry ``j`` is ``beta / dist_ij(k)**3``."""

    def __init__(self, field: SensorField, beta: float = 10.0):
        self.field = field
        self.beta = beta
        self.n, self.d = field.n, field.n_targets
        self.bound = beta / field.min_distance ** 3

    def all_phi(self, k):
        return self.beta / self.field.distances(k) ** 3

    def phi(self, i, k):
        self._check(i, k)
        return self.all_phi(k)[i]
