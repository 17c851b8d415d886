"""
Dynamic regressor extension and mixing for noisy measurements.

Each sensor stacks its last ``d`` regressors (newest first) into a square
extended regressor ``Phi``. Multiplying the stacked measurements by
``adj(Phi)`` turns one ``d``-dimensional regression into ``d`` scalar ones,
``ybar_l = delta * theta_l + wbar_l``, that all share the scalar regressor
``delta = det(Phi)``.
"""

from __future__ import annotations

import numpy as np


def determinant(m) -> np.ndarray:
    """Determinant of one matrix or a stack ``(..., d, d)``.

    Closed form for ``d <= 3``, LU with partial pivoting otherwise.
    """
    m = np.asarray(m, dtype=float)
    d = m.shape[-1]
    if m.shape[-2] != d:
        raise ValueError(f"square matrix required, got shape {m.shape[-2:]}")
    if d == 0:
        return np.ones(m.shape[:-2])
    if d == 1:
        return m[..., 0, 0].copy()
    if d == 2:
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if d == 3:
        return (m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
                - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
                + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0]))
    return np.linalg.det(m)


def _minor_index(d):
    keep = np.array([[r for r in range(d) if r != i] for i in range(d)])
    return keep[:, None, :, None], keep[None, :, None, :]


def adjugate(m) -> np.ndarray:
    """Adjugate (transposed cofactor matrix) of one matrix or a stack.

    Defined for singular input: ``adj(M) M = M adj(M) = det(M) I`` always.
    """
    m = np.asarray(m, dtype=float)
    d = m.shape[-1]
    if m.ndim < 2 or m.shape[-2] != d:
        raise ValueError(f"square matrix required, got shape {m.shape}")
    if d == 1:
        return np.ones_like(m)
    if d == 2:
        out = np.empty_like(m)
        out[..., 0, 0] = m[..., 1, 1]
        out[..., 0, 1] = -m[..., 0, 1]
        out[..., 1, 0] = -m[..., 1, 0]
        out[..., 1, 1] = m[..., 0, 0]
        return out
    if d == 3:
        a, b, c = m[..., 0, 0], m[..., 0, 1], m[..., 0, 2]
        e, f, g = m[..., 1, 0], m[..., 1, 1], m[..., 1, 2]
        h, i, j = m[..., 2, 0], m[..., 2, 1], m[..., 2, 2]
        out = np.empty_like(m)
        out[..., 0, 0] = f * j - g * i
        out[..., 0, 1] = c * i - b * j
        out[..., 0, 2] = b * g - c * f
        out[..., 1, 0] = g * h - e * j
        out[..., 1, 1] = a * j - c * h
        out[..., 1, 2] = c * e - a * g
        out[..., 2, 0] = e * i - f * h
        out[..., 2, 1] = b * h - a * i
        out[..., 2, 2] = a * f - b * e
        return out
    rows, cols = _minor_index(d)
    minors = m[..., rows, cols]  # (..., d, d, d-1, d-1); [i, j] drops row i, column j
    cof = determinant(minors)
    signs = (-1.0) ** np.add.outer(np.arange(d), np.arange(d))
    return np.swapaxes(cof * signs, -1, -2)


class DremWindow:
    """Sliding window of one sensor's last ``d`` samples, newest first.

    Before ``d`` samples have arrived the missing rows are zero, which makes
    ``delta`` zero during warm-up.
    """

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("dimension must be at least 1")
        self.d = d
        self.phi_buffer = np.zeros((d, d))
        self.y_buffer = np.zeros(d)
        self.count = 0

    def push(self, phi, y) -> "DremWindow":
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (self.d,):
            raise ValueError(f"regressor has shape {phi.shape}, expected ({self.d},)")
        self.phi_buffer = np.vstack([phi[None], self.phi_buffer[:-1]])
        self.y_buffer = np.concatenate([[float(y)], self.y_buffer[:-1]])
        self.count += 1
        return self

    @property
    def warm(self) -> bool:
        """True once the buffer holds ``d`` real samples."""
        return self.count >= self.d

    @property
    def matrix(self) -> np.ndarray:
        return self.phi_buffer

    @property
    def delta(self) -> float:
        return float(determinant(self.phi_buffer))

    @property
    def ybar(self) -> np.ndarray:
        return adjugate(self.phi_buffer) @ self.y_buffer

    def scalar_regressions(self) -> list[tuple[float, float]]:
        """The ``d`` pairs ``(ybar_l, delta)``."""
        dl = self.delta
        return [(float(v), dl) for v in self.ybar]


def mixed_noise(phi_matrix, noise_stack) -> np.ndarray:
    """``adj(Phi) [w(k), ..., w(k-d+1)]'``, the transformed noise."""
    return adjugate(phi_matrix) @ np.asarray(noise_stack, dtype=float)


class DremBank:
    """DREM windows for ``n`` sensors, with measurements for several trials.

    Regressors are shared by all trials; measurement buffers have shape
    ``(trials, n, d)``. ``delta`` and the adjugates are recomputed only for
    sensors whose extended regressor changed, with a small cache of recent
    matrices for sources that revisit the same windows.
    """

    def __init__(self, n: int, d: int, trials: int = 1, cache_size: int = 4096):
        self.n, self.d, self.trials = n, d, trials
        self.phi = np.zeros((n, d, d))
        self.y = np.zeros((trials, n, d))
        self.count = 0
        self.delta = np.zeros(n)
        self.adj = adjugate(self.phi)
        self._cache = {}
        self._cache_size = cache_size

    def push(self, phi_all, y_all) -> "DremBank":
        phi_all = np.asarray(phi_all, dtype=float)
        y_all = np.asarray(y_all, dtype=float).reshape(self.trials, self.n)
        if phi_all.shape != (self.n, self.d):
            raise ValueError(f"regressors have shape {phi_all.shape}, expected {(self.n, self.d)}")
        new_phi = np.concatenate([phi_all[:, None, :], self.phi[:, :-1, :]], axis=1)
        self.y = np.concatenate([y_all[:, :, None], self.y[:, :, :-1]], axis=2)
        changed = np.nonzero(np.any(new_phi != self.phi, axis=(1, 2)))[0]
        self.phi = new_phi
        self.count += 1
        if changed.size:
            self._update(changed)
        return self

    def _update(self, idx):
        todo = []
        for i in idx:
            key = self.phi[i].tobytes()
            hit = self._cache.get(key)
            if hit is None:
                todo.append(i)
            else:
                self.delta[i], self.adj[i] = hit
        if todo:
            todo = np.array(todo)
            mats = self.phi[todo]
            dets = determinant(mats)
            adjs = adjugate(mats)
            self.delta[todo] = dets
            self.adj[todo] = adjs
            if len(self._cache) + len(todo) > self._cache_size:
                self._cache.clear()
            for i, dv, av in zip(todo, dets, adjs):
                self._cache[self.phi[i].tobytes()] = (dv, av)

    @property
    def ybar(self) -> np.ndarray:
        """Transformed measurements, shape ``(trials, n, d)``."""
        # elementwise product then a last-axis sum keeps each trial's value
        # independent of how many trials share the batch
        return (self.adj[None] * self.y[:, :, None, :]).sum(axis=-1)
