"""
Time-varying weighted digraphs.

Adjacency orientation follows the combination step: entry ``(i, j)`` is the
weight sensor ``i`` places on the message of sensor ``j``, so a positive
entry means ``j`` sends to ``i``. Sensors are indexed from 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class WeightedDigraph:
    """Weighted digraph on ``n`` sensors given by its adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> set[tuple[int, int]]:
        """Edge set as ``(sender, receiver)`` pairs, including self-loops."""
        receivers, senders = np.nonzero(self.adjacency > 0)
        return set(zip(senders.tolist(), receivers.tolist()))

    def in_degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def out_degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=0)


@dataclass
class ValidationReport:
    """Violations found by :func:`validate`. Empty means valid."""

    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.valid

    def to_dict(self):
        return {"valid": self.valid, "violations": list(self.violations)}


def validate(g, require_doubly_stochastic=True, min_weight=None, tol=STOCHASTIC_TOL):
    """Check a digraph against the weighting assumptions.

    Parameters
    ----------
    g : WeightedDigraph or ndarray
        The digraph to check.
    require_doubly_stochastic : bool, optional
        Also require all row and column sums to equal 1 within `tol`.
    min_weight : float, optional
        Lower bound for every positive entry. When given, every diagonal
        entry must also reach it, since each sensor weighs its own estimate.

    Returns
    -------
    ValidationReport
    """
    a = g.adjacency if isinstance(g, WeightedDigraph) else np.asarray(g, dtype=float)
    report = ValidationReport()
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        report.violations.append(f"adjacency is not square: shape {a.shape}")
        return report
    for i, j in zip(*np.nonzero(a < 0)):
        report.violations.append(f"negative entry a[{i},{j}] = {a[i, j]!r}")
    if require_doubly_stochastic:
        for i, s in enumerate(a.sum(axis=1)):
            if abs(s - 1.0) > tol:
                report.violations.append(f"row {i} sums to {s!r}")
        for j, s in enumerate(a.sum(axis=0)):
            if abs(s - 1.0) > tol:
                report.violations.append(f"column {j} sums to {s!r}")
    if min_weight is not None:
        for i, j in zip(*np.nonzero((a > 0) & (a < min_weight))):
            report.violations.append(
                f"positive entry a[{i},{j}] = {a[i, j]!r} below min weight {min_weight!r}")
        for i in np.nonzero(np.diag(a) < min_weight)[0]:
            if a[i, i] <= 0:
                report.violations.append(f"self-weight a[{i},{i}] = {a[i, i]!r} below min weight {min_weight!r}")
    return report


class TopologySchedule:
    """Rule mapping a time index ``k >= 0`` to an adjacency matrix.

    Parameters
    ----------
    rule : callable
        ``rule(k)`` returns an ``n x n`` adjacency matrix. It must be a pure
        function of ``k``.
    n : int
        Number of sensors.
    period : int, optional
        Declared period, 0 for a non-periodic (or unknown) schedule.
    horizon : int, optional
        Declared joint-connectivity horizon ``h``.
    min_weight : float, optional
        Declared minimum positive weight.
    """

    def __init__(self, rule: Callable[[int], np.ndarray], n: int, period: int = 0,
                 horizon: Optional[int] = None, min_weight: Optional[float] = None,
                 name: str = "custom"):
        if period < 0:
            raise ValueError("period must be non-negative")
        self._rule = rule
        self.n = n
        self.period = period
        self.horizon = horizon
        self.min_weight = min_weight
        self.name = name

    def adjacency(self, k: int) -> np.ndarray:
        if k < 0:
            raise ValueError(f"time index must be non-negative, got {k}")
        a = np.asarray(self._rule(k), dtype=float)
        if a.shape != (self.n, self.n):
            raise ValueError(f"schedule produced shape {a.shape} at k={k}, expected {(self.n, self.n)}")
        return a

    def __call__(self, k: int) -> WeightedDigraph:
        return WeightedDigraph(self.adjacency(k))

    def __repr__(self):
        return f"TopologySchedule(name={self.name!r}, n={self.n}, period={self.period})"


def periodic_schedule(matrices: Sequence, horizon=None, min_weight=None, name="periodic"):
    """Schedule with ``A(k) = matrices[k mod p]``."""
    mats = [np.array(m, dtype=float) for m in matrices]
    if not mats:
        raise ValueError("at least one matrix required")
    n = mats[0].shape[0]
    for m in mats:
        if m.shape != (n, n):
            raise ValueError("all matrices in a schedule must share the same square shape")
        m.setflags(write=False)
    p = len(mats)
    if min_weight is None:
        positive = np.concatenate([m[m > 0] for m in mats])
        min_weight = float(positive.min()) if positive.size else None
    return TopologySchedule(lambda k: mats[k % p], n, period=p, horizon=horizon,
                            min_weight=min_weight, name=name)


def constant_schedule(matrix, horizon=0, name="constant"):
    return periodic_schedule([matrix], horizon=horizon, name=name)


def union_graph(s: TopologySchedule, k1: int, k2: int) -> WeightedDigraph:
    """Union of ``G(k1), ..., G(k2)``: edge union, summed weights."""
    if k1 > k2:
        raise ValueError(f"k1={k1} must not exceed k2={k2}")
    total = np.zeros((s.n, s.n))
    for k in range(k1, k2 + 1):
        total += s.adjacency(k)
    return WeightedDigraph(total)


def is_strongly_connected(g) -> bool:
    a = g.adjacency if isinstance(g, WeightedDigraph) else np.asarray(g)
    if a.shape[0] <= 1:
        return True
    n_components, _ = connected_components(a > 0, directed=True, connection="strong")
    return n_components == 1


def is_jointly_connected(s: TopologySchedule, h: int, window: Optional[tuple[int, int]] = None) -> bool:
    """True iff ``union_graph(s, k, k + h)`` is strongly connected for every start ``k``.

    Starts range over one period for periodic schedules, or over
    ``window = (k_first, k_last)`` (inclusive) otherwise.
    """
    if h < 0:
        raise ValueError("horizon must be non-negative")
    if window is not None:
        starts = range(window[0], window[1] + 1)
    elif s.period > 0:
        starts = range(s.period)
    else:
        raise ValueError("non-periodic schedule requires an evaluation window")
    return all(is_strongly_connected(union_graph(s, k, k + h)) for k in starts)


def transition_matrix(s: TopologySchedule, k: int, t: int) -> np.ndarray:
    """Ordered product ``A(t) A(t-1) ... A(k)``."""
    if k > t:
        raise ValueError(f"k={k} must not exceed t={t}")
    phi = s.adjacency(k).copy()
    for tau in range(k + 1, t + 1):
        phi = s.adjacency(tau) @ phi
    return phi


def _check_sensor(s, i):
    if not 0 <= i < s.n:
        raise ValueError(f"sensor index {i} out of range for n={s.n}")


def has_sequential_dynamic_path(s: TopologySchedule, i: int, j: int, k1: int, k2: int) -> bool:
    """Whether ``i`` reaches ``j`` hopping once per step over ``[k1, k2]``.

    Each hop at time ``k`` must use an edge of ``G(k)``; staying put uses the
    self-loop and so requires ``a_ii(k) > 0``.
    """
    _check_sensor(s, i)
    _check_sensor(s, j)
    if k1 > k2:
        raise ValueError(f"k1={k1} must not exceed k2={k2}")
    reached = np.zeros(s.n, dtype=bool)
    reached[i] = True
    for k in range(k1, k2):
        # receiver r is reached if some reached sender u has a[r, u] > 0
        reached = (s.adjacency(k) > 0) @ reached
    return bool(reached[j])


def sequential_paths_brute_force(s: TopologySchedule, i: int, j: int, k1: int, k2: int) -> bool:
    """Enumerate every hop sequence; exponential, for small test cases only."""
    _check_sensor(s, i)
    _check_sensor(s, j)
    length = k2 - k1
    if length == 0:
        return i == j
    edge_sets = [s(k).edges() for k in range(k1, k2)]
    for middle in itertools.product(range(s.n), repeat=length - 1):
        hops = (i, *middle, j)
        if all((hops[m], hops[m + 1]) in edge_sets[m] for m in range(length)):
            return True
    return False


def min_entry_horizon(s: TopologySchedule, min_weight: float, max_h: int, starts, extra: int = 0):
    """Smallest ``H <= max_h`` with every entry of ``Phi_A(k, k + tau) >= min_weight**H``.

    The bound must hold for each ``k`` in `starts` and each ``tau`` in
    ``[H, H + extra]``. Returns None if no such ``H`` exists.
    """
    starts = list(starts)
    for H in range(max_h + 1):
        bound = min_weight ** H
        ok = True
        for k in starts:
            phi = transition_matrix(s, k, k + H)
            for tau in range(H, H + extra + 1):
                if tau > H:
                    phi = s.adjacency(k + tau) @ phi
                if phi.min() < bound:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return H
    return None


def worst_case_connectivity_horizon(adjacencies: Sequence[np.ndarray]) -> Optional[int]:
    """Smallest ``h`` such that every window ``[k, k + h]`` inside the run is strongly connected.

    `adjacencies` is the realized sequence ``A(0), ..., A(K-1)``. Returns None
    when even the union of the whole run is not strongly connected.
    """
    support = np.array([np.asarray(a) > 0 for a in adjacencies], dtype=np.int32)
    K = len(support)
    if K == 0:
        return None
    prefix = np.concatenate([np.zeros((1,) + support.shape[1:], dtype=np.int64),
                             np.cumsum(support, axis=0)])

    def all_windows_connected(h):
        for k in range(0, K - h):
            if not is_strongly_connected(prefix[k + h + 1] - prefix[k]):
                return False
        return True

    if not all_windows_connected(K - 1):
        return None
    lo, hi = 0, K - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if all_windows_connected(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo
