"""
Cooperative persistent excitation diagnostics.

The network is cooperatively excited when the windowed sum of every
sensor's squared scalar regressor stays bounded below, even if no single
sensor is persistently excited on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .drem import determinant


@dataclass
class ExcitationReport:
    """Outcome of a cooperative excitation scan.

    ``omega`` is the smallest windowed sum of squared scalar regressors over
    the scanned windows, ``omega_underbar = omega / (n T)`` is the per-sensor
    floor, and ``witness_windows`` holds one ``(k, t, sensor)`` triple per
    window start ``k`` where some sensor reaches that floor at time ``t``.
    """

    satisfied: bool
    T: int
    omega: float
    omega_underbar: float
    n: int
    horizon: int
    first_k: int = 0
    periodic: bool = False
    witness_windows: list = field(default_factory=list)
    alignment: str = ("delta at time t is the determinant of the regressors "
                      "stacked over [t-d+1, t]")

    @property
    def scope(self) -> str:
        if self.periodic:
            return "full period scanned; certificate extends to all k"
        return f"finite horizon: window starts {self.first_k}..{self.first_k + self.horizon - self.T}"

    def to_dict(self):
        return {
            "satisfied": self.satisfied,
            "T": self.T,
            "omega": self.omega,
            "omega_underbar": self.omega_underbar,
            "n": self.n,
            "scope": self.scope,
            "alignment": self.alignment,
            "windows_without_witness": self.horizon - self.T + 1 - len(self.witness_windows),
        }


def cooperative_pe_scan(deltas, T: int, first_k: int = 0, periodic: bool = False,
                        omega: Optional[float] = None) -> ExcitationReport:
    """Scan every length-`T` window of scalar regressor sequences.

    Parameters
    ----------
    deltas : array_like, shape (n, K)
        Row ``i`` is the sequence ``delta_i`` over the scanned horizon.
    T : int
        Window length.
    first_k : int, optional
        Time index of column 0, used only for labelling witnesses.
    periodic : bool, optional
        Whether the columns cover a full period (extends the certificate).
    omega : float, optional
        Required lower bound. By default the achieved minimum is reported and
        the condition is satisfied iff it is positive.

    Returns
    -------
    ExcitationReport
    """
    sq = np.atleast_2d(np.asarray(deltas, dtype=float)) ** 2
    n, K = sq.shape
    if T < 1:
        raise ValueError("window length must be at least 1")
    if T > K:
        raise ValueError(f"window length T={T} exceeds horizon K={K}")
    per_step = sq.sum(axis=0)
    sums = np.array([per_step[k:k + T].sum() for k in range(K - T + 1)])
    achieved = float(sums.min())
    satisfied = achieved > 0 if omega is None else 0 < omega <= achieved
    under = achieved / (n * T)
    witnesses = []
    if achieved > 0:
        for k in range(K - T + 1):
            hit = per_sensor_excitation(sq, k, T, under, squared=True)
            if hit is not None:
                witnesses.append((k + first_k, hit[0] + first_k, hit[1]))
    return ExcitationReport(satisfied=bool(satisfied), T=T, omega=achieved, omega_underbar=under,
                            n=n, horizon=K, first_k=first_k, periodic=periodic,
                            witness_windows=witnesses)


def per_sensor_excitation(deltas, k: int, T: int, omega_underbar: float, squared: bool = False):
    """First ``(t, sensor)`` in ``[k, k+T-1]`` with ``delta_sensor(t)**2 >= omega_underbar``, else None."""
    sq = np.atleast_2d(np.asarray(deltas, dtype=float))
    if not squared:
        sq = sq ** 2
    block = sq[:, k:k + T]
    hits = np.argwhere((block.T >= omega_underbar) & (block.T > 0))
    if hits.size == 0:
        return None
    t, sensor = hits[0]
    return int(k + t), int(sensor)


def gram(phis, t: int, d: int, length: Optional[int] = None) -> np.ndarray:
    """``sum phi(tau) phi(tau)'`` over ``tau = t .. t + length - 1`` (default length ``d``)."""
    phis = np.asarray(phis, dtype=float)
    length = d if length is None else length
    block = phis[t:t + length]
    if block.shape[0] != length:
        raise ValueError(f"sequence too short for window [{t}, {t + length - 1}]")
    return block.T @ block


def smallest_eigenvalue(sym) -> float:
    return float(np.linalg.eigvalsh(np.asarray(sym, dtype=float))[0])


def gram_excitation_check(phis, t: int, d: int, omega2: float, length: Optional[int] = None) -> bool:
    """Whether the Gram matrix over the window dominates ``omega2 * I``."""
    return smallest_eigenvalue(gram(phis, t, d, length)) >= omega2


def gram_determinant(phis, t: int, d: int) -> float:
    """Determinant of the Gram matrix over ``[t-d+1, t]``, equal to ``delta(t)**2``."""
    return float(determinant(gram(phis, t - d + 1, d)))


def gram_entry_bound(regressor_bound: float, d: int) -> float:
    """Bound on Gram matrix entries when every regressor entry is at most `regressor_bound` in magnitude."""
    return d * regressor_bound ** 2


def excitation_equivalence_constants(omega_underbar: float, d: int, rho: float):
    """Constants linking the determinant and eigenvalue forms of excitation.

    `rho` bounds the entries of the ``d x d`` Gram matrix (see
    :func:`gram_entry_bound`). Returns ``omega2 = omega_underbar / (d rho)**(d-1)``,
    the eigenvalue floor implied by ``det >= omega_underbar``, and the map
    ``omega2 -> omega2**d`` giving the determinant floor implied by an
    eigenvalue floor.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    omega2 = omega_underbar / (d * rho) ** (d - 1)
    return omega2, lambda w2: w2 ** d
