import numpy as np
import pytest

from drem_diffusion.excitation import (cooperative_pe_scan, excitation_equivalence_constants,
                                     gram, gram_determinant, gram_entry_bound, gram_excitation_check,
                                     per_sensor_excitation, smallest_eigenvalue)
from drem_diffusion.model import CosineSineSource, RotatingCanonicalSource
from drem_diffusion.scenario import scalar_regressor_sequence


def ex1_deltas(K=200):
    return scalar_regressor_sequence(CosineSineSource(), 2, K)[:, 1:]


def test_zero_deltas_not_excited():
    rep = cooperative_pe_scan(np.zeros((3, 10)), 4)
    assert rep.omega == 0 and not rep.satisfied and rep.witness_windows == []


def test_single_sensor_unit():
    rep = cooperative_pe_scan(np.ones((1, 5)), 1)
    assert rep.omega == 1 and rep.satisfied and rep.omega_underbar == 1


def test_window_longer_than_horizon():
    with pytest.raises(ValueError):
        cooperative_pe_scan(np.ones((1, 3)), 4)


def test_ex1_sums_per_sensor():
    sq = ex1_deltas() ** 2
    for k in range(sq.shape[1] - 8):
        window = sq[:, k:k + 8].sum(axis=1)
        np.testing.assert_allclose(window, [0, 4, 4, 0], atol=1e-12)


def test_ex1_scan():
    rep = cooperative_pe_scan(ex1_deltas(), 8, first_k=1)
    assert rep.omega == pytest.approx(8, abs=1e-6)
    assert rep.omega_underbar == rep.omega / (4 * 8)
    assert len(rep.witness_windows) == rep.horizon - 8 + 1


def test_declared_omega():
    d = ex1_deltas()
    assert cooperative_pe_scan(d, 8, omega=7.9).satisfied
    assert not cooperative_pe_scan(d, 8, omega=8.1).satisfied


def test_witness_examples():
    assert per_sensor_excitation(np.zeros((2, 4)), 0, 4, 0.1) is None
    assert per_sensor_excitation(np.array([[0.0, 0.0, 2.0]]), 0, 3, 4.0) == (2, 0)
    d = ex1_deltas()
    for k in range(d.shape[1] - 8):
        t, sensor = per_sensor_excitation(d, k, 8, 0.25)
        assert k <= t < k + 8 and d[sensor, t] ** 2 >= 0.25


def test_gram_canonical_cycle():
    phis = np.eye(4)
    assert smallest_eigenvalue(gram(phis, 0, 4)) == pytest.approx(1.0)
    assert gram_excitation_check(phis, 0, 4, 1.0)


def test_gram_constant_regressor_rank_one():
    phis = np.tile([1.0, 2.0, 3.0], (3, 1))
    assert smallest_eigenvalue(gram(phis, 0, 3)) == pytest.approx(0, abs=1e-12)
    assert not gram_excitation_check(phis, 0, 3, 1e-6)


def test_gram_rotating_canonical_sensor1():
    src = RotatingCanonicalSource()
    phis = np.array([src.phi(0, k) for k in range(30)])
    # d consecutive samples never contain all five activations; the window 1..15 does
    assert not any(gram_excitation_check(phis, t, 5, 1.0) for t in range(26))
    assert gram_excitation_check(phis, 1, 5, 1.0, length=15)
    np.testing.assert_allclose(gram(phis, 1, 5, length=15), np.eye(5))


def test_gram_short_sequence():
    with pytest.raises(ValueError):
        gram(np.eye(2), 1, 2)


def test_gram_determinant_equals_delta_squared():
    rng = np.random.default_rng(4)
    for d in (1, 2, 3, 4):
        phis = rng.uniform(-1, 1, size=(30, d))
        deltas = scalar_regressor_sequence(_Table(phis), d, 30)[0]
        for t in range(d - 1, 30):
            assert gram_determinant(phis, t, d) == pytest.approx(deltas[t] ** 2, rel=1e-9, abs=1e-14)


class _Table:
    n = 1

    def __init__(self, phis):
        self.phis = phis

    def all_phi(self, k):
        return self.phis[k][None]


def test_constants_examples():
    w2, back = excitation_equivalence_constants(0.3, 1, 5.0)
    assert w2 == pytest.approx(0.3) and back(0.3) == pytest.approx(0.3)
    w2, back = excitation_equivalence_constants(1.0, 2, 1.0)
    assert w2 == 0.5 and back(0.5) == 0.25
    with pytest.raises(ValueError):
        excitation_equivalence_constants(1.0, 2, 0.0)


def test_gram_entry_bound():
    rng = np.random.default_rng(0)
    phis = rng.uniform(-2, 2, size=(3, 3))
    assert np.abs(gram(phis, 0, 3)).max() <= gram_entry_bound(2.0, 3)


def test_report_dict():
    rep = cooperative_pe_scan(ex1_deltas(), 8, periodic=True)
    doc = rep.to_dict()
    assert doc["windows_without_witness"] == 0
    assert "full period" in doc["scope"]
