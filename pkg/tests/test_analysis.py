import numpy as np
import pytest

from drem_diffusion.analysis import (adaptation_drop_oracle, averaging_matrix, consensus_sign_oracle,
                                     lyapunov, mixing_contraction_oracle, random_birkhoff,
                                     random_doubly_stochastic, run_monte_carlo, run_trial, simulate,
                                     zeta)
from drem_diffusion.graph import validate
from drem_diffusion.scenario import load_scenario


def test_lyapunov_examples():
    lv = lyapunov(np.ones((4, 1)), [0.0])
    assert (lv.V[0], lv.V1[0], lv.V2[0]) == (4, 4, 0)
    lv = lyapunov(np.array([[1.0], [-1.0]]), [0.0])
    assert (lv.nu[0], lv.V1[0], lv.V2[0]) == (0, 0, 2)


def test_lyapunov_decomposition():
    rng = np.random.default_rng(0)
    err = rng.standard_normal((100, 5, 3))
    lv = lyapunov(err, np.zeros(3))
    np.testing.assert_allclose(lv.V1 + lv.V2, (err ** 2).sum(axis=-2), rtol=1e-12)
    np.testing.assert_allclose(lv.V1, 5 * lv.nu ** 2)
    J = averaging_matrix(5)
    np.testing.assert_allclose(J @ J, J, atol=1e-15)
    P = np.eye(5) - J
    np.testing.assert_allclose(P @ P, P, atol=1e-15)
    x = err[0, :, 0]
    assert lv.V1[0, 0] == pytest.approx(x @ J @ x, rel=1e-12)
    assert lv.V2[0, 0] == pytest.approx(x @ P @ x, rel=1e-12)


def test_random_doubly_stochastic():
    rng = np.random.default_rng(1)
    for density in (1.0, 0.4):
        assert validate(random_doubly_stochastic(6, rng, density=density)).valid
    assert validate(random_birkhoff(6, rng, terms=3)).valid


def test_consensus_sign_examples():
    assert consensus_sign_oracle(np.ones(4), 0.1).holds
    x = np.array([1.0, 1.001])
    nu = x.mean()
    c = ((x - nu) ** 2).sum() / (x ** 2).sum() * 1.01
    chk = consensus_sign_oracle(x, c)
    assert chk.applicable and chk.holds
    assert not consensus_sign_oracle(np.array([1.0, -1.0]), 0.2).applicable
    # c outside (0, 1/(n+1)) is vacuous
    assert not consensus_sign_oracle(np.ones(3), 0.3).applicable


def test_mixing_contraction_examples():
    x = np.array([3.0, -1.0, 2.0])
    assert mixing_contraction_oracle(x, np.eye(3)).holds
    J = averaging_matrix(3)
    assert (J @ x) @ (J @ x) <= x @ x
    assert mixing_contraction_oracle(x, J).holds
    bad = np.array([[2.0, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert not mixing_contraction_oracle(x, bad).holds


def test_zeta_in_unit_interval():
    z = zeta(np.linspace(0.01, 1, 50), 0.25, 0.3)
    assert np.all((z > 0) & (z < 1))


def test_adaptation_drop_examples():
    x = np.array([1.0, 2.0, -1.0])
    # equality case delta^2 = omega_underbar, alpha = 1
    chk = adaptation_drop_oracle(x, np.array([0.5, 0.0, 0.0]), np.ones(3), 1.0, 0.25)
    assert chk.applicable and chk.holds
    chk = adaptation_drop_oracle(x, np.zeros(3), np.ones(3), 1.0, 0.25)
    assert not chk.applicable


def test_oracles_random_small():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((2000, 6))
    A = np.stack([random_birkhoff(6, rng) for _ in range(2000)])
    assert mixing_contraction_oracle(x, A).counterexamples == 0
    deltas = rng.standard_normal((2000, 6))
    chk = adaptation_drop_oracle(x, deltas, rng.uniform(0.1, 2, 6), 0.7, 0.3)
    assert chk.counterexamples == 0 and chk.applicable.any()


@pytest.fixture(scope="module")
def ex1():
    return load_scenario({"builtin": "paper-ex1", "horizon": 300})


def test_monte_carlo_deterministic(ex1):
    a = run_monte_carlo(ex1, 5, 10)
    b = run_monte_carlo(ex1, 5, 10)
    np.testing.assert_array_equal(a.V, b.V)
    np.testing.assert_array_equal(a.mean_error, b.mean_error)
    assert a.seeds == [10, 11, 12, 13, 14]


def test_single_trial_aggregate(ex1):
    one = run_trial(ex1, 12)
    agg = run_monte_carlo(ex1, 5, 10)
    assert one.trials == 1
    # trial 12 is part of both batches with its own noise streams
    _, finals = simulate(ex1.build(), [12], keep_trials=True)
    np.testing.assert_allclose(one.mean_estimates[-1], finals[0], atol=0)
    assert agg.V.shape == one.V.shape


def test_noise_free_trials_identical_and_monotone():
    cfg = load_scenario({"builtin": "paper-ex1", "horizon": 400, "noise_variances": 0.0})
    tr, finals = simulate(cfg.build(), [0, 1, 2], keep_trials=True)
    np.testing.assert_array_equal(finals[0], finals[1])
    np.testing.assert_array_equal(finals[0], finals[2])
    total = tr.total_V[tr.warmup:]
    assert np.all(np.diff(total) <= 1e-12)


def test_oracle_check_inside_simulation(ex1):
    tr = run_monte_carlo(ex1, 2, 0, oracle_check=True)
    assert tr.diagnostics["oracle_max_deviation"] < 1e-10
    assert tr.diagnostics["contraction_violations"] == 0
    assert tr.diagnostics["topology_violation_steps"] == []


def test_trial_count_checked(ex1):
    with pytest.raises(ValueError):
        run_monte_carlo(ex1, 0, 0)


def test_sparse_doubly_stochastic_converges_fast():
    rng = np.random.default_rng(5)
    for _ in range(200):
        a = random_doubly_stochastic(5, rng, density=0.3, max_iter=5000)
        assert validate(a).valid
