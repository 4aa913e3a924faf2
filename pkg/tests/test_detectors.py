import numpy as np
import pytest

from gfsig.detectors import (amp_decide, cdml_decide, cdml_estimate,
                             covariance_objective, error_metric,
                             mmv_amp_estimate)
from gfsig.seqgen import build_signature_matrix, gen_cubic_masks
from gfsig.simulator import (PURPOSE_ACTIVITY, PURPOSE_CHANNEL,
                             PURPOSE_DETECTOR, PURPOSE_NOISE, draw_activity,
                             draw_channel, synthesize, trial_rng)


def random_instance(rng, L=16, N=64, M=32, K=6, sigma_w2=0.1):
    """Small synthetic covariance-fit instance with known active set."""
    A = (rng.standard_normal((L, N)) + 1j * rng.standard_normal((L, N))) / np.sqrt(2)
    A /= np.linalg.norm(A, axis=0)
    S_scaled = np.sqrt(L) * A
    gamma = np.zeros(N)
    gamma[rng.choice(N, K, replace=False)] = 1.0
    H = (rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))) / np.sqrt(2)
    W = np.sqrt(sigma_w2 / 2) * (rng.standard_normal((L, M)) + 1j * rng.standard_normal((L, M)))
    Y = S_scaled @ (np.sqrt(gamma)[:, None] * H) + W
    return Y, S_scaled, gamma


# --- CD-ML -------------------------------------------------------------------

def test_cdml_zero_observation_gives_zero_gamma():
    rng = np.random.default_rng(0)
    _, S_scaled, _ = random_instance(rng)
    Y = np.zeros((16, 8), dtype=complex)
    est = cdml_estimate(Y, S_scaled, 0.1, sweeps=3, rng=rng)
    assert np.all(est.gamma_hat == 0)


def test_cdml_input_validation():
    rng = np.random.default_rng(1)
    Y, S_scaled, _ = random_instance(rng)
    with pytest.raises(ValueError):
        cdml_estimate(Y, S_scaled, 0.0)
    with pytest.raises(ValueError):
        cdml_estimate(Y, S_scaled, 0.1, sweeps=0)
    bad = Y.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        cdml_estimate(bad, S_scaled, 0.1)


def test_cdml_gamma_nonnegative_and_objective_monotone():
    rng = np.random.default_rng(2)
    worst = -np.inf
    for _ in range(10):
        Y, S_scaled, _ = random_instance(rng)
        est = cdml_estimate(Y, S_scaled, 0.1, sweeps=3, rng=rng,
                            record_update_objective=True)
        assert est.gamma_hat.min() >= 0
        worst = max(worst, np.diff(est.update_objectives).max())
        assert np.diff(est.objective_trace).max() <= 1e-8
    assert worst <= 1e-8


def test_cdml_recovers_clear_support():
    rng = np.random.default_rng(3)
    Y, S_scaled, gamma = random_instance(rng, M=128, K=4)
    est = cdml_estimate(Y, S_scaled, 0.1, sweeps=10, rng=rng)
    top = np.argsort(est.gamma_hat)[-4:]
    assert set(top) == set(np.flatnonzero(gamma))


def test_cdml_incremental_inverse_matches_direct():
    rng = np.random.default_rng(4)
    Y, S_scaled, _ = random_instance(rng)
    # no refresh within the run, so drift accumulates over all updates
    est = cdml_estimate(Y, S_scaled, 0.1, sweeps=8, rng=rng, refresh_every=10**9)
    L = S_scaled.shape[0]
    Sigma = (S_scaled * est.gamma_hat) @ S_scaled.conj().T + 0.1 * np.eye(L)
    direct = np.linalg.inv(Sigma)
    rel = np.linalg.norm(est.sigma_inv - direct) / np.linalg.norm(direct)
    assert rel < 1e-6


def test_cdml_single_active_device_argmax():
    # Monte-Carlo oracle: with many antennas the top coordinate falls in the
    # active device's block in almost every trial
    L, n_dev, Q, M = 16, 50, 2, 256
    rng0 = np.random.default_rng(42)
    A = rng0.standard_normal((L, n_dev * Q)) + 1j * rng0.standard_normal((L, n_dev * Q))
    A /= np.linalg.norm(A, axis=0)
    S_scaled = np.sqrt(L) * A
    hits = 0
    trials = 200
    for t in range(trials):
        act = draw_activity(n_dev, 1, Q, trial_rng(3, t, PURPOSE_ACTIVITY))
        ch = draw_channel(n_dev, M, Q, rng=trial_rng(3, t, PURPOSE_CHANNEL))
        rec = synthesize(A, act, ch, 0.1, trial_rng(3, t, PURPOSE_NOISE))
        est = cdml_estimate(rec.Y, S_scaled, 0.1, sweeps=8,
                            rng=trial_rng(3, t, PURPOSE_DETECTOR))
        if np.argmax(est.gamma_hat) // Q == act.active_set[0]:
            hits += 1
    assert hits / trials >= 0.99


def test_covariance_objective_matches_trace_form():
    rng = np.random.default_rng(5)
    Y, S_scaled, _ = random_instance(rng)
    Sigma_hat = Y @ Y.conj().T / Y.shape[1]
    gamma = np.abs(rng.standard_normal(64)) * 0.1
    L = 16
    Sigma = (S_scaled * gamma) @ S_scaled.conj().T + 0.1 * np.eye(L)
    expected = np.log(np.linalg.det(Sigma)).real + np.trace(np.linalg.inv(Sigma) @ Sigma_hat).real
    assert covariance_objective(S_scaled, gamma, 0.1, Sigma_hat) == pytest.approx(expected)


# --- decision rules ------------------------------------------------------------

def test_cdml_decide_examples():
    res = cdml_decide(np.zeros(8), 2, 4)
    assert np.all(res.indicators_hat == 0)

    res = cdml_decide(np.array([0.3, 0.1, 0.0, 0.0]), 1, 4, xi_th=0.25)
    assert res.indicators_hat.tolist() == [[1, 0, 0, 0]]
    assert res.q_hat[0] == 0 and res.statistic[0] == pytest.approx(0.3)

    res = cdml_decide(np.array([0.2, 0.2, 0.0, 0.0]), 1, 4, xi_th=0.25)
    assert np.all(res.indicators_hat == 0)  # below threshold, tie irrelevant

    # ties at or above threshold break toward the smallest index
    res = cdml_decide(np.array([0.4, 0.4, 0.0, 0.0]), 1, 4, xi_th=0.25)
    assert res.indicators_hat.tolist() == [[1, 0, 0, 0]]


def test_decide_scale_covariance():
    rng = np.random.default_rng(6)
    gamma = np.abs(rng.standard_normal(40))
    base = cdml_decide(gamma, 10, 4, xi_th=0.25)
    scaled = cdml_decide(3.7 * gamma, 10, 4, xi_th=3.7 * 0.25)
    assert np.array_equal(base.indicators_hat, scaled.indicators_hat)


def test_amp_decide_examples():
    X = np.zeros((8, 4), dtype=complex)
    res = amp_decide(X, 2, 4)
    assert np.all(res.indicators_hat == 0)

    X[1] = 1.0  # per-antenna power 1 -> xi = 1 >= 0.25
    res = amp_decide(X, 2, 4)
    assert res.indicators_hat[0].tolist() == [0, 1, 0, 0]

    X = np.zeros((8, 4), dtype=complex)
    X[4] = np.sqrt(0.3)
    X[5] = np.sqrt(0.26)
    res = amp_decide(X, 2, 4)
    assert res.indicators_hat[1].tolist() == [1, 0, 0, 0]
    assert res.q_hat[1] == 0


def test_amp_decide_antenna_check():
    X = np.zeros((8, 4), dtype=complex)
    with pytest.raises(ValueError):
        amp_decide(X, 2, 4, n_antennas=8)


# --- MMV-AMP -------------------------------------------------------------------

def test_amp_zero_observation_shrinks_to_zero():
    rng = np.random.default_rng(7)
    _, S_scaled, _ = random_instance(rng)
    Y = np.zeros((16, 8), dtype=complex)
    est = mmv_amp_estimate(Y, S_scaled, 0.05, 0.1)
    assert np.abs(est.X_hat).max() < 1e-8
    assert not est.diverged


def test_amp_zero_rate_returns_zero():
    rng = np.random.default_rng(8)
    Y, S_scaled, _ = random_instance(rng)
    est = mmv_amp_estimate(Y, S_scaled, 0.0, 0.1)
    assert np.all(est.X_hat == 0) and est.iterations == 0


def test_amp_validation():
    rng = np.random.default_rng(9)
    Y, S_scaled, _ = random_instance(rng)
    with pytest.raises(ValueError):
        mmv_amp_estimate(Y, S_scaled, 1.0, 0.1)
    with pytest.raises(ValueError):
        mmv_amp_estimate(Y, S_scaled, 0.1, 0.1, damping=1.0)
    with pytest.raises(ValueError):
        mmv_amp_estimate(Y, S_scaled, 0.1, 0.1, max_iters=0)


def test_amp_noiseless_single_device_recovery():
    # Monte-Carlo oracle, K = 1, M = 8, no noise
    sig = build_signature_matrix(gen_cubic_masks(23), 100, 4)
    S = sig.entries
    S_scaled = np.sqrt(23) * S
    errs = []
    for t in range(100):
        act = draw_activity(100, 1, 4, trial_rng(4, t, PURPOSE_ACTIVITY))
        ch = draw_channel(100, 8, 4, rng=trial_rng(4, t, PURPOSE_CHANNEL))
        rec = synthesize(S, act, ch, 0.0, trial_rng(4, t, PURPOSE_NOISE))
        est = mmv_amp_estimate(rec.Y, S_scaled, 1 / 400, 1e-12, max_iters=100)
        i = act.active_set[0] * 4 + int(np.argmax(act.indicators[act.active_set[0]]))
        errs.append(np.linalg.norm(est.X_hat[i] - ch.H[i]) / np.linalg.norm(ch.H[i]))
    assert np.mean(errs) <= 0.05


def test_amp_support_recovery_k10():
    # Monte-Carlo oracle at the easy operating point K < L
    sig = build_signature_matrix(gen_cubic_masks(23), 200, 4)
    S = sig.entries
    S_scaled = np.sqrt(23) * S
    pes = []
    for t in range(200):
        act = draw_activity(200, 10, 4, trial_rng(5, t, PURPOSE_ACTIVITY))
        ch = draw_channel(200, 10, 4, rng=trial_rng(5, t, PURPOSE_CHANNEL))
        rec = synthesize(S, act, ch, 0.1, trial_rng(5, t, PURPOSE_NOISE))
        est = mmv_amp_estimate(rec.Y, S_scaled, 10 / 800, 0.1)
        res = amp_decide(est.X_hat, 200, 4)
        pes.append(error_metric(act, res).p_e)
    assert np.mean(pes) <= 0.05


def test_amp_fixed_point_keeps_support():
    # noiseless start at the truth: one iteration must not change the decision
    sig = build_signature_matrix(gen_cubic_masks(23), 50, 2)
    S = sig.entries
    S_scaled = np.sqrt(23) * S
    act = draw_activity(50, 5, 2, trial_rng(6, 0, PURPOSE_ACTIVITY))
    ch = draw_channel(50, 6, 2, rng=trial_rng(6, 0, PURPOSE_CHANNEL))
    rec = synthesize(S, act, ch, 0.0, trial_rng(6, 0, PURPOSE_NOISE))
    X_true = (act.indicators.reshape(-1)[:, None] * ch.H).astype(complex)
    est = mmv_amp_estimate(rec.Y, S_scaled, 5 / 100, 1e-12, max_iters=1, x_init=X_true)
    before = amp_decide(X_true, 50, 2)
    after = amp_decide(est.X_hat, 50, 2)
    assert np.array_equal(before.indicators_hat, after.indicators_hat)


def test_amp_divergence_flagged_not_raised():
    rng = np.random.default_rng(10)
    Y, S_scaled, _ = random_instance(rng, M=4)
    huge = 1e9 * np.ones((64, 4), dtype=complex)
    est = mmv_amp_estimate(Y, S_scaled, 0.1, 0.1, x_init=huge, damping=0.99)
    assert est.diverged
    assert np.all(np.isfinite(est.residual_norm_trace[:-1]))


# --- error metric ---------------------------------------------------------------

def test_error_metric_cases():
    truth = np.zeros((4, 2), dtype=np.int8)
    truth[0, 1] = 1
    truth[2, 0] = 1

    perfect = cdml_decide(np.array([0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]), 4, 2)
    res = error_metric(truth, perfect)
    assert res.p_e == 0.0

    # miss: active device 0 declared inactive
    missed = cdml_decide(np.array([0.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]), 4, 2)
    res = error_metric(truth, missed)
    assert res.per_device.tolist() == [True, False, False, False]

    # wrong symbol: right activity, wrong position
    wrong_q = cdml_decide(np.array([1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]), 4, 2)
    res = error_metric(truth, wrong_q)
    assert res.per_device.tolist() == [True, False, False, False]
    assert res.p_e == pytest.approx(0.25)

    # false alarm
    fa = cdml_decide(np.array([0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.9]), 4, 2)
    assert error_metric(truth, fa).per_device.tolist() == [False, False, False, True]
