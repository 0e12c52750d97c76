import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from tsmc.errors import ConfigError, ContractViolation
from tsmc.precoder import apply_frames
from tsmc.receiver import (NoiseModel, channel_output, g_full_reaction, g_no_reaction, g_trace,
                           map_detect_genie, observe, ts_ber_analytic, ts_detect)

from conftest import decreasing_taps


def test_g_examples():
    taps = [1.0, 0.5]
    assert g_full_reaction(taps, [0.0, 0.0]) == 0.0
    assert g_full_reaction(taps, [2.0, -2.0]) == pytest.approx(1.0)
    assert g_no_reaction(taps, [2.0, -2.0]) == pytest.approx(3.0)
    assert g_no_reaction(taps, [0.0, 0.0]) == 0.0
    assert g_no_reaction(taps, [1.0, 3.0]) == g_full_reaction(taps, [1.0, 3.0])


def test_g_sandwich_on_random_windows(rng):
    taps = np.sort(rng.uniform(0.01, 1, 8))[::-1]
    w = rng.normal(size=(10_000, 8))
    assert np.all(g_full_reaction(taps, w) <= g_no_reaction(taps, w) + 1e-12)


def test_window_length_is_checked():
    with pytest.raises(ConfigError):
        g_full_reaction([1.0, 0.5], [1.0])


def test_g_trace_matches_windows(rng):
    taps = np.array([1.0, 0.6, 0.2])
    X = rng.normal(size=30)
    w = np.stack([X[j - np.arange(3)] for j in range(2, 30)])
    np.testing.assert_allclose(g_trace(taps, X, "full")[2:], g_full_reaction(taps, w))
    np.testing.assert_allclose(g_trace(taps, X, "none")[2:], g_no_reaction(taps, w))


def test_zero_variance_returns_mean(rng):
    assert observe(3.0, 0.0, 1.0, rng) == 3.0


def test_negative_g_is_rejected(rng):
    with pytest.raises(ContractViolation):
        observe(1.0, -1.0, 1.0, rng)


def test_noise_variance(rng):
    Y = observe(np.zeros(1_000_000), 4.0, NoiseModel(2.0), rng)
    assert Y.var() == pytest.approx(2.0, rel=0.01)


def test_precoded_observation_moments(rng):
    taps = np.array([1.0, 0.7, 0.4, 0.1])
    beta, V_R = 5.0, 2.0
    X = apply_frames(taps, np.full(200_000, beta))
    mean = channel_output(taps, X)
    Y = observe(mean, np.abs(mean), V_R, rng)[100:]
    assert Y.mean() == pytest.approx(beta, rel=0.01)
    assert Y.var() == pytest.approx(beta / V_R, rel=0.02)


def test_sign_detector():
    assert ts_detect(0.1) == 1 and ts_detect(-0.1) == 0 and ts_detect(0.0) == 1


def test_sign_detector_ber_matches_tail(rng):
    beta, V_R, n = 1.0, 2.0, 1_000_000
    Y = beta + np.sqrt(beta / V_R) * rng.standard_normal(n)
    ber = 1 - ts_detect(Y).mean()
    p = ts_ber_analytic(beta, V_R)
    assert abs(ber - p) <= 3 * np.sqrt(p * (1 - p) / n)
    assert p == pytest.approx(norm.sf(np.sqrt(2.0)))


def test_map_point_mass():
    assert map_detect_genie(1e6, 0.0, 1.0, 1e6, 1.0) == 1
    assert map_detect_genie(0.0, 0.0, 1.0, 1e6, 1.0) == 0


def test_map_equal_variance_limit():
    # the log-variance term shifts the threshold by ~1/(2 V_R), negligible here
    I, s, V_R = 1e6, 1.0, 1e6
    assert map_detect_genie(I + 0.5 * s + 1e-3, I, 1.0, s, V_R) == 1
    assert map_detect_genie(I + 0.5 * s - 1e-3, I, 1.0, s, V_R) == 0


def test_map_beats_midpoint_threshold(rng):
    n, p0, a, V_R = 100_000, 1.0, 4.0, 1.0
    I = rng.uniform(0, 8, n)
    bits = rng.integers(0, 2, n)
    m = I + p0 * a * bits
    Y = m + np.sqrt(m / V_R) * rng.standard_normal(n)
    map_err = np.count_nonzero(map_detect_genie(Y, I, p0, a, V_R) != bits)
    mid_err = np.count_nonzero((Y >= I + p0 * a / 2).astype(int) != bits)
    assert map_err <= mid_err


def test_map_rejects_bad_parameters():
    with pytest.raises(ContractViolation):
        map_detect_genie(1.0, -1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ContractViolation):
        map_detect_genie(1.0, 0.0, 0.0, 1.0, 1.0)


@given(decreasing_taps(max_len=6), st.lists(st.floats(-10, 10), min_size=6, max_size=6))
def test_sandwich_property(taps, w):
    w = np.asarray(w[: taps.size])
    assert g_full_reaction(taps, w) <= g_no_reaction(taps, w) + 1e-9
