import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import lfilter

from tsmc.errors import ConfigError, PreconditionError, SingularChannelError
from tsmc.precoder import (PrecoderFilter, apply_frames, certify, enestrom_kakeya_bounds,
                           estimate_power, invert_channel, verify_poles)

from conftest import decreasing_taps, random_taps


def test_identity_precoder():
    B = np.arange(5.0)
    np.testing.assert_array_equal(invert_channel([1.0]).apply(B), B)


def test_hand_recursion():
    f = invert_channel([1.0, 0.5])
    out = [f.step(b) for b in (1, 0, 0, 0)]
    np.testing.assert_allclose(out, [1, -0.5, 0.25, -0.125])


def test_step_and_block_share_state(rng):
    taps = random_taps(rng, 6)
    B = rng.normal(size=50)
    f1, f2 = PrecoderFilter(taps), PrecoderFilter(taps)
    stepped = [f1.step(b) for b in B]
    mixed = np.concatenate([f2.apply(B[:20]), [f2.step(b) for b in B[20:23]], f2.apply(B[23:])])
    np.testing.assert_allclose(stepped, mixed, rtol=1e-12, atol=1e-12)
    f2.reset()
    assert not f2.state.any()


@settings(max_examples=50, deadline=None)
@given(decreasing_taps(), st.integers(0, 2**32 - 1))
def test_round_trip(taps, seed):
    B = np.random.default_rng(seed).normal(size=200)
    X = apply_frames(taps, B)
    np.testing.assert_allclose(lfilter(taps, [1.0], X), B, atol=1e-9 * np.abs(B).max())


def test_leading_zero_tap_is_singular():
    with pytest.raises(SingularChannelError):
        PrecoderFilter([0.0, 1.0])


def test_ek_examples():
    assert enestrom_kakeya_bounds([1.0, 0.5]) == (0.5, 0.5)
    lo, hi = enestrom_kakeya_bounds([4.0, 3.0, 2.0, 1.0])
    assert (lo, hi) == pytest.approx((0.5, 0.75))


def test_ek_preconditions():
    with pytest.raises(PreconditionError):
        enestrom_kakeya_bounds([1.0, -0.5])
    with pytest.raises(PreconditionError):
        enestrom_kakeya_bounds([1.0])


@given(decreasing_taps())
def test_decreasing_taps_have_ratio_below_one(taps):
    assert enestrom_kakeya_bounds(taps)[1] < 1


def test_pole_example():
    np.testing.assert_allclose(verify_poles([1.0, 0.5]), [0.5])


def test_poles_inside_unit_disk_and_ek_interval(rng):
    for _ in range(100):
        taps = random_taps(rng, int(rng.integers(1, 21)))
        mod = verify_poles(taps)
        lo, hi = enestrom_kakeya_bounds(taps)
        assert np.all(mod < 1)
        assert np.all(mod >= lo - 1e-8) and np.all(mod <= hi + 1e-8)


def test_certify_flags_unstable_channel():
    s = certify([1.0, 2.0])
    assert not s.certified and s.max_modulus == pytest.approx(2.0)


def test_power_identity():
    assert estimate_power([1.0], 3.0) == (3.0, 9.0)


def test_power_geometric_series(rng):
    mean_abs, mean_sq = estimate_power([1.0, 0.5], 2.0, rng=rng)
    assert mean_sq == pytest.approx(4.0 * 4 / 3, rel=1e-12)
    assert mean_abs <= np.sqrt(mean_sq)


@settings(max_examples=15, deadline=None)
@given(decreasing_taps(max_len=8), st.integers(0, 2**32 - 1))
def test_power_jensen(taps, seed):
    mean_abs, mean_sq = estimate_power(taps, 1.0, rng=np.random.default_rng(seed), samples=20_000)
    assert mean_abs <= np.sqrt(mean_sq) * (1 + 1e-9)


def test_power_rejects_short_horizon():
    with pytest.raises(ConfigError):
        estimate_power([1.0, 0.5], 1.0, horizon=10)
