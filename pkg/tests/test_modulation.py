import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.signal import lfilter

from tsmc.errors import ConfigError
from tsmc.modulation import csk_encode, mcsk_encode, normalize_power, split_signed, ts_encode

bits_st = st.lists(st.integers(0, 1), max_size=200)


def test_ts_levels():
    np.testing.assert_array_equal(ts_encode([1, 0, 1], 2.0).symbols, [2, -2, 2])
    assert ts_encode([], 1.0).symbols.size == 0
    np.testing.assert_array_equal(ts_encode(np.ones(5, int), 3e6).symbols, np.full(5, 3e6))


def test_encoders_reject_bad_input():
    with pytest.raises(ConfigError):
        ts_encode([2], 1.0)
    with pytest.raises(ConfigError):
        csk_encode([1], 0.0)


def test_split_examples():
    d = split_signed([2.0, -2.0])
    np.testing.assert_array_equal(d.s_A, [2, 0])
    np.testing.assert_array_equal(d.s_B, [0, 2])
    z = split_signed(np.zeros(4))
    assert not z.s_A.any() and not z.s_B.any()


def test_split_reconstructs_sine():
    x = 2 * np.sin(np.arange(100))
    d = split_signed(x)
    np.testing.assert_array_equal(d.difference, x)
    assert np.all(d.s_A >= 0) and np.all(d.s_B >= 0) and not np.any(d.s_A * d.s_B)


@given(st.lists(st.floats(-1e9, 1e9), max_size=100))
def test_split_properties(x):
    d = split_signed(x)
    np.testing.assert_array_equal(d.difference, np.asarray(x, dtype=float))
    assert np.all(d.s_A >= 0) and np.all(d.s_B >= 0)


def test_csk_examples(rng):
    np.testing.assert_array_equal(csk_encode([1, 0], 1.0).symbols, [1, 0])
    bits = rng.integers(0, 2, 100_000)
    assert csk_encode(bits, 4.0).symbols.mean() == pytest.approx(2.0, rel=0.02)


def test_mcsk_examples():
    a, b = mcsk_encode([1, 1, 1], 1.0)
    np.testing.assert_array_equal(a.symbols, [1, 0, 1])
    np.testing.assert_array_equal(b.symbols, [0, 1, 0])
    a, b = mcsk_encode([0, 0, 0, 0], 1.0)
    assert not a.symbols.any() and not b.symbols.any()


@given(bits_st, st.floats(0.1, 10))
def test_mcsk_mass_equals_csk(bits, a):
    fa, fb = mcsk_encode(bits, a)
    np.testing.assert_array_equal(fa.symbols + fb.symbols, csk_encode(bits, a).symbols)


def test_normalize_csk_closed_form():
    assert normalize_power("CSK", [1.0], 3.0, 1.5) == 4.0
    assert normalize_power("MCSK", [1.0], 1.0, 1.0) == 2.0


def test_normalize_ts_identity(rng):
    assert normalize_power("TS", [1.0], 2.5, 2.5, rng=rng) == pytest.approx(1.0)


def test_normalize_ts_monte_carlo_oracle(rng):
    taps = np.array([1.0, 0.5])
    B = rng.choice((-1.0, 1.0), 1_000_000)
    oracle = np.abs(lfilter([1.0], taps, B)[100:]).mean()
    s = normalize_power("TS", taps, 1.0, 1.0, rng=np.random.default_rng(7))
    assert s * oracle == pytest.approx(1.0, rel=0.01)


def test_normalize_ts_needs_rng():
    with pytest.raises(ConfigError):
        normalize_power("TS", [1.0, 0.5], 1.0, 1.0)
