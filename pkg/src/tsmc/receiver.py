"""Particle-counting noise and bit detectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.stats import norm

from .channel import as_tap_array
from .errors import ConfigError, ContractViolation

REGIMES = ("full", "none", "empirical")
POINT_MASS_THRESHOLD = 1e-12


@dataclass(frozen=True)
class NoiseModel:
    """Counting noise with variance g / V_R; ``V_R`` in m^3."""

    V_R: float
    regime: str = "full"

    def __post_init__(self):
        if not (np.isfinite(self.V_R) and self.V_R > 0):
            raise ConfigError("V_R must be positive")
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}")

    def variance(self, g):
        return np.asarray(g, dtype=float) / self.V_R


@dataclass(frozen=True, eq=False)
class Observation:
    Y: np.ndarray
    mean_trace: np.ndarray
    variance_trace: np.ndarray


def _window(taps, window):
    p = as_tap_array(taps)
    w = np.asarray(window, dtype=float)
    if w.shape[-1] != p.size:
        raise ConfigError(f"window must hold L+1={p.size} symbols, got {w.shape[-1]}")
    return p, w


def g_full_reaction(taps, window):
    """|sum_k p_k x_{j-k}|; ``window[..., 0]`` is the current symbol x_j."""
    p, w = _window(taps, window)
    out = np.abs(w @ p)
    return out if np.ndim(out) else float(out)


def g_no_reaction(taps, window):
    """sum_k p_k |x_{j-k}|."""
    p, w = _window(taps, window)
    out = np.abs(w) @ p
    return out if np.ndim(out) else float(out)


def channel_output(taps, X):
    """Noiseless received level sum_k p_k X_{j-k} along the last axis, from rest."""
    return lfilter(as_tap_array(taps), [1.0], np.asarray(X, dtype=float), axis=-1)


def g_trace(taps, X, regime: str):
    """Per-slot sum concentration for a whole frame under a closed-form regime."""
    if regime == "full":
        return np.abs(channel_output(taps, X))
    if regime == "none":
        return channel_output(taps, np.abs(X))
    raise ConfigError(f"no closed form for regime {regime!r}")


def observe(mean, g_value, noise: NoiseModel | float, rng: np.random.Generator):
    """Y = mean + N(0, g / V_R)."""
    g = np.asarray(g_value, dtype=float)
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ContractViolation("g must be finite and nonnegative")
    V_R = noise.V_R if isinstance(noise, NoiseModel) else float(noise)
    z = rng.standard_normal(np.broadcast(np.asarray(mean), g).shape)
    out = np.asarray(mean, dtype=float) + np.sqrt(g / V_R) * z
    return out if out.ndim else float(out)


def ts_detect(Y):
    """Sign detector for +-beta; ties go to bit 1."""
    out = (np.asarray(Y) >= 0).astype(np.int8)
    return out if out.ndim else int(out)


def map_detect_genie(Y, isi, p0: float, a: float, V_R: float):
    """MAP decision between N(I, I/V_R) (bit 0) and N(I+p0 a, (I+p0 a)/V_R) (bit 1).

    ``isi`` is the interference I known to the receiver. When I = 0 the bit-0
    hypothesis is a point mass and the rule becomes a threshold at
    ``1e-12 * p0 * a`` above I.
    """
    if not (p0 > 0 and a > 0 and V_R > 0):
        raise ContractViolation("p0, a and V_R must be positive")
    Y = np.asarray(Y, dtype=float)
    I = np.asarray(isi, dtype=float)
    if np.any(I < 0):
        raise ContractViolation("ISI of a nonnegative scheme cannot be negative")
    s = p0 * a
    v0 = I / V_R
    v1 = (I + s) / V_R
    point = v0 == 0
    safe_v0 = np.where(point, 1.0, v0)
    llr = (-(Y - I - s) ** 2 / (2 * v1) - 0.5 * np.log(v1)
           + (Y - I) ** 2 / (2 * safe_v0) + 0.5 * np.log(safe_v0))
    bit = np.where(point, Y >= I + POINT_MASS_THRESHOLD * s, llr >= 0).astype(np.int8)
    return bit if bit.ndim else int(bit)


def ts_ber_analytic(beta, V_R: float):
    """Bit error rate Q(sqrt(beta V_R)) of the sign detector when Y ~ N(+-beta, beta/V_R)."""
    return norm.sf(np.sqrt(np.asarray(beta, dtype=float) * V_R))
