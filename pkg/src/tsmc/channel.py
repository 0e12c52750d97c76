"""Macroscopic diffusion channel: Green's function, pulse response and taps.

All quantities are SI. In one dimension a concentration is molecules per
metre, in three dimensions molecules per cubic metre.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigError, DivergenceError, ModelError, TapError

MEMORY_CAP = 10_000
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class ChannelModel:
    """Unbounded, drift-free diffusion medium with a point receiver.

    ``pulse_width`` of zero means impulse release; a positive value means a
    unit-area rectangular release of that duration.
    """

    dimension: int = 1
    D: float = 2.2e-9
    receiver_distance: float = 2.15e-7
    velocity: float = 0.0
    pulse_width: float = 0.0

    def __post_init__(self):
        if self.dimension not in (1, 3):
            raise ConfigError(f"dimension must be 1 or 3, got {self.dimension}")
        if not (np.isfinite(self.D) and self.D > 0):
            raise ConfigError(f"diffusion coefficient must be positive, got {self.D}")
        if not (np.isfinite(self.receiver_distance) and self.receiver_distance > 0):
            raise ConfigError("receiver_distance must be positive")
        if self.velocity != 0:
            raise ConfigError("drift velocity is not supported; set velocity=0")
        if not (np.isfinite(self.pulse_width) and self.pulse_width >= 0):
            raise ConfigError("pulse_width must be >= 0")

    @property
    def impulse(self) -> bool:
        return self.pulse_width == 0

    @property
    def characteristic_time(self) -> float:
        """Peak time of the impulse response, r^2 / (2 n D)."""
        return self.receiver_distance**2 / (2 * self.dimension * self.D)


@dataclass(frozen=True, eq=False)
class TapVector:
    """Sampled pulse response p_0 > p_1 > ... > p_L > 0 at spacing ``Ts``."""

    taps: np.ndarray
    Ts: float = 1.0

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=float))
        if taps.ndim != 1 or taps.size == 0:
            raise TapError("taps must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(taps)) or np.any(taps <= 0):
            raise TapError("taps must be finite and strictly positive")
        if np.any(np.diff(taps) >= 0):
            raise TapError("taps must be strictly decreasing")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def L(self) -> int:
        return self.taps.size - 1

    @property
    def p0(self) -> float:
        return float(self.taps[0])

    def normalized(self) -> "TapVector":
        """Same shape with p_0 = 1."""
        return TapVector(self.taps / self.taps[0], self.Ts)

    def subsampled(self, step: int) -> "TapVector":
        return TapVector(self.taps[::step], self.Ts * step)

    def __len__(self):
        return self.taps.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.taps, dtype=dtype)


def as_tap_array(taps) -> np.ndarray:
    """Accept a TapVector or any 1-D array-like of taps."""
    if isinstance(taps, TapVector):
        return taps.taps
    return np.atleast_1d(np.asarray(taps, dtype=float))


def _check_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise ConfigError(f"{name} must be finite")


def green_function(model: ChannelModel, t, r):
    """Free-space diffusion kernel 1[t>0] (4 pi D t)^(-n/2) exp(-r^2 / 4 D t)."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    _check_finite("t", t)
    _check_finite("r", r)
    positive = t > 0
    ts = np.where(positive, t, 1.0)
    n = model.dimension
    val = (4 * np.pi * model.D * ts) ** (-n / 2) * np.exp(-(r**2) / (4 * model.D * ts))
    out = np.where(positive, val, 0.0)
    return out if out.ndim else float(out)


def _rectangle_convolution(model: ChannelModel, t: np.ndarray) -> np.ndarray:
    width = model.pulse_width
    r = model.receiver_distance
    lo = np.clip(t - width, 0.0, None)
    hi = np.clip(t, 0.0, None)
    # composite Gauss-Legendre; panels a quarter of the kernel's time scale
    panels = int(min(256, max(1, np.ceil(width / (0.25 * model.characteristic_time)))))
    edges = np.linspace(0.0, 1.0, panels + 1)
    span = (hi - lo)[..., None]
    a = lo[..., None] + span * edges[:-1]
    half = 0.5 * span / panels
    nodes = (a + half)[..., None] + half[..., None] * _GL_NODES
    vals = green_function(model, nodes.reshape(t.shape + (-1,)), r)
    vals = vals.reshape(nodes.shape) * _GL_WEIGHTS
    return (vals.sum(axis=(-1, -2)) * half[..., 0]) / width


def pulse_response(model: ChannelModel, t, amount: float = 1.0):
    """Concentration at the receiver after releasing ``amount`` at time 0."""
    t_arr = np.asarray(t, dtype=float)
    _check_finite("t", t_arr)
    if model.impulse:
        p = green_function(model, t_arr, model.receiver_distance)
    else:
        p = _rectangle_convolution(model, np.atleast_1d(t_arr)).reshape(t_arr.shape)
    out = amount * np.asarray(p)
    return out if out.ndim else float(out)


def _argmax_unimodal(f: Callable, lo: float, hi: float, n: int = 10_000,
                     tol: float = 1e-6) -> float:
    """Argmax of ``f`` on [lo, hi]; raises ModelError if the scan is not unimodal."""
    grid = np.geomspace(lo, hi, n)
    v = np.asarray(f(grid), dtype=float)
    i = int(np.argmax(v))
    vmax = v[i]
    if not vmax > 0:
        raise ModelError("pulse response vanishes on the scan window")
    if i == 0 or i == n - 1:
        raise ModelError("pulse peak lies on the edge of the scan window")
    slack = tol * vmax
    right = v[i:]
    left = v[i::-1]
    for side in (right, left):
        if np.any(side > np.minimum.accumulate(side) + slack):
            raise ModelError("pulse response has more than one local maximum")
    res = minimize_scalar(lambda s: -float(f(s)), bracket=(grid[i - 1], grid[i], grid[i + 1]),
                          method="golden", options={"xtol": 1e-9})
    return float(res.x)


def sampling_interval(model: ChannelModel) -> float:
    """Ts = argmax_t p(t), found by a log-spaced scan plus golden-section search."""
    center = model.characteristic_time + 0.5 * model.pulse_width
    return _argmax_unimodal(lambda s: pulse_response(model, s), center / 100, center * 100)


def channel_taps(model: ChannelModel, L: int, Ts: float | None = None) -> TapVector:
    """Taps p_j = p((j+1) Ts), j = 0..L; tap 0 is the peak one slot after release."""
    if int(L) != L or L < 1:
        raise ConfigError(f"L must be an integer >= 1, got {L}")
    if Ts is None:
        Ts = sampling_interval(model)
    elif not Ts > 0:
        raise ConfigError("Ts must be positive")
    t = Ts * np.arange(1, int(L) + 2)
    return TapVector(pulse_response(model, t), Ts)


def memory_length(model: ChannelModel, epsilon: float, Ts: float | None = None,
                  cap: int = MEMORY_CAP) -> int:
    """Smallest L >= 1 with p((L+1) Ts) / p_0 < epsilon."""
    if not 0 < epsilon < 1:
        raise ConfigError("epsilon must lie in (0, 1)")
    if Ts is None:
        Ts = sampling_interval(model)
    p = pulse_response(model, Ts * np.arange(1, cap + 2))
    below = np.nonzero(p[1:] / p[0] < epsilon)[0]
    if below.size == 0:
        raise DivergenceError(f"memory length exceeds cap {cap} for epsilon={epsilon}")
    return int(below[0]) + 1
