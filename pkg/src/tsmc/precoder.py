"""Causal inverse-channel precoder and its stability certificate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter, lfiltic

from .channel import as_tap_array
from .errors import ConfigError, NumericsError, PreconditionError, SingularChannelError

POLE_RESIDUAL = 1e-8


@dataclass(frozen=True)
class Stability:
    certified: bool
    min_ratio: float
    max_ratio: float
    max_modulus: float


def enestrom_kakeya_bounds(taps) -> tuple[float, float]:
    """Ratio bounds on the pole moduli of 1/p(z).

    With c_i = p_{L-i}, every root of sum_i c_i z^i has modulus between
    min c_{i-1}/c_i and max c_{i-1}/c_i.
    """
    p = as_tap_array(taps)
    if p.size < 2:
        raise PreconditionError("need at least two taps for a non-constant polynomial")
    if np.any(p <= 0) or not np.all(np.isfinite(p)):
        raise PreconditionError("Enestrom-Kakeya bounds need strictly positive taps")
    c = p[::-1]
    ratios = c[:-1] / c[1:]
    return float(ratios.min()), float(ratios.max())


def _relative_residual(p, z):
    num = np.abs(np.polyval(p, z))
    den = np.polyval(np.abs(p), np.abs(z))
    return num / den


def verify_poles(taps) -> np.ndarray:
    """Moduli of the poles of 1/p(z), sorted descending.

    The poles are the eigenvalues of the companion matrix of
    p_0 z^L + p_1 z^(L-1) + ... + p_L; each root is Newton-polished until its
    relative residual is below 1e-8.
    """
    p = as_tap_array(taps)
    if p.size < 2:
        raise ConfigError("verify_poles needs L >= 1")
    if p[0] == 0:
        raise SingularChannelError("leading tap is zero")
    z = np.roots(p).astype(complex)
    dp = np.polyder(p)
    for _ in range(5):
        res = _relative_residual(p, z)
        if np.all(res < POLE_RESIDUAL):
            break
        bad = res >= POLE_RESIDUAL
        z[bad] -= np.polyval(p, z[bad]) / np.polyval(dp, z[bad])
    else:
        if np.any(_relative_residual(p, z) >= POLE_RESIDUAL):
            raise NumericsError("pole computation did not reach residual 1e-8")
    return np.sort(np.abs(z))[::-1]


def certify(taps) -> Stability:
    p = as_tap_array(taps)
    if p.size == 1:
        return Stability(True, float("nan"), float("nan"), 0.0)
    try:
        lo, hi = enestrom_kakeya_bounds(p)
    except PreconditionError:
        lo = hi = float("nan")
    rho = float(verify_poles(p)[0])
    return Stability(rho < 1.0, lo, hi, rho)


class PrecoderFilter:
    """Recursion X_j = (B_j - sum_{k>=1} p_k X_{j-k}) / p_0 from zero initial state.

    ``step`` runs one symbol at a time; ``apply`` filters a block and carries
    the same state, so both can be mixed on one stream.
    """

    def __init__(self, taps, stability: Stability | None = None):
        p = as_tap_array(taps).copy()
        if p[0] == 0:
            raise SingularChannelError("leading tap is zero")
        self.taps = p
        self.stability = certify(p) if stability is None else stability
        self._hist = np.zeros(p.size - 1)  # X_{j-1}, X_{j-2}, ..., X_{j-L}

    @property
    def L(self) -> int:
        return self.taps.size - 1

    @property
    def state(self) -> np.ndarray:
        return self._hist.copy()

    def reset(self):
        self._hist[:] = 0.0

    def step(self, b: float) -> float:
        x = (b - float(np.dot(self.taps[1:], self._hist))) / self.taps[0]
        if self.L:
            self._hist[1:] = self._hist[:-1]
            self._hist[0] = x
        return x

    def apply(self, B) -> np.ndarray:
        B = np.asarray(B, dtype=float)
        if self.L == 0:
            return B / self.taps[0]
        # lfiltic assumes a monic denominator, so normalise by p_0 first
        b, a = [1.0 / self.taps[0]], self.taps / self.taps[0]
        X, _ = lfilter(b, a, B, zi=lfiltic(b, a, self._hist))
        tail = np.concatenate([self._hist[::-1], X])[-self.L:]
        self._hist = tail[::-1].copy()
        return X

    def impulse_response(self, n: int) -> np.ndarray:
        delta = np.zeros(n)
        delta[0] = 1.0
        return lfilter([1.0], self.taps, delta)


def invert_channel(taps) -> PrecoderFilter:
    return PrecoderFilter(taps)


def apply_frames(taps, B) -> np.ndarray:
    """Precode each row of ``B`` independently from rest."""
    B = np.asarray(B, dtype=float)
    return lfilter([1.0], as_tap_array(taps), B, axis=-1)


def estimate_power(taps, beta: float, horizon: int = 1000,
                   rng: np.random.Generator | None = None,
                   samples: int = 1_000_000, max_horizon: int = 2**24) -> tuple[float, float]:
    """(E|X_k|, E[X_k^2]) for i.i.d. equiprobable +-beta precoder input.

    The second moment is beta^2 times the energy of the precoder impulse
    response; the first moment is a Monte Carlo average.
    """
    if horizon < 1000:
        raise ConfigError("horizon must be at least 1000")
    filt = PrecoderFilter(taps)
    if not filt.stability.certified:
        raise PreconditionError("precoder is not certified stable")
    n = horizon
    while True:
        h2 = filt.impulse_response(n) ** 2
        head = h2[: n // 2].sum()
        tail = h2[n // 2:].sum()
        if tail <= 1e-12 * head:
            break
        if not np.isfinite(tail) or n >= max_horizon:
            raise NumericsError("precoder impulse response is not decaying")
        n *= 2
    mean_square = beta**2 * float(h2.sum())
    if filt.L == 0:
        return beta / filt.taps[0], mean_square
    if rng is None:
        raise ConfigError("estimate_power needs an explicit rng")
    warmup = n // 2
    B = beta * rng.choice((-1.0, 1.0), size=samples + warmup)
    mean_abs = float(np.abs(filt.apply(B)[warmup:]).mean())
    # the exact moments obey Jensen; keep the sampling error from breaking it
    return min(mean_abs, float(np.sqrt(mean_square))), mean_square
