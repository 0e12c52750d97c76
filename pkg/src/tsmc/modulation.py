"""Bit-to-level encoders (TS, CSK, MCSK) and power normalisation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import as_tap_array
from .errors import ConfigError, EstimationError
from .precoder import invert_channel

SCHEMES = ("TS", "CSK", "MCSK")


@dataclass(frozen=True, eq=False)
class SymbolFrame:
    symbols: np.ndarray
    scheme: str
    beta: float


@dataclass(frozen=True, eq=False)
class DualRelease:
    """Nonnegative release levels for molecule types A and B."""

    s_A: np.ndarray
    s_B: np.ndarray

    @property
    def difference(self) -> np.ndarray:
        return self.s_A - self.s_B


def _bits(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64).ravel()
    if b.size and not np.all((b == 0) | (b == 1)):
        raise ConfigError("bits must be 0 or 1")
    return b


def _positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ConfigError(f"{name} must be positive, got {value}")


def ts_encode(bits, beta: float) -> SymbolFrame:
    """Antipodal levels: 1 -> +beta, 0 -> -beta."""
    _positive("beta", beta)
    b = _bits(bits)
    return SymbolFrame(beta * (2.0 * b - 1.0), "TS", beta)


def csk_encode(bits, amplitude: float) -> SymbolFrame:
    """On-off keying: 1 -> amplitude, 0 -> nothing released."""
    _positive("amplitude", amplitude)
    b = _bits(bits)
    return SymbolFrame(amplitude * b.astype(float), "CSK", amplitude)


def mcsk_encode(bits, amplitude: float) -> tuple[SymbolFrame, SymbolFrame]:
    """CSK with type A on even slots and type B on odd slots."""
    frame = csk_encode(bits, amplitude).symbols
    even = np.arange(frame.size) % 2 == 0
    a = np.where(even, frame, 0.0)
    b = np.where(even, 0.0, frame)
    return SymbolFrame(a, "MCSK", amplitude), SymbolFrame(b, "MCSK", amplitude)


def split_signed(symbols) -> DualRelease:
    """Positive part on type A, magnitude of the negative part on type B."""
    x = np.asarray(symbols, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ConfigError("symbols must be finite")
    return DualRelease(np.maximum(x, 0.0), np.maximum(-x, 0.0))


def _ts_mean_release(taps, amplitude, trials, rng, max_trials, rel_tol):
    p = as_tap_array(taps)
    if p.size == 1:
        return amplitude / p[0]
    warmup = min(10 * p.size, trials // 10)
    n = trials
    while True:
        filt = invert_channel(p)
        B = amplitude * rng.choice((-1.0, 1.0), size=n + warmup)
        x = np.abs(filt.apply(B)[warmup:])
        # batch means absorb the correlation the filter introduces
        batches = x[: (n // 20) * 20].reshape(20, -1).mean(axis=1)
        mean = float(batches.mean())
        sem = float(batches.std(ddof=1) / np.sqrt(20))
        if 1.96 * sem <= rel_tol * mean:
            return mean
        if n >= max_trials:
            raise EstimationError(
                f"mean release not within {rel_tol:.0%} after {n} trials")
        n = min(4 * n, max_trials)


def normalize_power(scheme: str, taps, beta_target: float, amplitude: float,
                    rng: np.random.Generator | None = None, trials: int = 100_000,
                    max_trials: int = 10_000_000, rel_tol: float = 0.01) -> float:
    """Scale ``s`` such that ``s * amplitude`` releases ``beta_target`` per slot on average.

    For TS the mean of |X_k| after the precoder is estimated by Monte Carlo,
    since no closed form is available; CSK and MCSK release ``amplitude`` on
    half the slots.
    """
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}")
    _positive("beta_target", beta_target)
    _positive("amplitude", amplitude)
    if trials < 10_000:
        raise ConfigError("normalize_power needs at least 10^4 trials")
    if scheme in ("CSK", "MCSK"):
        return 2.0 * beta_target / amplitude
    if rng is None:
        raise ConfigError("TS power normalisation needs an explicit rng")
    mean = _ts_mean_release(taps, amplitude, trials, rng, max_trials, rel_tol)
    return beta_target / mean
