"""Scalar quantisers for precoder output levels."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Quantizer:
    """M reproduction levels; cell i is [boundaries[i-1], boundaries[i]).

    The outer cells extend to -inf and +inf.
    """

    boundaries: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float).ravel()
        lv = np.asarray(self.levels, dtype=float).ravel()
        if lv.size < 1 or b.size != lv.size - 1:
            raise ConfigError("need M levels and M-1 boundaries")
        if np.any(np.diff(b) <= 0) or np.any(np.diff(lv) <= 0):
            raise ConfigError("boundaries and levels must be strictly increasing")
        if b.size and (np.any(lv[:-1] >= b) or np.any(lv[1:] < b)):
            raise ConfigError("each level must lie inside its own cell")
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "levels", lv)

    @property
    def M(self) -> int:
        return self.levels.size

    def __call__(self, x):
        return quantize(self, x)

    def scaled(self, factor: float) -> "Quantizer":
        if not factor > 0:
            raise ConfigError("scale factor must be positive")
        return Quantizer(self.boundaries * factor, self.levels * factor)


def quantize(q: Quantizer, x):
    """Level of the cell containing ``x``; a point on a boundary goes to the upper cell."""
    idx = np.searchsorted(q.boundaries, x, side="right")
    out = q.levels[idx]
    return out if np.ndim(out) else float(out)


def uniform_quantizer(lo: float, hi: float, M: int) -> Quantizer:
    """M equal cells on [lo, hi] with midpoint levels; saturates outside."""
    if not lo < hi:
        raise ConfigError("need lo < hi")
    if M < 1:
        raise ConfigError("M must be >= 1")
    edges = np.linspace(lo, hi, M + 1)
    return Quantizer(edges[1:-1], 0.5 * (edges[:-1] + edges[1:]))


def distortion(q: Quantizer, samples) -> float:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ConfigError("distortion needs samples")
    return float(np.mean((x - quantize(q, x)) ** 2))


def max_error(q: Quantizer, samples) -> float:
    x = np.asarray(samples, dtype=float)
    return float(np.max(np.abs(x - quantize(q, x))))


def _reseed(levels, counts, x, idx, boundaries):
    """Move the levels of empty cells into the most populated cell."""
    levels = levels.copy()
    lo, hi = x.min(), x.max()
    for i in np.nonzero(counts == 0)[0]:
        j = int(np.argmax(counts))
        left = boundaries[j - 1] if j > 0 else lo
        right = boundaries[j] if j < boundaries.size else hi
        mid = 0.5 * (max(left, lo) + min(right, hi))
        if np.any(levels == mid):
            mid = 0.5 * (mid + min(right, hi))
        log.info("lloyd: cell %d empty, reseeding at %.6g", i, mid)
        levels[i] = mid
        counts[j] //= 2  # the next reseed should prefer another crowded cell
    return np.sort(levels)


def lloyd(samples, M: int, tol: float = 1e-6, max_iter: int = 500,
          history: list | None = None) -> Quantizer:
    """Lloyd's algorithm on empirical samples, starting from a uniform quantiser.

    Alternates centroid and nearest-neighbour steps until the relative drop in
    distortion is below ``tol``. Distortions after each iteration are appended
    to ``history`` if given (the first entry is the uniform start).
    """
    x = np.asarray(samples, dtype=float).ravel()
    if M < 1:
        raise ConfigError("M must be >= 1")
    if x.size < 10 * M:
        raise ConfigError("lloyd needs at least 10*M samples")
    if M == 1:
        q = Quantizer(np.empty(0), np.array([x.mean()]))
        if history is not None:
            history.append(distortion(q, x))
        return q
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        raise ConfigError("samples are constant; nothing to quantise")
    q = uniform_quantizer(lo, hi, M)
    d = distortion(q, x)
    if history is not None:
        history.append(d)
    for _ in range(max_iter):
        idx = np.searchsorted(q.boundaries, x, side="right")
        counts = np.bincount(idx, minlength=M)
        sums = np.bincount(idx, weights=x, minlength=M)
        levels = np.where(counts > 0, sums / np.maximum(counts, 1), q.levels)
        if np.any(counts == 0):
            levels = _reseed(levels, counts.copy(), x, idx, q.boundaries)
        q = Quantizer(0.5 * (levels[:-1] + levels[1:]), levels)
        d_new = distortion(q, x)
        if history is not None:
            history.append(d_new)
        done = d == 0 or (d - d_new) / d < tol
        d = d_new
        if done:
            break
    return q
