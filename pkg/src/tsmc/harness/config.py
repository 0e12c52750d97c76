"""Flat ``key = value`` experiment configuration.

Lines starting with ``#`` are comments, lists are comma separated. Units are
SI except where the key name says otherwise: ``V_R_cm3`` is in cm^3 and
``zeta_nm`` (and the zeta inside ``reaction = fdm(zeta, T_r)``) is per
(molecule/nm) per second. Both are converted when the file is parsed.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError
from ..reaction_fdm import ZETA_PER_NM

SCHEMES = ("TS_precoder", "CSK_nomem", "CSK_genie", "MCSK_nomem", "MCSK_genie")
CM3 = 1e-6


@dataclass(frozen=True)
class QuantizerSpec:
    rule: str = "none"
    M: int = 0


@dataclass(frozen=True)
class ReactionSpec:
    """``full`` / ``none`` closed forms, or ``fdm``: local reaction for T_r before sampling."""

    kind: str = "full"
    zeta: float = 0.0  # SI
    T_r: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    scheme: str = "TS_precoder"
    dimension: int = 1
    D_A: float = 2.2e-9
    D_B: float = 2.2e-9
    receiver_distance: float = 2.15e-7
    pulse_width: float = 0.0
    V_R: float = 5e-16 * CM3
    powers: tuple[float, ...] = ()
    power_normalize: bool = False
    L: int | None = None
    epsilon: float = 0.2
    Ts: float | None = None
    quantizer: QuantizerSpec = QuantizerSpec()
    reaction: ReactionSpec = ReactionSpec()
    trials: int = 1000
    frame_length: int = 10_000
    normalize_trials: int = 200_000
    # quantizer sweep
    levels: tuple[int, ...] = (2, 3, 4, 5, 8, 16, 64)
    quantizer_training: int = 200_000
    # diffusion-mismatch sweep (solver-based)
    ratios: tuple[float, ...] = (1.0, 0.9, 0.8, 1.1)
    mismatch_receiver_width: float | None = None
    mismatch_frames: int = 64
    mismatch_slots: int = 32
    mismatch_warmup: int = 8
    mismatch_zeta_ts: float = 50.0
    # reaction-kinetics sweep
    receiver_width: float = 1e-8
    amplitude: float = 3e6
    zeta: float = 0.0  # SI, medium reaction rate
    zeta_tr: tuple[float, ...] = (5e-4, 1e-3, 2e-3, 3e-3, 4e-3, 5e-3)
    reaction_frames: int = 200
    reaction_slots: int = 8
    cells_per_receiver: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.trials < 1000:
            raise ConfigError("trials must be >= 1000")
        if self.frame_length < 1:
            raise ConfigError("frame_length must be >= 1")
        if any(not p > 0 for p in self.powers):
            raise ConfigError("powers must be positive")
        if self.L is not None and self.L < 1:
            raise ConfigError("L must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if self.V_R <= 0 or self.D_A <= 0 or self.D_B <= 0:
            raise ConfigError("V_R, D_A and D_B must be positive")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.split(",") if x.strip())


def _ints(v: str) -> tuple[int, ...]:
    return tuple(int(x) for x in v.split(",") if x.strip())


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _optional(conv):
    def parse(v: str):
        return None if v.strip().lower() in ("", "none", "auto") else conv(v)
    return parse


def parse_quantizer(v: str) -> QuantizerSpec:
    s = v.strip().lower()
    if s == "none":
        return QuantizerSpec()
    m = re.fullmatch(r"(lloyd|uniform)\(\s*(\d+)\s*\)", s)
    if not m:
        raise ValueError(f"quantizer must be none, lloyd(M) or uniform(M), got {v!r}")
    M = int(m.group(2))
    if M < 1:
        raise ValueError("quantizer needs M >= 1")
    return QuantizerSpec(m.group(1), M)


def parse_reaction(v: str) -> ReactionSpec:
    s = v.strip().lower()
    if s in ("full", "none"):
        return ReactionSpec(s)
    m = re.fullmatch(r"fdm\(\s*([^,]+),\s*([^)]+)\)", s)
    if not m:
        raise ValueError(f"reaction must be full, none or fdm(zeta, T_r), got {v!r}")
    zeta, T_r = float(m.group(1)), float(m.group(2))
    if zeta < 0 or T_r < 0:
        raise ValueError("zeta and T_r must be >= 0")
    return ReactionSpec("fdm", zeta * ZETA_PER_NM, T_r)


# key -> (field name, converter)
_KEYS = {
    "seed": ("seed", int),
    "scheme": ("scheme", str.strip),
    "dimension": ("dimension", int),
    "D": ("D_A", float),
    "D_A": ("D_A", float),
    "D_B": ("D_B", float),
    "receiver_distance": ("receiver_distance", float),
    "pulse_width": ("pulse_width", float),
    "V_R_cm3": ("V_R", lambda v: float(v) * CM3),
    "V_R_m3": ("V_R", float),
    "powers": ("powers", _floats),
    "power_normalize": ("power_normalize", _bool),
    "L": ("L", _optional(int)),
    "epsilon": ("epsilon", float),
    "Ts": ("Ts", _optional(float)),
    "quantizer": ("quantizer", parse_quantizer),
    "reaction": ("reaction", parse_reaction),
    "trials": ("trials", int),
    "frame_length": ("frame_length", int),
    "normalize_trials": ("normalize_trials", int),
    "levels": ("levels", _ints),
    "quantizer_training": ("quantizer_training", int),
    "ratios": ("ratios", _floats),
    "mismatch_receiver_width": ("mismatch_receiver_width", _optional(float)),
    "mismatch_frames": ("mismatch_frames", int),
    "mismatch_slots": ("mismatch_slots", int),
    "mismatch_warmup": ("mismatch_warmup", int),
    "mismatch_zeta_ts": ("mismatch_zeta_ts", float),
    "receiver_width": ("receiver_width", float),
    "amplitude": ("amplitude", float),
    "zeta_nm": ("zeta", lambda v: float(v) * ZETA_PER_NM),
    "zeta_tr": ("zeta_tr", _floats),
    "reaction_frames": ("reaction_frames", int),
    "reaction_slots": ("reaction_slots", int),
    "cells_per_receiver": ("cells_per_receiver", int),
}


def parse_pairs(pairs) -> dict:
    """Convert ``(key, raw)`` pairs to ExperimentConfig keyword arguments."""
    out = {}
    for key, raw in pairs:
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        name, conv = _KEYS[key]
        try:
            out[name] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return out


def read_pairs(text: str, source: str = "<config>") -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        pairs.append((k.strip(), v.strip()))
    return pairs


def load_config(path=None, overrides: dict | None = None, text: str | None = None) -> ExperimentConfig:
    """Build a config from a file (or text) plus ``{key: raw string}`` overrides.

    The seed must be given explicitly somewhere; there is no ambient entropy.
    """
    pairs = []
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    if text is not None:
        pairs += read_pairs(text, str(path or "<config>"))
    pairs += list((overrides or {}).items())
    kw = parse_pairs(pairs)
    if "seed" not in kw:
        raise ConfigError("config must set an explicit seed")
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
