"""Monte Carlo sweeps behind the CLI subcommands."""
from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ..channel import ChannelModel, TapVector, channel_taps, memory_length, sampling_interval
from ..errors import ConfigError, PreconditionError
from ..modulation import mcsk_encode, normalize_power, split_signed
from ..precoder import apply_frames, certify
from ..quantizer import Quantizer, distortion, lloyd, uniform_quantizer
from ..reaction_fdm import (ZETA_PER_NM, Probe, ReactionParams, impulse_taps,
                            local_reaction, simulate, stable_dt)
from ..receiver import channel_output, map_detect_genie, observe, ts_detect
from .config import ExperimentConfig, QuantizerSpec

log = logging.getLogger(__name__)

# Stream tags that keep auxiliary random draws apart from per-trial streams.
_NORMALIZE, _TRAIN, _MISMATCH, _REACTION = 1_000_001, 1_000_002, 1_000_003, 1_000_004


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one (sweep point, trial) key, independent of run order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class BerPoint:
    power: float
    ber: float
    ci95: float
    errors: int
    trials: int

    @classmethod
    def from_counts(cls, power: float, errors: int, trials: int, symbols: int) -> "BerPoint":
        p = errors / symbols
        return cls(power, p, 1.96 * float(np.sqrt(p * (1 - p) / symbols)), int(errors), trials)


@dataclass(frozen=True)
class TapRow:
    j: int
    time: float
    tap: float
    ratio: float


@dataclass(frozen=True)
class MismatchRow:
    ratio: float
    power: float
    ber: float
    ci95: float
    expected_errors: float
    symbols: int


@dataclass(frozen=True)
class QuantizerRow:
    rule: str
    M: int
    distortion: float
    power: float
    ber: float
    ci95: float
    errors: int
    trials: int
    bound_violations: int


@dataclass(frozen=True)
class ReactionRow:
    zeta_Tr: float
    mean_limiting: float
    mean_abs_diff: float
    mean_diff_count: float
    frames: int


# ---------------------------------------------------------------- channel setup

def channel_model(cfg: ExperimentConfig) -> ChannelModel:
    return ChannelModel(dimension=cfg.dimension, D=cfg.D_A,
                        receiver_distance=cfg.receiver_distance, pulse_width=cfg.pulse_width)


def build_taps(cfg: ExperimentConfig) -> TapVector:
    model = channel_model(cfg)
    Ts = cfg.Ts if cfg.Ts is not None else sampling_interval(model)
    L = cfg.L if cfg.L is not None else memory_length(model, cfg.epsilon, Ts)
    return channel_taps(model, L, Ts)


def run_taps(cfg: ExperimentConfig) -> list[TapRow]:
    taps = build_taps(cfg)
    stab = certify(taps)
    log.info("Ts=%.6g s, L=%d, max pole modulus %.6f, certified=%s",
             taps.Ts, taps.L, stab.max_modulus, stab.certified)
    return [TapRow(j, (j + 1) * taps.Ts, float(p), float(p / taps.p0))
            for j, p in enumerate(taps.taps)]


def _require_stable(taps) -> None:
    stab = certify(taps)
    if not stab.certified:
        raise PreconditionError(
            f"precoder not certified stable: max pole modulus {stab.max_modulus:.6g}, "
            f"ratio bounds [{stab.min_ratio:.6g}, {stab.max_ratio:.6g}]")


# ---------------------------------------------------------------- quantizer training

def train_quantizer(cfg: ExperimentConfig, taps, choice: QuantizerSpec) -> Quantizer | None:
    """Fit on precoder outputs for unit-amplitude input after discarding the warm-up."""
    if choice.rule == "none":
        return None
    samples = training_samples(cfg, taps)
    if choice.rule == "lloyd":
        return lloyd(samples, choice.M)
    return uniform_quantizer(float(samples.min()), float(samples.max()), choice.M)


def training_samples(cfg: ExperimentConfig, taps) -> np.ndarray:
    p = np.asarray(taps)
    warm = max(10 * p.size, 1000)
    rng = rng_for(cfg.seed, _TRAIN)
    B = rng.choice((-1.0, 1.0), size=cfg.quantizer_training + warm)
    return apply_frames(p, B)[warm:]


# ---------------------------------------------------------------- BER sweep

def _levels(cfg: ExperimentConfig, taps) -> list[float]:
    """Per-point transmit amplitude for the configured scheme."""
    if not cfg.power_normalize:
        return list(cfg.powers)
    if cfg.scheme == "TS_precoder":
        rng = rng_for(cfg.seed, _NORMALIZE)
        unit = normalize_power("TS", taps, 1.0, 1.0, rng=rng, trials=cfg.normalize_trials)
        return [beta * unit for beta in cfg.powers]
    return [beta * normalize_power("CSK", taps, 1.0, 1.0) for beta in cfg.powers]


def _ts_frame(taps, p, level, bits, rng, cfg, q, bound_check):
    B = level * (2.0 * bits - 1.0)
    X = apply_frames(p, B)
    if q is not None:
        Xq = q(X)
        if bound_check is not None:
            e = X - Xq
            lhs = np.max(np.abs(channel_output(p, e)))
            rhs = p.sum() * np.max(np.abs(e))
            bound_check.append(lhs <= rhs * (1 + 1e-12) + 1e-300)
        X = Xq
    mean = channel_output(p, X)
    kind = cfg.reaction.kind
    if kind == "full":
        g = np.abs(mean)
    elif kind == "none":
        g = channel_output(p, np.abs(X))
    else:
        dual = split_signed(X)
        ra, rb = local_reaction(channel_output(p, dual.s_A), channel_output(p, dual.s_B),
                                cfg.reaction.zeta * cfg.reaction.T_r)
        mean, g = ra - rb, ra + rb
    # round-off can leave tiny negatives in lfilter output
    g = np.maximum(g, 0.0)
    return ts_detect(observe(mean, g, cfg.V_R, rng))


def _csk_frame(p, level, bits, rng, cfg, genie: bool, multi: bool):
    p0 = p[0]
    if multi:
        sa, sb = (f.symbols for f in mcsk_encode(bits, level))
        ma, mb = channel_output(p, sa), channel_output(p, sb)
        even = np.arange(bits.size) % 2 == 0
        m = np.where(even, ma, mb)
        x = sa + sb
    else:
        x = level * bits.astype(float)
        m = channel_output(p, x)
    m = np.maximum(m, 0.0)
    Y = observe(m, m, cfg.V_R, rng)
    isi = np.maximum(m - p0 * x, 0.0) if genie else np.zeros_like(m)
    return map_detect_genie(Y, isi, p0, level, cfg.V_R)


def run_ber(cfg: ExperimentConfig, quantizer: Quantizer | None = None,
            bound_check: list | None = None, taps: TapVector | None = None) -> list[BerPoint]:
    """One BER point per configured power, with L warm-up symbols dropped per frame.

    ``quantizer`` (already trained at unit amplitude) overrides the configured
    one; ``bound_check`` collects one bool per frame for the quantisation error
    bound.
    """
    taps = build_taps(cfg) if taps is None else taps
    p = np.asarray(taps, dtype=float)
    L = p.size - 1
    if cfg.scheme == "TS_precoder":
        _require_stable(taps)
        if quantizer is None:
            quantizer = train_quantizer(cfg, taps, cfg.quantizer)
    elif cfg.quantizer.rule != "none":
        raise ConfigError("quantisation applies to TS_precoder only")
    n = L + cfg.frame_length
    points = []
    for i, (beta, level) in enumerate(zip(cfg.powers, _levels(cfg, taps))):
        q = quantizer.scaled(level) if quantizer is not None else None
        errors = 0
        for trial in range(cfg.trials):
            rng = rng_for(cfg.seed, i, trial)
            bits = rng.integers(0, 2, n)
            if cfg.scheme == "TS_precoder":
                hat = _ts_frame(taps, p, level, bits, rng, cfg, q, bound_check)
            else:
                hat = _csk_frame(p, level, bits, rng, cfg,
                                 genie=cfg.scheme.endswith("genie"),
                                 multi=cfg.scheme.startswith("MCSK"))
            errors += int(np.count_nonzero(hat[L:] != bits[L:]))
        points.append(BerPoint.from_counts(beta, errors, cfg.trials, cfg.trials * cfg.frame_length))
        log.info("%s beta=%.4g ber=%.4g", cfg.scheme, beta, points[-1].ber)
    return points


# ---------------------------------------------------------------- quantizer sweep

def run_quantizer(cfg: ExperimentConfig, levels=None) -> list[QuantizerRow]:
    """Distortion and BER for each rule and level count, plus an unquantised reference.

    All rows share bits and noise, so differences come from quantisation alone.
    """
    cfg = dataclasses.replace(cfg, scheme="TS_precoder", quantizer=QuantizerSpec())
    taps = build_taps(cfg)
    samples = training_samples(cfg, taps)
    rows = [QuantizerRow("none", 0, 0.0, pt.power, pt.ber, pt.ci95, pt.errors, pt.trials, 0)
            for pt in run_ber(cfg, taps=taps)]
    for rule in ("lloyd", "uniform"):
        for M in (cfg.levels if levels is None else levels):
            q = train_quantizer(cfg, taps, QuantizerSpec(rule, M))
            d = distortion(q, samples)
            checks: list[bool] = []
            for pt in run_ber(cfg, quantizer=q, bound_check=checks, taps=taps):
                rows.append(QuantizerRow(rule, M, d, pt.power, pt.ber, pt.ci95, pt.errors,
                                         pt.trials, checks.count(False)))
    return rows


# ---------------------------------------------------------------- diffusion mismatch

def mismatch_probe(cfg: ExperimentConfig) -> Probe:
    width = cfg.mismatch_receiver_width or cfg.receiver_distance / 4
    return Probe(cfg.receiver_distance, width)


def run_mismatch(cfg: ExperimentConfig, ratios=None) -> list[MismatchRow]:
    """TS with the precoder designed for D_A while type B diffuses with ratio * D_A.

    Frames run through the reaction-diffusion solver (fast reaction, no
    closed-form g), at unit received amplitude. For each power the solver
    output is scaled by beta, which by the amplitude scaling of the solver is
    the same as running at amplitude beta with zeta / beta. Instead of drawing
    counting noise, each scored slot contributes its exact error probability
    given the solver's mean and variance, so the only randomness is the bit
    frames, which are shared across ratios.
    """
    ratios = cfg.ratios if ratios is None else ratios
    model = channel_model(cfg)
    Ts = cfg.Ts if cfg.Ts is not None else sampling_interval(model)
    probe = mismatch_probe(cfg)
    dx = probe.width / 4
    S, warm = cfg.mismatch_slots, cfg.mismatch_warmup
    if not 0 <= warm < S:
        raise ConfigError("mismatch_warmup must lie in [0, mismatch_slots)")
    taps = impulse_taps(ReactionParams(cfg.D_A, cfg.D_A), probe, Ts, S, dx=dx)
    TapVector(taps, Ts)  # validates the solver taps
    _require_stable(taps)
    rng = rng_for(cfg.seed, _MISMATCH)
    bits = rng.integers(0, 2, (cfg.mismatch_frames, S))
    X = apply_frames(taps, 2.0 * bits - 1.0)
    dual = split_signed(X)
    schedule = []
    for k in range(S):
        schedule.append((k * Ts, "A", 0.0, dual.s_A[:, k]))
        schedule.append((k * Ts, "B", 0.0, dual.s_B[:, k]))
    zeta = cfg.mismatch_zeta_ts / Ts
    sample_times = Ts * np.arange(1, S + 1)
    sign = (2.0 * bits - 1.0)[:, warm:]
    rows = []
    for ratio in ratios:
        params = ReactionParams(cfg.D_A, ratio * cfg.D_A, zeta)
        dt = stable_dt(params, dx, Ts)
        tr = simulate(schedule, params, S * Ts, probe, dx=dx, dt=dt,
                      sample_times=sample_times, batch=(cfg.mismatch_frames,))
        d = tr.diff[:, warm:]
        s = np.maximum(tr.rho_A + tr.rho_B, 0.0)[:, warm:]
        for beta in cfg.powers:
            # Y ~ N(beta d, beta s / V_R): the sign detector errs with probability Phi(-sign * z)
            with np.errstate(divide="ignore"):
                z = sign * beta * d / np.sqrt(beta * s / cfg.V_R)
            pe = norm.cdf(-z)
            per_frame = pe.mean(axis=1)
            ci = 1.96 * float(per_frame.std(ddof=1)) / np.sqrt(per_frame.size)
            rows.append(MismatchRow(ratio, beta, float(pe.mean()), ci,
                                    float(pe.sum()), pe.size))
            log.info("ratio=%.3g beta=%.4g ber=%.4g", ratio, beta, rows[-1].ber)
    return rows


# ---------------------------------------------------------------- reaction kinetics

def run_reaction(cfg: ExperimentConfig, products=None) -> list[ReactionRow]:
    """Mean limiting-reactant concentration at the receiver after a local reaction.

    Random TS frames are precoded with p0-normalised solver taps, so the
    received differential per slot is ``amplitude * p0``. The probe
    concentrations at the end of the last slot come from the solver (by
    superposition of its impulse responses when the medium does not react),
    then react locally for T_r. ``products`` are zeta * T_r with zeta per
    (molecule/nm) per second.
    """
    products = cfg.zeta_tr if products is None else products
    if cfg.reaction_frames < 200:
        raise ConfigError("reaction sweep needs at least 200 frames")
    model = channel_model(cfg)
    Ts = cfg.Ts if cfg.Ts is not None else sampling_interval(model)
    probe = Probe(cfg.receiver_distance, cfg.receiver_width)
    dx = cfg.receiver_width / cfg.cells_per_receiver
    S = cfg.reaction_slots
    base = ReactionParams(cfg.D_A, cfg.D_B)
    hA = impulse_taps(base, probe, Ts, S, species="A", dx=dx)
    hB = hA if cfg.D_B == cfg.D_A else impulse_taps(base, probe, Ts, S, species="B", dx=dx)
    TapVector(hA, Ts)
    _require_stable(hA)
    rng = rng_for(cfg.seed, _REACTION)
    bits = rng.integers(0, 2, (cfg.reaction_frames, S))
    X = apply_frames(hA / hA[0], cfg.amplitude * (2.0 * bits - 1.0))
    dual = split_signed(X)
    if cfg.zeta == 0:
        # symbol k is sampled (S - k) slots after release
        rho_A = dual.s_A[:, ::-1] @ hA
        rho_B = dual.s_B[:, ::-1] @ hB
    else:
        params = ReactionParams(cfg.D_A, cfg.D_B, cfg.zeta)
        schedule = []
        for k in range(S):
            schedule.append((k * Ts, "A", 0.0, dual.s_A[:, k]))
            schedule.append((k * Ts, "B", 0.0, dual.s_B[:, k]))
        tr = simulate(schedule, params, S * Ts, probe, dx=dx, dt=stable_dt(params, dx, Ts),
                      sample_times=[S * Ts], batch=(cfg.reaction_frames,))
        rho_A, rho_B = tr.rho_A[:, 0], tr.rho_B[:, 0]
    rho_A, rho_B = np.maximum(rho_A, 0.0), np.maximum(rho_B, 0.0)
    diff = float(np.mean(np.abs(rho_A - rho_B)))
    rows = []
    for prod in products:
        if prod < 0:
            raise ConfigError("zeta*T_r products must be >= 0")
        ra, rb = local_reaction(rho_A, rho_B, prod * ZETA_PER_NM)
        rows.append(ReactionRow(float(prod), float(np.mean(np.minimum(ra, rb))), diff,
                                diff * cfg.receiver_width, cfg.reaction_frames))
    return rows


def fit_log_linear(x, y) -> tuple[float, float]:
    """Least-squares slope of log(y) on x, and its R^2."""
    x = np.asarray(x, dtype=float)
    ly = np.log(np.asarray(y, dtype=float))
    slope, icept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + icept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


# ---------------------------------------------------------------- CSV

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_csv(results, path, columns: list[str] | None = None) -> None:
    """Header row then one row per dataclass result, columns in field order."""
    results = list(results)
    if columns is None:
        if not results:
            columns = [f.name for f in dataclasses.fields(BerPoint)]
        else:
            columns = [f.name for f in dataclasses.fields(results[0])]
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in results:
            w.writerow([_fmt(getattr(r, c)) for c in columns])
