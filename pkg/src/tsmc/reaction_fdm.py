"""Explicit finite differences for 1-D A + B -> products with diffusion.

Concentrations are molecules per metre and ``zeta`` is in m/(molecule s),
so that zeta * rho has units of 1/s. The harness accepts zeta per
(molecule/nm) and converts with ``ZETA_PER_NM``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .channel import ChannelModel, as_tap_array, green_function
from .errors import ConfigError, ContractViolation, NumericsError
from .modulation import split_signed

CFL_MAX = 0.5
REACTION_SUBSTEP = 0.1
CLAMP_BAND = 1e-12
ZETA_PER_NM = 1e-9


@dataclass(frozen=True)
class ReactionParams:
    D_A: float
    D_B: float
    zeta: float = 0.0

    def __post_init__(self):
        if self.D_A < 0 or self.D_B < 0 or self.zeta < 0:
            raise ConfigError("diffusion coefficients and zeta must be >= 0")

    @property
    def D_max(self) -> float:
        return max(self.D_A, self.D_B)


@dataclass(frozen=True)
class Grid:
    """Cell-centred grid on [-X_max, X_max] with an odd cell count; cell n//2 is at 0."""

    dx: float
    n: int

    def __post_init__(self):
        if not self.dx > 0 or self.n < 3 or self.n % 2 == 0:
            raise ConfigError("grid needs dx > 0 and an odd cell count >= 3")

    @classmethod
    def covering(cls, X_max: float, dx: float) -> "Grid":
        half = int(math.ceil(X_max / dx))
        return cls(dx, 2 * half + 1)

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def X_max(self) -> float:
        return (self.n // 2 + 0.5) * self.dx

    def cell_of(self, location: float) -> int:
        i = int(round(location / self.dx)) + self.n // 2
        if not 0 <= i < self.n:
            raise ConfigError(f"location {location} outside the grid")
        return i


@dataclass(frozen=True)
class Probe:
    """Receiver segment [center - width/2, center + width/2]."""

    center: float
    width: float

    def weights(self, grid: Grid) -> np.ndarray:
        x = grid.x
        lo = np.maximum(x - grid.dx / 2, self.center - self.width / 2)
        hi = np.minimum(x + grid.dx / 2, self.center + self.width / 2)
        w = np.clip(hi - lo, 0.0, None)
        if w.sum() <= 0:
            raise ConfigError("probe does not overlap the grid")
        return w / w.sum()

    def cells_across(self, grid: Grid) -> float:
        return self.width / grid.dx


@dataclass(eq=False)
class ReactionField:
    """Concentration grids for A and B; leading axes (if any) index independent runs."""

    rho_A: np.ndarray
    rho_B: np.ndarray
    grid: Grid
    params: ReactionParams
    t: float = 0.0
    leaked_A: np.ndarray | float = 0.0
    leaked_B: np.ndarray | float = 0.0

    @classmethod
    def at_rest(cls, grid: Grid, params: ReactionParams, batch: tuple = ()) -> "ReactionField":
        shape = tuple(batch) + (grid.n,)
        zeros = np.zeros(batch) if batch else 0.0
        return cls(np.zeros(shape), np.zeros(shape), grid, params, 0.0, zeros, zeros)

    def mass(self) -> tuple[np.ndarray, np.ndarray]:
        return self.rho_A.sum(axis=-1) * self.grid.dx, self.rho_B.sum(axis=-1) * self.grid.dx

    def deposit(self, species: str, location: float, amount) -> None:
        """Impulse release spread uniformly over the cell containing ``location``."""
        amount = np.asarray(amount, dtype=float)
        if np.any(amount < 0):
            raise ConfigError("release amounts must be >= 0")
        i = self.grid.cell_of(location)
        target = {"A": self.rho_A, "B": self.rho_B}[species]
        target[..., i] += amount / self.grid.dx


@dataclass(frozen=True)
class SlowReactionState:
    """Probe-cell concentrations when the local reaction starts; ``zeta_lambda`` = zeta * rho_C^gamma."""

    rho_bar_A: float
    rho_bar_B: float
    zeta_lambda: float

    @property
    def delta(self) -> float:
        return self.rho_bar_A - self.rho_bar_B


@njit(cache=True)
def _kernel(A, B, An, Bn, sA, sB, lamA, lamB, dt, zdt, sub):
    """One split step: explicit diffusion + source, then sub-stepped Euler reaction.

    Returns the number of cells whose value fell below the clamp band.
    """
    nb, n = A.shape
    bad = 0
    for b in range(nb):
        amax = 0.0
        for i in range(n):
            al = A[b, i - 1] if i > 0 else 0.0
            ar = A[b, i + 1] if i < n - 1 else 0.0
            bl = B[b, i - 1] if i > 0 else 0.0
            br = B[b, i + 1] if i < n - 1 else 0.0
            a = A[b, i] + lamA * (al - 2.0 * A[b, i] + ar) + dt * sA[b, i]
            c = B[b, i] + lamB * (bl - 2.0 * B[b, i] + br) + dt * sB[b, i]
            if zdt > 0.0 and a > 0.0 and c > 0.0:
                m = a if a > c else c
                k = int(math.ceil(zdt * m / sub))
                if k < 1:
                    k = 1
                h = zdt / k
                for _ in range(k):
                    r = h * a * c
                    a -= r
                    c -= r
            An[b, i] = a
            Bn[b, i] = c
            if a > amax:
                amax = a
            if c > amax:
                amax = c
        floor = -CLAMP_BAND * amax
        for i in range(n):
            if An[b, i] < 0.0:
                if An[b, i] >= floor:
                    An[b, i] = 0.0
                else:
                    bad += 1
            if Bn[b, i] < 0.0:
                if Bn[b, i] >= floor:
                    Bn[b, i] = 0.0
                else:
                    bad += 1
    return bad


def check_cfl(params: ReactionParams, dt: float, dx: float) -> None:
    number = params.D_max * dt / dx**2
    if number > CFL_MAX * (1 + 1e-12):
        raise ConfigError(f"CFL number {number:.4g} exceeds {CFL_MAX}")


def stable_dt(params: ReactionParams, dx: float, period: float | None = None,
              cfl: float = 0.4) -> float:
    """Largest step with D dt / dx^2 <= cfl; divides ``period`` exactly when given."""
    if params.D_max == 0:
        return period if period is not None else 1.0
    dt = cfl * dx**2 / params.D_max
    if period is None:
        return dt
    return period / math.ceil(period / dt - 1e-12)


class _Stepper:
    """Reusable buffers for repeated steps on one field shape."""

    def __init__(self, field: ReactionField, dt: float, reaction_substep: float):
        self.grid = field.grid
        self.params = field.params
        check_cfl(self.params, dt, self.grid.dx)
        self.dt = dt
        self.lamA = self.params.D_A * dt / self.grid.dx**2
        self.lamB = self.params.D_B * dt / self.grid.dx**2
        self.zdt = self.params.zeta * dt
        self.sub = reaction_substep
        shape = field.rho_A.shape
        self.batch_shape = shape[:-1]
        flat = (int(np.prod(self.batch_shape)) if self.batch_shape else 1, shape[-1])
        self.flat = flat
        self.A = np.ascontiguousarray(field.rho_A, dtype=float).reshape(flat).copy()
        self.B = np.ascontiguousarray(field.rho_B, dtype=float).reshape(flat).copy()
        self.An = np.empty(flat)
        self.Bn = np.empty(flat)
        self.zero_src = np.zeros(flat)
        self.leaked_A = np.zeros(flat[0])
        self.leaked_B = np.zeros(flat[0])

    def step(self, sA=None, sB=None):
        sA = self.zero_src if sA is None else sA
        sB = self.zero_src if sB is None else sB
        dx = self.grid.dx
        self.leaked_A += self.lamA * (self.A[:, 0] + self.A[:, -1]) * dx
        self.leaked_B += self.lamB * (self.B[:, 0] + self.B[:, -1]) * dx
        bad = _kernel(self.A, self.B, self.An, self.Bn, sA, sB,
                      self.lamA, self.lamB, self.dt, self.zdt, self.sub)
        if bad:
            raise NumericsError(f"{bad} cells went negative beyond the clamp band; reduce dt")
        self.A, self.An = self.An, self.A
        self.B, self.Bn = self.Bn, self.B

    def view(self, arr):
        return arr.reshape(self.batch_shape + (self.flat[1],))


def fdm_step(field: ReactionField, dt: float, sources=None,
             reaction_substep: float = REACTION_SUBSTEP) -> ReactionField:
    """Advance one forward-Euler step.

    Diffusion and the source rates ``(s_A, s_B)`` are applied first, then the
    reaction -zeta rho_A rho_B, split into sub-steps per cell whenever
    zeta * max(rho_A, rho_B) * dt exceeds ``reaction_substep``. Values that
    dip below zero by less than 1e-12 of the maximum are clamped to zero.
    """
    st = _Stepper(field, dt, reaction_substep)
    if sources is not None:
        sA, sB = (np.broadcast_to(np.asarray(s, dtype=float), field.rho_A.shape)
                  .reshape(st.flat).copy() for s in sources)
    else:
        sA = sB = None
    st.step(sA, sB)
    scalar = not st.batch_shape
    leak_A = st.leaked_A[0] if scalar else st.leaked_A.reshape(st.batch_shape)
    leak_B = st.leaked_B[0] if scalar else st.leaked_B.reshape(st.batch_shape)
    return replace(field, rho_A=st.view(st.A).copy(), rho_B=st.view(st.B).copy(),
                   t=field.t + dt, leaked_A=field.leaked_A + leak_A,
                   leaked_B=field.leaked_B + leak_B)


@dataclass(frozen=True)
class Release:
    time: float
    species: str
    location: float
    amount: float | np.ndarray

    def __post_init__(self):
        if self.time < 0:
            raise ConfigError("release times must be >= 0")
        if self.species not in ("A", "B"):
            raise ConfigError("species must be 'A' or 'B'")
        if np.any(np.asarray(self.amount) < 0):
            raise ConfigError("release amounts must be >= 0")


@dataclass(eq=False)
class Trace:
    """Probe time series; arrays have shape (..., len(t))."""

    t: np.ndarray
    rho_A: np.ndarray
    rho_B: np.ndarray
    field: ReactionField | None = field(default=None, repr=False)

    @property
    def diff(self) -> np.ndarray:
        return self.rho_A - self.rho_B

    def to_csv(self, path) -> None:
        if self.rho_A.ndim != 1:
            raise ConfigError("CSV export needs a single (unbatched) trace")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "rho_A_probe", "rho_B_probe", "diff"])
            for row in zip(self.t, self.rho_A, self.rho_B, self.diff):
                w.writerow([repr(float(v)) for v in row])


def domain_half_width(D_max: float, T_end: float) -> float:
    """Truncation radius 10 * sqrt(2 D T) for an effectively unbounded medium."""
    return 10.0 * math.sqrt(2.0 * D_max * T_end)


def make_grid(params: ReactionParams, T_end: float, dx: float, reach: float = 0.0) -> Grid:
    return Grid.covering(max(domain_half_width(params.D_max, T_end), 2 * reach), dx)


def simulate(schedule: Iterable[Release | tuple], params: ReactionParams, T_end: float,
             probe: Probe, grid: Grid | None = None, dx: float | None = None,
             dt: float | None = None, sample_times: Sequence[float] | None = None,
             batch: tuple = (), reaction_substep: float = REACTION_SUBSTEP,
             leak_tol: float | None = 1e-4) -> Trace:
    """Run releases through the solver and record probe-averaged concentrations.

    ``schedule`` items are ``Release`` objects or ``(time, species, location,
    amount)`` tuples; an amount may be an array of shape ``batch`` to drive
    several independent runs at once. Releases and samples are snapped to the
    nearest time step. Without ``sample_times`` every step is recorded.
    """
    releases = sorted((r if isinstance(r, Release) else Release(*r) for r in schedule),
                      key=lambda r: r.time)
    if not T_end > 0:
        raise ConfigError("T_end must be positive")
    if grid is None:
        if dx is None:
            dx = probe.width / 4
        reach = max([abs(probe.center)] + [abs(r.location) for r in releases])
        grid = make_grid(params, T_end, dx, reach)
    if dt is None:
        dt = stable_dt(params, grid.dx)
    n_steps = int(round(T_end / dt))
    if sample_times is None:
        sample_steps = np.arange(n_steps + 1)
    else:
        sample_steps = np.rint(np.asarray(sample_times, dtype=float) / dt).astype(int)
        if np.any(sample_steps < 0) or np.any(sample_steps > n_steps):
            raise ConfigError("sample times must lie in [0, T_end]")
    weights = probe.weights(grid)
    fld = ReactionField.at_rest(grid, params, batch)
    st = _Stepper(fld, dt, reaction_substep)
    out_A = np.empty((st.flat[0], sample_steps.size))
    out_B = np.empty_like(out_A)
    by_step: dict[int, list[Release]] = {}
    for r in releases:
        by_step.setdefault(int(round(r.time / dt)), []).append(r)
    wanted: dict[int, list[int]] = {}
    for j, s in enumerate(sample_steps):
        wanted.setdefault(int(s), []).append(j)
    injected = np.zeros(st.flat[0])
    for step in range(n_steps + 1):
        for r in by_step.get(step, ()):
            amt = np.broadcast_to(np.asarray(r.amount, dtype=float), batch).reshape(-1)
            target = st.A if r.species == "A" else st.B
            target[:, grid.cell_of(r.location)] += amt / grid.dx
            injected += amt
        for j in wanted.get(step, ()):
            out_A[:, j] = st.A @ weights
            out_B[:, j] = st.B @ weights
        if step < n_steps:
            st.step()
    leaked = st.leaked_A + st.leaked_B
    if leak_tol is not None and np.any(leaked > leak_tol * np.maximum(injected, 1e-300)):
        raise NumericsError("mass leaked through the truncated boundary; enlarge the domain")
    final = ReactionField(st.view(st.A), st.view(st.B), grid, params, n_steps * dt,
                          st.leaked_A.reshape(batch) if batch else st.leaked_A[0],
                          st.leaked_B.reshape(batch) if batch else st.leaked_B[0])
    shape = tuple(batch) + (sample_steps.size,)
    return Trace(sample_steps * dt, out_A.reshape(shape), out_B.reshape(shape), final)


def green_superposition(schedule: Iterable[Release | tuple], D: float, t, r: float) -> np.ndarray:
    """Analytic rho_A - rho_B at distance ``r`` for impulse releases without reaction."""
    model = ChannelModel(dimension=1, D=D, receiver_distance=max(r, 1e-300))
    t = np.asarray(t, dtype=float)
    out = np.zeros(np.broadcast(t, np.asarray(0.0)).shape)
    for rel in schedule:
        rel = rel if isinstance(rel, Release) else Release(*rel)
        sign = 1.0 if rel.species == "A" else -1.0
        out = out + sign * rel.amount * green_function(model, t - rel.time, r - rel.location)
    return out


def slow_reaction_ode(state: SlowReactionState, t):
    """Closed-form (rho_A, rho_B) of d rho/dt = -zeta lambda rho_A rho_B from the steady state."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ConfigError("t must be >= 0")
    a0, b0, k = state.rho_bar_A, state.rho_bar_B, state.zeta_lambda
    if a0 < 0 or b0 < 0 or k < 0:
        raise ConfigError("concentrations and rate must be >= 0")
    swap = a0 < b0
    if swap:
        a0, b0 = b0, a0
    delta = a0 - b0
    if delta == 0:
        minor = b0 / (1.0 + k * b0 * t)
    else:
        e = np.exp(-k * delta * t)
        minor = delta * b0 * e / (delta + b0 - b0 * e)
    major = minor + delta
    if swap:
        major, minor = minor, major
    return (major, minor) if np.ndim(major) else (float(major), float(minor))


def local_reaction(rho_A, rho_B, zeta_lambda_Tr):
    """Apply the closed form elementwise to probe concentrations for a window T_r.

    ``zeta_lambda_Tr`` is the product zeta * lambda * T_r.
    """
    a = np.asarray(rho_A, dtype=float)
    b = np.asarray(rho_B, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise ContractViolation("concentrations must be nonnegative")
    delta = np.abs(a - b)
    small = np.minimum(a, b)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        e = np.exp(-zeta_lambda_Tr * delta)
        minor = np.where(delta > 0, delta * small * e / (delta + small - small * e),
                         small / (1.0 + zeta_lambda_Tr * small))
    minor = np.where(small > 0, minor, 0.0)
    return np.where(a >= b, minor + delta, minor), np.where(a >= b, minor, minor + delta)


def impulse_taps(params: ReactionParams, probe: Probe, Ts: float, n_taps: int,
                 species: str = "A", dx: float | None = None,
                 cfl: float = 0.4) -> np.ndarray:
    """Discrete-solver counterpart of channel taps: probe response at (j+1) Ts to a unit release."""
    p = ReactionParams(params.D_A, params.D_B, 0.0)
    T_end = Ts * n_taps
    dx = probe.width / 4 if dx is None else dx
    dt = stable_dt(p, dx, Ts, cfl)
    trace = simulate([(0.0, species, 0.0, 1.0)], p, T_end, probe, dx=dx, dt=dt,
                     sample_times=Ts * np.arange(1, n_taps + 1))
    return trace.rho_A if species == "A" else trace.rho_B


def empirical_g(windows, params: ReactionParams, probe: Probe, Ts: float,
                dx: float | None = None, cfl: float = 0.4,
                reaction_substep: float = REACTION_SUBSTEP) -> np.ndarray:
    """rho_A + rho_B at the probe one slot after the last of L+1 releases.

    ``windows[..., 0]`` is the most recent symbol x_j and ``windows[..., L]``
    the oldest; symbol x_{j-k} is released at (L-k) Ts from the origin and
    split into its A and B parts.
    """
    w = np.atleast_1d(np.asarray(windows, dtype=float))
    if w.ndim == 1:
        w = w[None, :]
        squeeze = True
    else:
        squeeze = False
    batch = w.shape[:-1]
    L = w.shape[-1] - 1
    dx = probe.width / 4 if dx is None else dx
    if probe.cells_across(Grid(dx, 3)) < 4 - 1e-9:
        raise ConfigError("empirical_g needs at least 4 grid cells across the receiver")
    dual = split_signed(w)
    schedule = []
    for k in range(L + 1):
        t = (L - k) * Ts
        schedule.append(Release(t, "A", 0.0, dual.s_A[..., k]))
        schedule.append(Release(t, "B", 0.0, dual.s_B[..., k]))
    dt = stable_dt(params, dx, Ts, cfl)
    T_end = (L + 1) * Ts
    trace = simulate(schedule, params, T_end, probe, dx=dx, dt=dt, sample_times=[T_end],
                     batch=batch, reaction_substep=reaction_substep)
    g = (trace.rho_A + trace.rho_B)[..., 0]
    return g[0] if squeeze else g
