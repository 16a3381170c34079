"""Attractor classification: fixed points, limit cycles, basins, cycle collapse.

Cycles are detected on the section ``x = x_int`` crossed with ``x`` increasing.
Every periodic orbit of the logit system winds around the interior
equilibrium, whose abscissa is ``x_int``, so the section is transversal.
Crossings are bracketed between integration steps, seeded by linear
interpolation and polished by Newton iterations on partial RK4 steps.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError, DomainError
from .fixed_points import FixedPoint, all_fixed_points, imitative_fixed_points
from .integrators import DEFAULT_STEP, integrate, make_rhs, rk4_step
from .model import ModelConfig, Rule, State

__all__ = [
    "AttractorKind",
    "CycleInfo",
    "AttractorReport",
    "BasinMap",
    "detect_attractor",
    "limit_cycle",
    "basin_sample",
    "estimate_beta_u",
    "worker_count",
    "parallel_map",
    "REFERENCE_IC",
]

REFERENCE_IC = State(0.6, 0.6)
FP_TOL = 1e-6
FP_HOLD = 10.0
RETURN_TOL = 1e-6
N_RETURNS = 5
MIN_RADIUS = 1e-4
DEFAULT_TRANSIENT = 200.0
DEFAULT_BUDGET = 2000.0
CHUNK = 50.0


class AttractorKind(str, enum.Enum):
    FIXED_POINT = "fixed_point"
    LIMIT_CYCLE = "limit_cycle"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class CycleInfo:
    period: float
    n_min: float
    n_max: float
    x_min: float
    x_max: float
    section_points: tuple[State, ...]
    converged: bool

    @property
    def amplitude(self) -> float:
        return self.n_max - self.n_min

    def encircles(self, s) -> bool:
        x, n = s
        return self.x_min < x < self.x_max and self.n_min < n < self.n_max


@dataclass(frozen=True)
class AttractorReport:
    kind: AttractorKind
    fixed_point: FixedPoint | None = None
    cycle: CycleInfo | None = None
    transient_time: float = math.nan

    @property
    def label(self) -> str:
        if self.kind is AttractorKind.FIXED_POINT:
            return f"fixed_point:{self.fixed_point.family.value}"
        return self.kind.value


@dataclass
class BasinMap:
    grid: list[tuple[State, str]]
    resolution: tuple[int, int]
    reports: list[AttractorReport] = field(default_factory=list, repr=False)

    def labels(self) -> set[str]:
        return {label for _, label in self.grid}

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for _, label in self.grid:
            out[label] = out.get(label, 0) + 1
        return out


def worker_count() -> int:
    env = os.environ.get("ECODYN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _candidate_fixed_points(config: ModelConfig) -> list[FixedPoint]:
    if config.rule is Rule.LOGIT:
        return all_fixed_points(config)
    return imitative_fixed_points(config)


def _settled_on(times, states, fps, t_now):
    """Fixed point the path has stayed within FP_TOL of for FP_HOLD time units."""
    if t_now - times[0] < FP_HOLD:
        return None, math.nan
    window = times >= t_now - FP_HOLD
    for fp in fps:
        dev = np.max(np.abs(states - np.array([fp.location.x, fp.location.n])), axis=1)
        if np.all(dev[window] <= FP_TOL):
            outside = np.nonzero(dev > FP_TOL)[0]
            t_in = times[outside[-1] + 1] if outside.size else times[0]
            return fp, float(t_in)
    return None, math.nan


def _refine_crossing(rhs, t0, x0, n0, x1, h, x_sec):
    tau = h * (x_sec - x0) / (x1 - x0)
    for _ in range(4):
        m = max(1, int(math.ceil(tau / DEFAULT_STEP)))
        x, n = x0, n0
        for _ in range(m):
            x, n = rk4_step(rhs, x, n, tau / m)
        dx = rhs(x, n)[0]
        if dx <= 0:
            break
        step = (x - x_sec) / dx
        tau -= step
        if abs(step) < 1e-15:
            break
    m = max(1, int(math.ceil(tau / DEFAULT_STEP)))
    x, n = x0, n0
    for _ in range(m):
        x, n = rk4_step(rhs, x, n, tau / m)
    return t0 + tau, n


def _section_returns(rhs, times, states, x_sec):
    xs = states[:, 0]
    idx = np.nonzero((xs[:-1] < x_sec) & (xs[1:] >= x_sec))[0]
    out = []
    for i in idx:
        h = times[i + 1] - times[i]
        t_c, n_c = _refine_crossing(rhs, times[i], xs[i], states[i, 1], xs[i + 1], h, x_sec)
        out.append((t_c, n_c, i))
    return out


def _parabolic_extreme(ts, vs, i):
    if i == 0 or i == len(vs) - 1:
        return vs[i]
    y0, y1, y2 = vs[i - 1], vs[i], vs[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return y1
    return y1 - 0.125 * (y2 - y0) ** 2 / denom


def _envelope(times, states, i0, i1):
    seg = slice(i0, i1 + 2)
    ts, xs, ns = times[seg], states[seg, 0], states[seg, 1]
    return (
        float(_parabolic_extreme(ts, xs, int(np.argmin(xs)))),
        float(_parabolic_extreme(ts, xs, int(np.argmax(xs)))),
        float(_parabolic_extreme(ts, ns, int(np.argmin(ns)))),
        float(_parabolic_extreme(ts, ns, int(np.argmax(ns)))),
    )


def _cycle_from(config, rhs, times, states, transient, interior, tol):
    x_sec = config.x_int
    keep = times >= transient
    if keep.sum() < 3:
        return None
    t_k, s_k = times[keep], states[keep]
    returns = _section_returns(rhs, t_k, s_k, x_sec)
    if len(returns) < N_RETURNS:
        return None
    last = returns[-N_RETURNS:]
    ns = np.array([r[1] for r in last])
    if ns.max() - ns.min() >= tol:
        return None
    if interior is not None and abs(ns[-1] - interior.location.n) < MIN_RADIUS:
        return None
    period = float(np.mean(np.diff([r[0] for r in last])))
    x_min, x_max, n_min, n_max = _envelope(t_k, s_k, last[-2][2], last[-1][2])
    if not n_max - n_min > MIN_RADIUS:
        return None
    section = tuple(State(x_sec, float(v)) for v in ns)
    return CycleInfo(period, n_min, n_max, x_min, x_max, section, True)


def detect_attractor(
    config: ModelConfig,
    s0=REFERENCE_IC,
    budget: float = DEFAULT_BUDGET,
    transient: float = DEFAULT_TRANSIENT,
    method: str = "rk4",
    h: float = DEFAULT_STEP,
    atol: float = 1e-9,
    rtol: float = 1e-7,
    return_tol: float = RETURN_TOL,
) -> AttractorReport:
    """Integrate from ``s0`` until the path settles on a fixed point or a cycle.

    A fixed point is declared once the state has stayed within ``FP_TOL`` of a
    computed equilibrium for ``FP_HOLD`` time units.  A limit cycle is declared
    after ``transient`` once ``N_RETURNS`` successive section returns agree to
    ``return_tol``.  Reaching ``budget`` without either gives ``undecided``.
    """
    fps = _candidate_fixed_points(config)
    interior = next((p for p in fps if p.family.value == "interior"), None)
    rhs = make_rhs(config)
    times = np.array([0.0])
    x0, n0 = s0
    states = np.array([[float(x0), float(n0)]])
    t = 0.0
    while t < budget - 1e-9:
        span = min(CHUNK, budget - t)
        tr = integrate(config, states[-1], span, method=method, h=h, atol=atol, rtol=rtol, t0=t)
        times = np.concatenate([times, tr.times[1:]])
        states = np.concatenate([states, tr.states[1:]])
        t = float(times[-1])
        fp, t_in = _settled_on(times, states, fps, t)
        if fp is not None:
            return AttractorReport(AttractorKind.FIXED_POINT, fixed_point=fp, transient_time=t_in)
        if t >= transient + CHUNK:
            cyc = _cycle_from(config, rhs, times, states, transient, interior, return_tol)
            if cyc is not None:
                return AttractorReport(AttractorKind.LIMIT_CYCLE, cycle=cyc, transient_time=transient)
            # drop the oldest data once it can no longer matter
            cut = np.searchsorted(times, t - 4 * CHUNK - FP_HOLD)
            if cut > 0 and times[cut] > transient:
                times, states = times[cut:], states[cut:]
                transient = float(times[0])
    return AttractorReport(AttractorKind.UNDECIDED, transient_time=budget)


def limit_cycle(config: ModelConfig, s0=REFERENCE_IC, **kwargs) -> CycleInfo | None:
    """Converged cycle reached from ``s0``, or ``None``."""
    x, n = s0
    if not (0 < x < 1 and 0 < n < 1):
        raise DomainError("limit cycle search needs an interior initial condition")
    report = detect_attractor(config, s0, **kwargs)
    return report.cycle if report.kind is AttractorKind.LIMIT_CYCLE else None


def _detect_star(args):
    config, s0, kwargs = args
    return detect_attractor(config, s0, **kwargs)


def parallel_map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def basin_sample(
    config: ModelConfig,
    resolution: tuple[int, int] = (20, 20),
    workers: int | None = None,
    **kwargs,
) -> BasinMap:
    """Classify the attractor reached from each cell centre of a uniform lattice."""
    nx, nn = resolution
    if nx < 4 or nn < 4:
        raise DomainError(f"resolution must be at least 4x4, got {resolution}")
    ics = [State((i + 0.5) / nx, (j + 0.5) / nn) for j in range(nn) for i in range(nx)]
    workers = worker_count() if workers is None else workers
    reports = parallel_map(_detect_star, [(config, s, kwargs) for s in ics], workers)
    return BasinMap([(s, r.label) for s, r in zip(ics, reports)], (nx, nn), reports)


def estimate_beta_u(
    config: ModelConfig,
    bracket: tuple[float, float] = (7.0, 8.0),
    width: float = 0.02,
    s0=REFERENCE_IC,
    **kwargs,
) -> float:
    """Rationality at which the cycle reached from ``s0`` disappears.

    Bisects on "a converged cycle is detected" until the bracket is narrower
    than ``width`` and returns its midpoint.
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise DomainError(f"bracket must be increasing, got {bracket}")

    def has_cycle(beta):
        rep = detect_attractor(config.with_beta(beta), s0, **kwargs)
        return rep.kind is AttractorKind.LIMIT_CYCLE

    c_lo, c_hi = has_cycle(lo), has_cycle(hi)
    if c_lo == c_hi:
        state = "a cycle" if c_lo else "no cycle"
        raise BracketError(f"{state} at both ends of bracket {bracket}")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if has_cycle(mid) == c_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
