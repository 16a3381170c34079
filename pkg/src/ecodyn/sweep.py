"""Rationality sweeps: the data behind a bifurcation diagram in beta."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import (
    REFERENCE_IC,
    AttractorKind,
    CycleInfo,
    parallel_map,
    detect_attractor,
    estimate_beta_u,
    worker_count,
)
from .errors import DomainError, EcodynError
from .fixed_points import (
    Family,
    FixedPoint,
    Stability,
    Thresholds,
    all_fixed_points,
    interior_fixed_point,
    thresholds,
)
from .model import ModelConfig

__all__ = [
    "Regime",
    "CycleStatus",
    "SweepRecord",
    "SweepResult",
    "default_beta_grid",
    "regime_classify",
    "sweep",
]

CYCLE_MARGIN = 0.2
DEFAULT_POINTS = 200


class Regime(str, enum.Enum):
    TOC_ONLY = "toc_only"
    INTERIOR_STABLE = "interior_stable"
    CYCLE = "cycle"
    BISTABLE_CYCLE_TOC = "bistable_cycle_toc"
    TOC_HIGH_BETA = "toc_high_beta"


class CycleStatus(str, enum.Enum):
    NOT_SEARCHED = "not_searched"
    FOUND = "found"
    ABSENT = "absent"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class SweepRecord:
    beta: float
    fixed_points: tuple[FixedPoint, ...] = ()
    cycle: CycleInfo | None = None
    cycle_status: CycleStatus = CycleStatus.NOT_SEARCHED
    regime: Regime | None = None
    ambiguous: bool = False
    error: str | None = None

    @property
    def stable_points(self) -> list[FixedPoint]:
        return [p for p in self.fixed_points if p.is_stable]


@dataclass
class SweepResult:
    params: ModelConfig
    records: list[SweepRecord]
    thresholds: Thresholds | None
    beta_u: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def betas(self) -> np.ndarray:
        return np.array([r.beta for r in self.records])

    def regimes(self) -> list[Regime | None]:
        return [r.regime for r in self.records]


def default_beta_grid(
    th: Thresholds | None,
    beta_min: float = 0.0,
    beta_max: float = 10.0,
    points: int = DEFAULT_POINTS,
    window: float = 0.5,
    boost: float = 4.0,
) -> np.ndarray:
    """Grid on [beta_min, beta_max], ``boost`` times denser within
    ``window`` of each known threshold."""
    if points < 2 or not beta_max > beta_min:
        raise DomainError("need at least two points on a non-empty interval")
    fine = np.linspace(beta_min, beta_max, 200_001)
    density = np.ones_like(fine)
    if th is not None:
        for t in (th.beta_int, th.beta_h, th.beta_hat):
            if t is not None:
                density[np.abs(fine - t) <= window] = boost
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(fine))])
    cdf /= cdf[-1]
    grid = np.interp(np.linspace(0.0, 1.0, points), cdf, fine)
    grid[0], grid[-1] = beta_min, beta_max
    return grid


def regime_classify(record: SweepRecord, beta_int: float | None = None) -> SweepRecord:
    """Assign the dynamical regime; leave it ``None`` and flag records that
    cannot be decided from their contents."""
    if record.error is not None:
        return replace(record, regime=None, ambiguous=True)
    stable = record.stable_points
    stable_toc = any(p.family.is_toc for p in stable)
    stable_interior = any(p.family is Family.INTERIOR for p in stable)
    regime = None
    if stable_interior:
        regime = Regime.INTERIOR_STABLE
    elif record.cycle is not None:
        regime = Regime.BISTABLE_CYCLE_TOC if stable_toc else Regime.CYCLE
    elif record.cycle_status is CycleStatus.UNDECIDED:
        regime = None
    elif stable_toc:
        low = beta_int is not None and record.beta < beta_int
        regime = Regime.TOC_ONLY if low else Regime.TOC_HIGH_BETA
    return replace(record, regime=regime, ambiguous=regime is None)


def _focus_like(config: ModelConfig) -> bool:
    fp = interior_fixed_point(config) if config.beta > 0 else None
    return fp is not None and fp.stability in (
        Stability.UNSTABLE_FOCUS,
        Stability.CENTER_CANDIDATE,
    )


def _wants_cycle_search(config: ModelConfig, margin: float) -> bool:
    b = config.beta
    probes = [b] + [v for v in (b - margin, b + margin) if v > 0]
    return any(_focus_like(config.with_beta(v)) for v in probes)


def _sweep_point(args) -> SweepRecord:
    params, beta, beta_int, margin, detect_kwargs = args
    config = params.with_beta(beta)
    try:
        fps = tuple(all_fixed_points(config))
        cycle, status = None, CycleStatus.NOT_SEARCHED
        if beta > 0 and _wants_cycle_search(config, margin):
            rep = detect_attractor(config, REFERENCE_IC, **detect_kwargs)
            if rep.kind is AttractorKind.LIMIT_CYCLE:
                cycle, status = rep.cycle, CycleStatus.FOUND
            elif rep.kind is AttractorKind.FIXED_POINT:
                status = CycleStatus.ABSENT
            else:
                status = CycleStatus.UNDECIDED
        record = SweepRecord(beta, fps, cycle, status)
    except EcodynError as exc:
        record = SweepRecord(beta, error=f"{type(exc).__name__}: {exc}")
    return regime_classify(record, beta_int)


def sweep(
    params: ModelConfig,
    beta_grid=None,
    workers: int | None = None,
    margin: float = CYCLE_MARGIN,
    estimate_u: bool = True,
    **detect_kwargs,
) -> SweepResult:
    """Fixed points, stability, cycles and regime for every beta in the grid.

    The cycle search runs from the reference initial condition wherever the
    interior equilibrium is an unstable focus, widened by ``margin`` on both
    sides.  When a cycle-to-no-cycle transition is seen above the Hopf value
    the collapse point is refined by bisection.
    """
    try:
        th = thresholds(params)
    except EcodynError:
        th = None
    if beta_grid is None:
        beta_grid = default_beta_grid(th)
    grid = np.asarray(beta_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("beta grid must be a non-empty 1-D sequence")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("beta grid must be strictly increasing and non-negative")

    b_int = th.beta_int if th is not None else None
    workers = worker_count() if workers is None else workers
    jobs = [(params, float(b), b_int, margin, detect_kwargs) for b in grid]
    records = parallel_map(_sweep_point, jobs, workers)
    result = SweepResult(params, records, th)

    if estimate_u and th is not None:
        for prev, cur in zip(records, records[1:]):
            if (
                prev.beta > th.beta_h
                and prev.cycle_status is CycleStatus.FOUND
                and cur.cycle_status in (CycleStatus.ABSENT, CycleStatus.NOT_SEARCHED)
            ):
                try:
                    result.beta_u = estimate_beta_u(
                        params, (prev.beta, cur.beta), **detect_kwargs
                    )
                except EcodynError as exc:
                    result.notes.append(f"beta_u estimation failed: {exc}")
                break
    return result
