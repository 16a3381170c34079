import pytest

from ecodyn.dynamics import (
    AttractorKind,
    basin_sample,
    detect_attractor,
    estimate_beta_u,
    limit_cycle,
    parallel_map,
)
from ecodyn.errors import BracketError, DomainError
from ecodyn.fixed_points import Family, interior_fixed_point, thresholds, toc_fixed_points
from ecodyn.model import Rule, State, fig3_config


def _consistent(report):
    if report.kind is AttractorKind.FIXED_POINT:
        return report.fixed_point is not None and report.cycle is None
    if report.kind is AttractorKind.LIMIT_CYCLE:
        return report.cycle is not None and report.fixed_point is None
    return report.cycle is None and report.fixed_point is None


def test_cycle_at_beta6():
    report = detect_attractor(fig3_config(6.0))
    assert report.kind is AttractorKind.LIMIT_CYCLE and _consistent(report)
    cyc = report.cycle
    assert cyc.converged
    assert cyc.n_min < cyc.n_max
    assert cyc.encircles(interior_fixed_point(fig3_config(6.0)).location)
    assert cyc.period == pytest.approx(11.5, abs=0.01)
    returns = [p.n for p in cyc.section_points]
    assert max(returns) - min(returns) < 1e-6
    assert all(p.x == pytest.approx(1 / 1.8) for p in cyc.section_points)


@pytest.mark.parametrize(
    "options",
    [
        {"h": 0.001},
        {"method": "dopri5"},
        {"method": "dopri5", "atol": 1e-10, "rtol": 1e-8},
        {"return_tol": 1e-7},
    ],
)
def test_cycle_envelope_insensitive_to_tolerances(options):
    base = limit_cycle(fig3_config(6.0))
    other = limit_cycle(fig3_config(6.0), **options)
    assert other is not None
    assert other.n_min == pytest.approx(base.n_min, abs=1e-3)
    assert other.n_max == pytest.approx(base.n_max, abs=1e-3)


def test_no_cycle_below_hopf():
    report = detect_attractor(fig3_config(5.0))
    assert report.kind is AttractorKind.FIXED_POINT
    assert report.fixed_point.family is Family.INTERIOR


def test_cycle_amplitude_grows_with_beta():
    amplitudes = [limit_cycle(fig3_config(b)).amplitude for b in (5.8, 6.4, 7.0)]
    assert amplitudes[0] < amplitudes[1] < amplitudes[2]


@pytest.mark.parametrize("beta", [1.0, 3.0, 5.5])
def test_perturbed_stable_point_is_recovered(beta):
    cfg = fig3_config(beta)
    fp = interior_fixed_point(cfg)
    start = State(fp.location.x + 1e-4, fp.location.n - 1e-4)
    report = detect_attractor(cfg, start)
    assert report.kind is AttractorKind.FIXED_POINT and _consistent(report)
    assert report.fixed_point.location == fp.location


def test_high_beta_collapse_from_reference_start():
    report = detect_attractor(fig3_config(8.0))
    assert report.label == "fixed_point:toc1"
    assert report.fixed_point.location == toc_fixed_points(fig3_config(8.0))[0].location


def test_imitative_reaches_origin():
    report = detect_attractor(fig3_config(0.0, Rule.IMITATIVE), State(0.7, 0.3))
    assert report.kind is AttractorKind.FIXED_POINT
    assert (report.fixed_point.location.x, report.fixed_point.location.n) == (0.0, 0.0)


def test_short_budget_is_undecided():
    report = detect_attractor(fig3_config(6.0), budget=20.0)
    assert report.kind is AttractorKind.UNDECIDED and _consistent(report)


def test_basin_interior_regime():
    basins = basin_sample(fig3_config(2.0), (6, 6), workers=1)
    assert basins.labels() == {"fixed_point:interior"}
    assert len(basins.grid) == 36


def test_basin_labels_cover_every_cell():
    basins = basin_sample(fig3_config(7.75), (6, 5), workers=1)
    assert len(basins.grid) == 30
    assert basins.labels() <= {"fixed_point:toc1", "limit_cycle", "undecided"}
    xs = sorted({s.x for s, _ in basins.grid})
    assert xs == pytest.approx([(i + 0.5) / 6 for i in range(6)])


def test_basin_resolution_floor():
    with pytest.raises(DomainError):
        basin_sample(fig3_config(2.0), (3, 8))


def test_parallel_map_preserves_order():
    assert parallel_map(abs, [-3, 1, -2, 5], workers=2) == [3, 1, 2, 5]


def test_beta_u_coarse():
    beta_u = estimate_beta_u(fig3_config(), (7.0, 8.0), width=0.1)
    assert beta_u > thresholds(fig3_config()).beta_h
    assert beta_u == pytest.approx(7.84, abs=0.1)


def test_beta_u_bracket_without_transition():
    with pytest.raises(BracketError):
        estimate_beta_u(fig3_config(), (2.0, 5.0))
    with pytest.raises(DomainError):
        estimate_beta_u(fig3_config(), (8.0, 7.0))


def test_limit_cycle_requires_interior_start():
    with pytest.raises(DomainError):
        limit_cycle(fig3_config(6.0), State(0.0, 0.5))
