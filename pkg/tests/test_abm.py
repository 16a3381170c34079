import numpy as np
import pytest
from scipy import stats

from ecodyn.abm import AbmConfig, AbmTrajectory, compare_abm_ode, run_abm
from ecodyn.errors import DomainError
from ecodyn.integrators import integrate
from ecodyn.model import Rule, fig3_config


def _sup_deviation(agents, seed, beta=2.0, t_end=50.0):
    model = fig3_config(beta)
    abm = run_abm(AbmConfig(model, agents, seed=seed, t_end=t_end))
    ode = integrate(model, (0.6, 0.6), t_end)
    return compare_abm_ode(abm, ode).sup


def test_same_seed_same_path():
    cfg = AbmConfig(fig3_config(2.0), 500, seed=11, t_end=5.0)
    one, two = run_abm(cfg), run_abm(cfg)
    for field in ("times", "x_fraction", "n_env"):
        assert np.array_equal(getattr(one, field), getattr(two, field))
    other = run_abm(AbmConfig(fig3_config(2.0), 500, seed=12, t_end=5.0))
    assert not np.array_equal(one.x_fraction, other.x_fraction)


def test_path_invariants():
    tr = run_abm(AbmConfig(fig3_config(6.0), 300, seed=1, t_end=20.0))
    assert len(tr.times) == len(tr.x_fraction) == len(tr.n_env)
    assert np.all(np.diff(tr.times) >= 0) and tr.times[-1] == 20.0
    k = tr.x_fraction * tr.agents
    assert np.allclose(k, np.rint(k), atol=1e-9)
    assert np.abs(np.diff(tr.cooperators)).max() <= 1
    assert np.all((tr.n_env >= 0) & (tr.n_env <= 1))
    assert tr.clamp_count == 0
    assert tr.revision_count == len(tr.times) - 2


def test_event_rate_matches_population():
    tr = run_abm(AbmConfig(fig3_config(2.0), 1000, seed=3, t_end=10.0))
    assert tr.revision_count == pytest.approx(1000 * 10.0, rel=0.05)


def test_uniform_choice_mean():
    tr = run_abm(AbmConfig(fig3_config(0.0), 1000, seed=5, t_end=30.0, x0=0.9))
    late = tr.times > 10.0
    assert tr.x_fraction[late].mean() == pytest.approx(0.5, abs=0.01)


def test_uniform_choice_stationary_law_is_binomial():
    # sample k on a coarse time grid, 5 relaxation times apart, pooling seeds
    agents, spacing, per_seed = 10, 5.0, 10_000
    counts = np.zeros(agents + 1)
    for seed in range(10):
        t_end = spacing * (per_seed + 2)
        tr = run_abm(AbmConfig(fig3_config(0.0), agents, seed=seed, t_end=t_end, x0=0.5, n0=0.5))
        grid = spacing * np.arange(2, per_seed + 2)
        idx = np.searchsorted(tr.times, grid, side="right") - 1
        counts += np.bincount(tr.cooperators[idx], minlength=agents + 1)
    assert counts.sum() == 100_000
    expected = counts.sum() * stats.binom.pmf(np.arange(agents + 1), agents, 0.5)
    _, p_value = stats.chisquare(counts, expected)
    assert p_value > 0.01


def test_large_population_tracks_ode():
    sups = [_sup_deviation(10_000, seed) for seed in range(10)]
    assert np.mean(sups) <= 0.03


def test_small_population_deviates_more():
    small = np.median([_sup_deviation(100, s) for s in range(20)])
    large = np.median([_sup_deviation(10_000, s) for s in range(20)])
    assert small > large


def test_deviation_scales_with_inverse_sqrt_population():
    n1 = np.median([_sup_deviation(1_000, s) for s in range(20)])
    n4 = np.median([_sup_deviation(4_000, s) for s in range(20)])
    assert 1.6 <= n1 / n4 <= 2.6


def test_compare_identical_paths_is_zero():
    ode = integrate(fig3_config(2.0), (0.6, 0.6), 5.0)
    mirror = AbmTrajectory(ode.times, ode.x, ode.n, 0, 100)
    stats_ = compare_abm_ode(mirror, ode)
    assert stats_.sup == 0.0 and stats_.mean_x == 0.0


def test_compare_requires_overlap():
    ode = integrate(fig3_config(2.0), (0.6, 0.6), 5.0, t0=10.0)
    abm = run_abm(AbmConfig(fig3_config(2.0), 100, t_end=5.0))
    with pytest.raises(DomainError):
        compare_abm_ode(abm, ode)


def test_config_validation():
    with pytest.raises(DomainError):
        AbmConfig(fig3_config(2.0), 1)
    with pytest.raises(DomainError):
        AbmConfig(fig3_config(2.0, Rule.IMITATIVE), 100)
    with pytest.raises(DomainError):
        AbmConfig(fig3_config(2.0), 100, env_step=0.0)
    with pytest.raises(DomainError):
        AbmConfig(fig3_config(2.0), 100, x0=1.5)
