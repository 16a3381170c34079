import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import assumed_configs, random_assumed_configs
from ecodyn.errors import DomainError
from ecodyn.model import (
    EnvParams,
    ModelConfig,
    PayoffDeltas,
    Rule,
    State,
    check_assumptions,
    derive_coeffs,
    fig3_config,
    jacobian,
    logit_prob,
    payoff_diff,
    vector_field,
)


def test_coeffs_reference_params(fig3):
    k = fig3.coeffs
    assert (k.a, k.b, k.c, k.d) == pytest.approx((-2.25, 2.0, 0.25, -0.5), abs=1e-15)
    assert k.D == pytest.approx(1.8, abs=1e-15)
    assert k.n_bar == pytest.approx(1.1 / 1.8, abs=1e-15)
    assert k.x0 == pytest.approx(0.25, abs=1e-15)


def test_coeffs_all_zero():
    k = derive_coeffs(PayoffDeltas(0, 0, 0, 0), EnvParams(0.5, 1.0))
    assert (k.a, k.b, k.c, k.d, k.D) == (0, 0, 0, 0, 0)
    assert k.x0 is None
    assert math.isnan(k.n_bar)


@given(assumed_configs())
def test_x0_solves_g_at_n_zero(config):
    k = config.coeffs
    assert abs(payoff_diff(k, (k.x0, 0.0))) < 1e-12
    assert k.x0 == pytest.approx(abs(config.deltas.delta_sp0) / (config.deltas.delta_rt0 - config.deltas.delta_sp0))


def test_payoff_diff_corners(fig3):
    k = fig3.coeffs
    assert payoff_diff(k, (0, 0)) == k.d
    assert payoff_diff(k, (1, 1)) == pytest.approx(-fig3.deltas.delta_tr1)


def test_payoff_diff_at_interior_point():
    cfg = fig3_config(6.0)
    k, theta = cfg.coeffs, cfg.env.theta
    x = cfg.x_int
    target = math.log(1 / theta) / 6.0
    n = (target - k.b * x - k.d) / (k.a * x + k.c)
    assert payoff_diff(k, (x, n)) == pytest.approx(target, abs=1e-14)
    assert logit_prob(6.0, payoff_diff(k, (x, n))) == pytest.approx(x, abs=1e-14)


@given(st.floats(0, 50), st.floats(-20, 20))
def test_logit_symmetry(beta, g):
    assert logit_prob(beta, g) + logit_prob(beta, -g) == pytest.approx(1.0, abs=1e-15)


@given(st.floats(0.01, 50), st.floats(-5, 5), st.floats(1e-3, 1))
def test_logit_monotone(beta, g, dg):
    lo, hi = logit_prob(beta, g), logit_prob(beta, g + dg)
    assert hi > lo or (hi == lo and (hi in (0.0, 1.0)))


def test_logit_beta_zero_and_overflow():
    assert logit_prob(0.0, 123.0) == 0.5
    assert logit_prob(1e3, 1e3) == 1.0
    assert logit_prob(1e3, -1e3) == 0.0
    with pytest.raises(DomainError):
        logit_prob(-1.0, 0.0)


@given(assumed_configs(beta=st.floats(0.0, 5.0)), st.floats(0, 1))
def test_boundary_flow_points_inward(config, n):
    assert vector_field(config, (0.0, n))[0] > 0
    assert vector_field(config, (1.0, n))[0] < 0
    for n_edge in (0.0, 1.0):
        assert vector_field(config, (0.5, n_edge))[1] == 0.0


@given(assumed_configs(beta=st.floats(5.0, 100.0)), st.floats(0, 1))
def test_boundary_flow_never_points_outward(config, n):
    # at large beta*g the choice probability rounds to exactly 0 or 1
    assert vector_field(config, (0.0, n))[0] >= 0
    assert vector_field(config, (1.0, n))[0] <= 0


@given(assumed_configs(), st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.01, 0.04))
def test_payoff_affine_in_each_variable(config, x, n, h):
    k = config.coeffs
    ddx = payoff_diff(k, (x + h, n)) - 2 * payoff_diff(k, (x, n)) + payoff_diff(k, (x - h, n))
    ddn = payoff_diff(k, (x, n + h)) - 2 * payoff_diff(k, (x, n)) + payoff_diff(k, (x, n - h))
    assert abs(ddx) < 1e-13 and abs(ddn) < 1e-13


def _central_differences(config, s, step=1e-6):
    x, n = s
    out = np.empty((2, 2))
    for j, (ex, en) in enumerate(((step, 0.0), (0.0, step))):
        hi = np.array(vector_field(config, (x + ex, n + en)))
        lo = np.array(vector_field(config, (x - ex, n - en)))
        out[:, j] = (hi - lo) / (2 * step)
    return out


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(2024)
    configs = [fig3_config(6.0)] + random_assumed_configs(rng, 6)
    grid = (np.arange(10) + 0.5) / 10
    for cfg in configs:
        assert check_assumptions(cfg).all_hold
        for x in grid:
            for n in grid:
                exact = jacobian(cfg, (x, n))
                approx = _central_differences(cfg, (x, n))
                # relative error, with unit floor for entries that vanish
                err = np.abs(exact - approx) / np.maximum(1.0, np.abs(exact))
                assert err.max() <= 1e-6, (cfg, x, n, exact, approx)


@given(assumed_configs(), st.floats(0, 1))
def test_jacobian_triangular_on_collapsed_edge(config, x):
    jac = jacobian(config, (x, 0.0))
    assert jac[1, 0] == 0.0


@given(assumed_configs(beta=st.just(0.0)), st.floats(0, 1), st.floats(0, 1))
def test_jacobian_beta_zero(config, x, n):
    jac = jacobian(config, (x, n))
    assert jac[0, 0] == -1.0 and jac[0, 1] == 0.0


def test_imitative_jacobian_finite_difference():
    cfg = fig3_config(0.0, Rule.IMITATIVE)
    jac = jacobian(cfg, (0.3, 0.4))
    k = cfg.coeffs
    g = payoff_diff(k, (0.3, 0.4))
    expected_00 = (1 - 0.6) * g + 0.3 * 0.7 * (k.a * 0.4 + k.b)
    assert jac[0, 0] == pytest.approx(expected_00, rel=1e-8)


def test_assumption_checks():
    assert check_assumptions(fig3_config()).all_hold
    warm = ModelConfig(fig3_config().deltas, EnvParams(1.2, 0.5))
    rep = check_assumptions(warm)
    assert not rep.a2_holds and rep.a1_holds and rep.a3_holds
    pos_sp0 = ModelConfig(PayoffDeltas(0.5, 0.25, 1.5, 0.1), EnvParams(0.8, 0.5))
    rep = check_assumptions(pos_sp0)
    assert not rep.a3_holds and "A3" in rep.detail


@given(assumed_configs())
def test_hopf_numerator_identity(config):
    k, dl, theta = config.coeffs, config.deltas, config.env.theta
    rhs = (1 + theta) / k.D * (dl.delta_rt0 * dl.delta_ps1 - dl.delta_sp0 * dl.delta_tr1)
    assert k.a * k.n_bar + k.b == pytest.approx(rhs, abs=1e-12)


def test_validation():
    with pytest.raises(DomainError):
        State(1.1, 0.5)
    with pytest.raises(DomainError):
        EnvParams(0.0, 0.5)
    with pytest.raises(DomainError):
        fig3_config(-1.0)
    with pytest.raises(DomainError):
        fig3_config(math.inf)
