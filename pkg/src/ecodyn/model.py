"""Payoff algebra and vector fields of the coupled game-environment system.

The population state is ``x`` (fraction of cooperators) and the resource
state is ``n``; both live in the closed unit square.  Two learning rules are
supported:

* ``logit``     :  x' = rho_C(x, n) - x
* ``imitative`` :  x' = x (1 - x) g(x, n)

and in both cases the environment follows the tipping-point law

    n' = eps * n (1 - n) (theta x - (1 - x)).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import DomainError

__all__ = [
    "PayoffDeltas",
    "LinearCoeffs",
    "EnvParams",
    "Rule",
    "ModelConfig",
    "State",
    "AssumptionReport",
    "FIG3_DELTAS",
    "FIG3_ENV",
    "fig3_config",
    "derive_coeffs",
    "payoff_diff",
    "logit_prob",
    "vector_field",
    "jacobian",
    "check_assumptions",
]


@dataclass(frozen=True)
class PayoffDeltas:
    """Payoff differences T1-R1, P1-S1, R0-T0 and S0-P0."""

    delta_tr1: float
    delta_ps1: float
    delta_rt0: float
    delta_sp0: float


@dataclass(frozen=True)
class LinearCoeffs:
    """Coefficients of g(x, n) = a x n + b x + c n + d plus derived constants.

    ``x0`` is ``None`` when ``b == 0`` and ``n_bar`` is NaN when ``D == 0``.
    """

    a: float
    b: float
    c: float
    d: float
    D: float
    n_bar: float
    x0: float | None


@dataclass(frozen=True)
class EnvParams:
    theta: float
    epsilon: float

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError(f"theta must be > 0, got {self.theta}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")


class Rule(str, enum.Enum):
    LOGIT = "logit"
    IMITATIVE = "imitative"


@dataclass(frozen=True)
class ModelConfig:
    deltas: PayoffDeltas
    env: EnvParams
    beta: float = 0.0
    rule: Rule = Rule.LOGIT

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise DomainError(f"beta must be finite and >= 0, got {self.beta}")
        object.__setattr__(self, "rule", Rule(self.rule))

    @cached_property
    def coeffs(self) -> LinearCoeffs:
        return derive_coeffs(self.deltas, self.env)

    @property
    def x_int(self) -> float:
        return 1.0 / (1.0 + self.env.theta)

    def with_beta(self, beta: float) -> "ModelConfig":
        return replace(self, beta=float(beta))

    def with_rule(self, rule: Rule | str) -> "ModelConfig":
        return replace(self, rule=Rule(rule))

    def kernel_args(self) -> tuple:
        """Flat numeric argument tuple consumed by the compiled integrators."""
        k = self.coeffs
        return (
            0 if self.rule is Rule.LOGIT else 1,
            float(self.beta),
            k.a, k.b, k.c, k.d,
            float(self.env.theta),
            float(self.env.epsilon),
        )


@dataclass(frozen=True)
class State:
    x: float
    n: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.n <= 1.0):
            raise DomainError(f"state ({self.x}, {self.n}) outside [0,1]^2")

    def __iter__(self):
        yield self.x
        yield self.n

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.n])


@dataclass(frozen=True)
class AssumptionReport:
    a1_holds: bool
    a2_holds: bool
    a3_holds: bool
    detail: str = field(default="")

    @property
    def all_hold(self) -> bool:
        return self.a1_holds and self.a2_holds and self.a3_holds


FIG3_DELTAS = PayoffDeltas(delta_tr1=0.5, delta_ps1=0.25, delta_rt0=1.5, delta_sp0=-0.5)
FIG3_ENV = EnvParams(theta=0.8, epsilon=0.5)


def fig3_config(beta: float = 0.0, rule: Rule | str = Rule.LOGIT) -> ModelConfig:
    """Parameter set of the reference bifurcation diagram."""
    return ModelConfig(FIG3_DELTAS, FIG3_ENV, float(beta), Rule(rule))


def derive_coeffs(deltas: PayoffDeltas, env: EnvParams) -> LinearCoeffs:
    tr1, ps1 = deltas.delta_tr1, deltas.delta_ps1
    rt0, sp0 = deltas.delta_rt0, deltas.delta_sp0
    theta = env.theta
    a = sp0 - rt0 + ps1 - tr1
    b = rt0 - sp0
    c = -(ps1 + sp0)
    d = sp0
    D = rt0 + tr1 + theta * (sp0 + ps1)
    n_bar = (rt0 + theta * sp0) / D if D != 0 else math.nan
    x0 = -d / b if b != 0 else None
    return LinearCoeffs(a=a, b=b, c=c, d=d, D=D, n_bar=n_bar, x0=x0)


def payoff_diff(coeffs: LinearCoeffs, s) -> float:
    """Payoff advantage of cooperating over defecting, g(x, n)."""
    x, n = s
    return coeffs.a * x * n + coeffs.b * x + coeffs.c * n + coeffs.d


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def logit_prob(beta: float, g_value: float) -> float:
    """Probability that a revising agent picks C given payoff advantage ``g_value``.

    Evaluated as 1 / (1 + exp(-beta g)) on whichever side keeps the exponent
    non-positive, so it never overflows.
    """
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    return _sigmoid(beta * g_value)


def vector_field(config: ModelConfig, s) -> tuple[float, float]:
    x, n = s
    k = config.coeffs
    theta, eps = config.env.theta, config.env.epsilon
    g = k.a * x * n + k.b * x + k.c * n + k.d
    if config.rule is Rule.LOGIT:
        dx = _sigmoid(config.beta * g) - x
    else:
        dx = x * (1.0 - x) * g
    dn = eps * n * (1.0 - n) * (theta * x - (1.0 - x))
    return dx, dn


def _fd_jacobian(config: ModelConfig, s, step: float = 1e-6) -> np.ndarray:
    x, n = s
    jac = np.empty((2, 2))
    for j, (ex, en) in enumerate(((step, 0.0), (0.0, step))):
        fp = vector_field(config, (x + ex, n + en))
        fm = vector_field(config, (x - ex, n - en))
        jac[0, j] = (fp[0] - fm[0]) / (2 * step)
        jac[1, j] = (fp[1] - fm[1]) / (2 * step)
    return jac


def jacobian(config: ModelConfig, s) -> np.ndarray:
    """2x2 Jacobian of the vector field at ``s``.

    Closed form for the logit rule; central differences for the imitative rule.
    """
    if config.rule is not Rule.LOGIT:
        return _fd_jacobian(config, s)
    x, n = s
    k = config.coeffs
    theta, eps, beta = config.env.theta, config.env.epsilon, config.beta
    rho = _sigmoid(beta * (k.a * x * n + k.b * x + k.c * n + k.d))
    slope = beta * rho * (1.0 - rho)
    return np.array(
        [
            [slope * (k.a * n + k.b) - 1.0, slope * (k.a * x + k.c)],
            [eps * n * (1.0 - n) * (1.0 + theta), eps * (1.0 - 2.0 * n) * (theta * x - (1.0 - x))],
        ]
    )


def check_assumptions(config: ModelConfig) -> AssumptionReport:
    dl, theta = config.deltas, config.env.theta
    a1 = dl.delta_tr1 > 0 and dl.delta_ps1 > 0
    a2 = theta < 1
    a3 = dl.delta_sp0 < 0 and dl.delta_rt0 > -dl.delta_sp0
    failed = [name for name, ok in (("A1", a1), ("A2", a2), ("A3", a3)) if not ok]
    detail = "all assumptions hold" if not failed else "violated: " + ", ".join(failed)
    return AssumptionReport(a1, a2, a3, detail)
