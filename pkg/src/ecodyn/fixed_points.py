"""Equilibria of the logit system, rationality thresholds and local stability.

Boundary equilibria (n = 0 or n = 1) satisfy ``line(x) = T_beta(x)`` with
``T_beta(x) = log(x / (1 - x)) / beta`` and ``line`` the payoff advantage
restricted to that edge.  Substituting ``x = sigmoid(u)`` turns this into
``line(sigmoid(u)) = u / beta`` on the whole real line, which is where the
bisections below run: it removes the logarithmic singularities at the ends of
(0, 1) and keeps roots like ``x_toc1 ~ exp(beta d)`` resolvable at large beta.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, RootFindingError
from .model import (
    EnvParams,
    LinearCoeffs,
    ModelConfig,
    Rule,
    State,
    check_assumptions,
    jacobian,
    vector_field,
)

__all__ = [
    "Family",
    "Stability",
    "FixedPoint",
    "Thresholds",
    "t_beta",
    "beta_int",
    "beta_hat",
    "beta_hopf",
    "thresholds",
    "interior_fixed_point",
    "toc_fixed_points",
    "prosperity_fixed_point",
    "classify_stability",
    "all_fixed_points",
    "imitative_fixed_points",
    "residual",
]

MERGE_TOL = 1e-6
HYPERBOLIC_TOL = 1e-9
TANGENCY_TOL = 1e-12
SCAN_POINTS = 10_000
BETA_HAT_MAX = 1e3


class Family(str, enum.Enum):
    TOC1 = "toc1"
    TOC2 = "toc2"
    TOC3 = "toc3"
    INTERIOR = "interior"
    PROSPERITY = "prosperity"
    DEGENERATE_LINE = "degenerate_line"
    BETA0_TOC = "beta0_toc"
    BETA0_PROSPERITY = "beta0_prosperity"
    # imitative baseline only
    CORNER = "corner"
    EDGE = "edge"

    @property
    def is_toc(self) -> bool:
        return self in (Family.TOC1, Family.TOC2, Family.TOC3, Family.BETA0_TOC)


class Stability(str, enum.Enum):
    STABLE_NODE = "stable_node"
    STABLE_FOCUS = "stable_focus"
    UNSTABLE_NODE = "unstable_node"
    UNSTABLE_FOCUS = "unstable_focus"
    SADDLE = "saddle"
    CENTER_CANDIDATE = "center_candidate"
    NONHYPERBOLIC = "nonhyperbolic"


@dataclass(frozen=True)
class FixedPoint:
    location: State
    family: Family
    eigenvalues: tuple[complex, complex] | None = None
    stability: Stability | None = None
    merged: bool = False  # two TOC roots collapsed at the tangency

    @property
    def is_stable(self) -> bool:
        return self.stability in (Stability.STABLE_NODE, Stability.STABLE_FOCUS)


@dataclass(frozen=True)
class Thresholds:
    beta_int: float
    beta_hat: float | None
    beta_h: float


def t_beta(beta: float, x: float) -> float:
    """Scaled log-odds ``log(x / (1 - x)) / beta``."""
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must lie in (0, 1), got {x}")
    return math.log(x / (1.0 - x)) / beta


def _sigmoid(u: float) -> float:
    if u >= 0:
        return 1.0 / (1.0 + math.exp(-u))
    e = math.exp(u)
    return e / (1.0 + e)


def _logit(x: float) -> float:
    return math.log(x) - math.log1p(-x)


def beta_int(coeffs: LinearCoeffs, env: EnvParams) -> float:
    """Smallest rationality at which an interior equilibrium exists."""
    # delta_RT0 + theta * delta_SP0, rewritten with b = RT0 - SP0 and d = SP0
    denom = coeffs.b + coeffs.d + env.theta * coeffs.d
    if not denom > 0:
        raise DomainError(f"delta_RT0 + theta*delta_SP0 must be > 0, got {denom}")
    return (1.0 + env.theta) * math.log(1.0 / env.theta) / denom


def beta_hopf(coeffs: LinearCoeffs, env: EnvParams) -> float:
    """Rationality at which the trace of the interior Jacobian crosses zero."""
    theta = env.theta
    slope = coeffs.a * coeffs.n_bar + coeffs.b
    if not coeffs.D > 0:
        raise DomainError(f"D must be > 0, got {coeffs.D}")
    if not slope > 0:
        raise DomainError(f"a*n_bar + b must be > 0, got {slope}")
    scale = theta * (1.0 + 1.0 / theta) ** 2
    return (scale + coeffs.a * (1.0 + theta) / coeffs.D * math.log(1.0 / theta)) / slope


def _tangency_x(beta: float, b: float) -> float:
    return 0.5 - 0.5 * math.sqrt(1.0 - 4.0 / (beta * b))


def _bisect(f, lo, hi, flo=None, fhi=None, max_iter=2000, width=0.0):
    """Plain bisection down to floating-point resolution (or ``width``)."""
    flo = f(lo) if flo is None else flo
    fhi = f(hi) if fhi is None else fhi
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise RootFindingError(
            "bracket has no sign change", lo=lo, hi=hi, f_lo=flo, f_hi=fhi
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= width:
            return mid
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise RootFindingError("bisection did not converge", lo=lo, hi=hi)


def beta_hat(coeffs: LinearCoeffs, beta_max: float = BETA_HAT_MAX) -> float | None:
    """Rationality at which the two lower TOC equilibria are born (tangency).

    Returns ``None`` when the tangency gap does not change sign on
    ``(4/b, beta_max)``.
    """
    b, d = coeffs.b, coeffs.d
    if not b > 0:
        raise DomainError(f"b must be > 0, got {b}")

    def gap(beta):
        xb = _tangency_x(beta, b)
        if xb <= 0.0:
            return -d
        return math.log(xb / (1.0 - xb)) / beta - (b * xb + d)

    lo = 4.0 / b * (1.0 + 1e-12)
    if lo >= beta_max:
        return None
    g_lo, g_hi = gap(lo), gap(beta_max)
    if (g_lo > 0) == (g_hi > 0):
        warnings.warn(f"no tangency found below beta_max={beta_max}", RuntimeWarning)
        return None
    return _bisect(gap, lo, beta_max, g_lo, g_hi)


def thresholds(config: ModelConfig) -> Thresholds:
    k = config.coeffs
    bh = beta_hat(k) if k.b > 0 else None
    return Thresholds(beta_int(k, config.env), bh, beta_hopf(k, config.env))


def residual(config: ModelConfig, s) -> float:
    """Max-norm of the vector field at ``s``."""
    return max(abs(v) for v in vector_field(config, s))


def _require_logit(config: ModelConfig, positive_beta: bool = True):
    if config.rule is not Rule.LOGIT:
        raise DomainError("operation defined for the logit rule only")
    if positive_beta and not config.beta > 0:
        raise DomainError(f"beta must be > 0, got {config.beta}")


def interior_fixed_point(config: ModelConfig) -> FixedPoint | None:
    """Interior equilibrium, or ``None`` when n_int falls outside (0, 1)."""
    _require_logit(config)
    k, theta = config.coeffs, config.env.theta
    if k.D == 0:
        return None
    drive = k.b + k.d + theta * k.d
    n_int = (drive - (1.0 + theta) * math.log(1.0 / theta) / config.beta) / k.D
    if not 0.0 < n_int < 1.0:
        return None
    fp = FixedPoint(State(config.x_int, n_int), Family.INTERIOR)
    return classify_stability(config, fp)


def _edge_roots(line, beta, brackets):
    """Roots of line(sigmoid(u)) = u / beta inside each u-bracket."""
    h = lambda u: line(_sigmoid(u)) - u / beta  # noqa: E731
    return [_sigmoid(_bisect(h, lo, hi)) for lo, hi in brackets]


def _scan_edge(line, beta):
    """Sign-change scan fallback on a uniform x grid."""
    xs = np.linspace(1e-12, 1.0 - 1e-12, SCAN_POINTS)
    us = np.log(xs) - np.log1p(-xs)
    vals = np.array([line(x) for x in xs]) - us / beta
    roots = []
    for i in range(len(xs) - 1):
        if vals[i] == 0:
            roots.append(float(xs[i]))
        elif (vals[i] > 0) != (vals[i + 1] > 0):
            roots.extend(_edge_roots(line, beta, [(us[i], us[i + 1])]))
    return roots


def toc_fixed_points(config: ModelConfig) -> list[FixedPoint]:
    """All equilibria on the collapsed edge n = 0, sorted by x."""
    _require_logit(config)
    k, beta = config.coeffs, config.beta
    line = lambda x: k.b * x + k.d  # noqa: E731
    h = lambda u: line(_sigmoid(u)) - u / beta  # noqa: E731
    guided = k.b > 0 and k.d < 0 and k.b + k.d > 0

    merged = False
    if guided:
        upper = _edge_roots(line, beta, [(0.0, beta * (k.b + k.d) + 1.0)])
        lower = []
        if beta * k.b > 4.0:
            xb = _tangency_x(beta, k.b)
            ub = _logit(xb)
            hb = h(ub)
            if hb < 0:
                lower = _edge_roots(line, beta, [(beta * k.d - 1.0, ub), (ub, 0.0)])
            elif hb <= TANGENCY_TOL:
                lower = [xb]
        if len(lower) == 2 and lower[1] - lower[0] < MERGE_TOL:
            lower = [0.5 * (lower[0] + lower[1])]
        if len(lower) == 1:
            merged = True
            families = [Family.TOC1]
        else:
            families = [Family.TOC1, Family.TOC2][: len(lower)]
        roots = list(zip(lower, families)) + [(upper[0], Family.TOC3)]
    else:
        warnings.warn(
            "payoff assumptions do not hold; scanning for TOC equilibria", RuntimeWarning
        )
        found = sorted(_scan_edge(line, beta))
        below = [x for x in found if x < 0.5]
        roots = [(x, Family.TOC1 if i == 0 else Family.TOC2) for i, x in enumerate(below)]
        roots += [(x, Family.TOC3) for x in found if x >= 0.5]

    out = []
    for x, fam in roots:
        fp = FixedPoint(State(x, 0.0), fam, merged=merged and fam is Family.TOC1)
        out.append(classify_stability(config, fp))
    return out


def prosperity_fixed_point(config: ModelConfig) -> FixedPoint:
    """Unique equilibrium on the full-resource edge n = 1."""
    _require_logit(config)
    k, beta = config.coeffs, config.beta
    line = lambda x: (k.a + k.b) * x + k.c + k.d  # noqa: E731
    if check_assumptions(config).a1_holds:
        low = beta * min(k.c + k.d, k.a + k.b + k.c + k.d) - 1.0
        roots = _edge_roots(line, beta, [(low, 0.0)])
    else:
        warnings.warn(
            "defection not dominant at n = 1; scanning for prosperity equilibria",
            RuntimeWarning,
        )
        roots = _scan_edge(line, beta)
        if not roots:
            raise RootFindingError("no prosperity equilibrium found", beta=beta)
    return classify_stability(config, FixedPoint(State(roots[0], 1.0), Family.PROSPERITY))


def _eigenvalues(jac: np.ndarray) -> tuple[complex, complex]:
    if jac[1, 0] == 0.0 or jac[0, 1] == 0.0:
        return complex(jac[0, 0]), complex(jac[1, 1])
    half_tr = 0.5 * (jac[0, 0] + jac[1, 1])
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    disc = half_tr * half_tr - det
    if disc >= 0:
        r = math.sqrt(disc)
        return complex(half_tr + r), complex(half_tr - r)
    w = math.sqrt(-disc)
    return complex(half_tr, w), complex(half_tr, -w)


def _label(eigs, jac) -> Stability:
    tr = float(np.trace(jac))
    det = float(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0])
    re = [e.real for e in eigs]
    if det > 0 and abs(tr) < HYPERBOLIC_TOL:
        return Stability.CENTER_CANDIDATE
    if any(abs(r) < HYPERBOLIC_TOL for r in re):
        return Stability.NONHYPERBOLIC
    if re[0] * re[1] < 0:
        return Stability.SADDLE
    complex_pair = any(e.imag != 0 for e in eigs)
    if re[0] < 0:
        return Stability.STABLE_FOCUS if complex_pair else Stability.STABLE_NODE
    return Stability.UNSTABLE_FOCUS if complex_pair else Stability.UNSTABLE_NODE


def classify_stability(config: ModelConfig, fp: FixedPoint) -> FixedPoint:
    """Fill in eigenvalues and a stability label for ``fp``."""
    jac = jacobian(config, fp.location)
    eigs = _eigenvalues(jac)
    label = Stability.NONHYPERBOLIC if fp.merged else _label(eigs, jac)
    return replace(fp, eigenvalues=eigs, stability=label)


def all_fixed_points(config: ModelConfig) -> list[FixedPoint]:
    _require_logit(config, positive_beta=False)
    if config.beta == 0:
        if config.env.theta == 1:
            pts = [FixedPoint(State(0.5, 0.5), Family.DEGENERATE_LINE)]
        else:
            pts = [
                FixedPoint(State(0.5, 0.0), Family.BETA0_TOC),
                FixedPoint(State(0.5, 1.0), Family.BETA0_PROSPERITY),
            ]
        return [classify_stability(config, p) for p in pts]
    pts = toc_fixed_points(config)
    interior = interior_fixed_point(config)
    if interior is not None:
        pts.append(interior)
    pts.append(prosperity_fixed_point(config))
    return pts


def imitative_fixed_points(config: ModelConfig) -> list[FixedPoint]:
    """Equilibria of the imitative baseline (corners, edge and interior points)."""
    k, x_int = config.coeffs, config.x_int
    cfg = config.with_rule(Rule.IMITATIVE)
    pts = [FixedPoint(State(x, n), Family.CORNER) for x in (0.0, 1.0) for n in (0.0, 1.0)]
    if k.x0 is not None and 0.0 < k.x0 < 1.0:
        pts.append(FixedPoint(State(k.x0, 0.0), Family.EDGE))
    if k.a + k.b != 0:
        x1 = -(k.c + k.d) / (k.a + k.b)
        if 0.0 < x1 < 1.0:
            pts.append(FixedPoint(State(x1, 1.0), Family.EDGE))
    if 0.0 < k.n_bar < 1.0:
        pts.append(FixedPoint(State(x_int, k.n_bar), Family.INTERIOR))
    return [classify_stability(cfg, p) for p in pts]
