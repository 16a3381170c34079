"""Explicit Runge-Kutta integration of the game-environment system.

Two schemes:

* ``rk4``    classical fixed-step fourth order (compiled inner loop)
* ``dopri5`` Dormand-Prince 5(4) embedded pair with step-size control

After every accepted step the state is clamped back into the unit square if
it left it by at most ``CLAMP_TOL``; larger excursions raise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DomainError, IntegrationError
from .model import ModelConfig, Rule, State

__all__ = ["Trajectory", "integrate", "rk4_batch", "rk4_step", "make_rhs"]

CLAMP_TOL = 1e-9
DEFAULT_STEP = 0.01
DEFAULT_ATOL = 1e-9
DEFAULT_RTOL = 1e-7
# cap on adaptive steps: near an equilibrium the error estimate vanishes and
# unbounded growth would carry the step outside the stability region
MAX_ADAPTIVE_STEP = 0.5


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 2), columns x and n
    steps_accepted: int
    steps_rejected: int
    rule: Rule

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def n(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def final(self) -> State:
        x, n = self.states[-1]
        return State(float(x), float(n))

    def __len__(self):
        return len(self.times)


@numba.njit(cache=True, inline="always")
def _rhs(x, n, rule, beta, a, b, c, d, theta, eps):
    g = a * x * n + b * x + c * n + d
    if rule == 0:
        z = beta * g
        if z >= 0.0:
            rho = 1.0 / (1.0 + math.exp(-z))
        else:
            e = math.exp(z)
            rho = e / (1.0 + e)
        dx = rho - x
    else:
        dx = x * (1.0 - x) * g
    dn = eps * n * (1.0 - n) * (theta * x - (1.0 - x))
    return dx, dn


@numba.njit(cache=True)
def _clamp(v, tol):
    # returns (clamped value, ok flag)
    if v < 0.0:
        return 0.0, v >= -tol
    if v > 1.0:
        return 1.0, v <= 1.0 + tol
    return v, True


@numba.njit(cache=True)
def _rk4_path(x0, n0, h, nsteps, rule, beta, a, b, c, d, theta, eps, tol):
    """Returns (xs, ns, failed_step); failed_step is -1 on success."""
    xs = np.empty(nsteps + 1)
    ns = np.empty(nsteps + 1)
    xs[0] = x0
    ns[0] = n0
    x, n = x0, n0
    for i in range(nsteps):
        k1x, k1n = _rhs(x, n, rule, beta, a, b, c, d, theta, eps)
        k2x, k2n = _rhs(x + 0.5 * h * k1x, n + 0.5 * h * k1n, rule, beta, a, b, c, d, theta, eps)
        k3x, k3n = _rhs(x + 0.5 * h * k2x, n + 0.5 * h * k2n, rule, beta, a, b, c, d, theta, eps)
        k4x, k4n = _rhs(x + h * k3x, n + h * k3n, rule, beta, a, b, c, d, theta, eps)
        x = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        n = n + h / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
        x, okx = _clamp(x, tol)
        n, okn = _clamp(n, tol)
        xs[i + 1] = x
        ns[i + 1] = n
        if not (okx and okn):
            return xs[: i + 2], ns[: i + 2], i
    return xs, ns, -1


@numba.njit(cache=True)
def _rk4_batch(x0, n0, h, nsteps, rule, beta, a, b, c, d, theta, eps, tol):
    """Advance many initial conditions; rows may carry their own parameters."""
    m = x0.shape[0]
    xs = x0.copy()
    ns = n0.copy()
    worst = 0.0
    for j in range(m):
        x, n = xs[j], ns[j]
        hj = h[j]
        bj, aj, cj, dj, tj, ej = beta[j], a[j], c[j], d[j], theta[j], eps[j]
        bb = b[j]
        for _ in range(nsteps[j]):
            k1x, k1n = _rhs(x, n, rule, bj, aj, bb, cj, dj, tj, ej)
            k2x, k2n = _rhs(x + 0.5 * hj * k1x, n + 0.5 * hj * k1n, rule, bj, aj, bb, cj, dj, tj, ej)
            k3x, k3n = _rhs(x + 0.5 * hj * k2x, n + 0.5 * hj * k2n, rule, bj, aj, bb, cj, dj, tj, ej)
            k4x, k4n = _rhs(x + hj * k3x, n + hj * k3n, rule, bj, aj, bb, cj, dj, tj, ej)
            x = x + hj / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            n = n + hj / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
            ex = max(-x, x - 1.0, -n, n - 1.0)
            if ex > worst:
                worst = ex
            x, _ = _clamp(x, tol)
            n, _ = _clamp(n, tol)
        xs[j] = x
        ns[j] = n
    return xs, ns, worst


def make_rhs(config: ModelConfig):
    """Plain-Python right-hand side ``f(x, n) -> (dx, dn)`` for ``config``."""
    args = config.kernel_args()
    fn = _rhs.py_func

    def rhs(x, n):
        return fn(x, n, *args)

    return rhs


def rk4_step(rhs, x, n, h):
    k1x, k1n = rhs(x, n)
    k2x, k2n = rhs(x + 0.5 * h * k1x, n + 0.5 * h * k1n)
    k3x, k3n = rhs(x + 0.5 * h * k2x, n + 0.5 * h * k2n)
    k4x, k4n = rhs(x + h * k3x, n + h * k3n)
    return (
        x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        n + h / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n),
    )


def rk4_batch(configs, x0, n0, t_end, h=DEFAULT_STEP):
    """Final states of many fixed-step runs at once.

    ``configs`` is one ModelConfig or a sequence (one per row); ``t_end`` a
    scalar or per-row array.  All configs must share the learning rule.
    Returns ``(x, n, worst_excursion)``.
    """
    x0 = np.ascontiguousarray(x0, dtype=float)
    n0 = np.ascontiguousarray(n0, dtype=float)
    m = x0.shape[0]
    if isinstance(configs, ModelConfig):
        configs = [configs] * m
    rules = {c.rule for c in configs}
    if len(rules) != 1:
        raise DomainError("all rows of a batch must share one learning rule")
    params = np.array([c.kernel_args()[1:] for c in configs], dtype=float)
    t_end = np.broadcast_to(np.asarray(t_end, dtype=float), (m,))
    nsteps = np.maximum(1, np.ceil(t_end / h - 1e-9)).astype(np.int64)
    hs = t_end / nsteps
    rule = 0 if rules.pop() is Rule.LOGIT else 1
    cols = [np.ascontiguousarray(params[:, i]) for i in range(params.shape[1])]
    return _rk4_batch(x0, n0, hs, nsteps, rule, *cols, CLAMP_TOL)


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(p - q for p, q in zip(_B5, _B4))


def _dopri_run(rhs, x, n, t_end, atol, rtol, h0, h_min, h_max, max_steps):
    ts, xs, ns = [0.0], [x], [n]
    t = 0.0
    h = h0
    accepted = rejected = 0
    k = [rhs(x, n)] + [None] * 6
    while t < t_end:
        if accepted + rejected >= max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps at t={t}")
        if h < h_min:
            raise IntegrationError(f"step size underflow (h={h:.3e}) at t={t}")
        h = min(h, h_max, t_end - t)
        for s in range(1, 7):
            ax = x + h * sum(a * k[j][0] for j, a in enumerate(_A[s]))
            an = n + h * sum(a * k[j][1] for j, a in enumerate(_A[s]))
            k[s] = rhs(ax, an)
        # stage 7 evaluates at the 5th-order solution (FSAL)
        x5, n5 = ax, an
        ex = h * sum(e * kk[0] for e, kk in zip(_E, k))
        en = h * sum(e * kk[1] for e, kk in zip(_E, k))
        sx = atol + rtol * max(abs(x), abs(x5))
        sn = atol + rtol * max(abs(n), abs(n5))
        err = math.sqrt(0.5 * ((ex / sx) ** 2 + (en / sn) ** 2))
        outside = max(-x5, x5 - 1.0, -n5, n5 - 1.0) > CLAMP_TOL
        if err <= 1.0 and not outside:
            t += h
            x = min(max(x5, 0.0), 1.0)
            n = min(max(n5, 0.0), 1.0)
            ts.append(t)
            xs.append(x)
            ns.append(n)
            accepted += 1
            k[0] = k[6] if (x, n) == (x5, n5) else rhs(x, n)
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            rejected += 1
            factor = 0.5 if outside else max(0.2, 0.9 * err ** -0.2)
        h *= factor
    return np.array(ts), np.column_stack([xs, ns]), accepted, rejected


def integrate(
    config: ModelConfig,
    s0,
    t_end: float,
    method: str = "rk4",
    h: float = DEFAULT_STEP,
    atol: float = DEFAULT_ATOL,
    rtol: float = DEFAULT_RTOL,
    t0: float = 0.0,
    max_steps: int = 10_000_000,
    h_max: float = MAX_ADAPTIVE_STEP,
) -> Trajectory:
    """Integrate from ``s0`` over ``[t0, t0 + t_end]``.

    ``method`` is ``"rk4"`` (fixed step ``h``, shortened uniformly so that the
    grid ends exactly at ``t_end``) or ``"dopri5"`` (adaptive, tolerances
    ``atol``/``rtol``, ``h`` used as the initial step, steps capped at
    ``h_max``).
    """
    x0, n0 = (float(v) for v in s0)
    State(x0, n0)
    if not t_end > 0:
        raise DomainError(f"t_end must be > 0, got {t_end}")
    if method == "rk4":
        nsteps = max(1, int(math.ceil(t_end / h - 1e-9)))
        step = t_end / nsteps
        xs, ns, failed = _rk4_path(x0, n0, step, nsteps, *config.kernel_args(), CLAMP_TOL)
        if failed >= 0:
            raise IntegrationError(
                f"state left the unit square by more than {CLAMP_TOL} "
                f"at t={t0 + (failed + 1) * step}"
            )
        times = t0 + step * np.arange(nsteps + 1)
        return Trajectory(times, np.column_stack([xs, ns]), nsteps, 0, config.rule)
    if method == "dopri5":
        ts, states, acc, rej = _dopri_run(
            make_rhs(config), x0, n0, t_end, atol, rtol, h, 1e-14 * max(1.0, t_end), h_max, max_steps
        )
        return Trajectory(t0 + ts, states, acc, rej, config.rule)
    raise DomainError(f"unknown method {method!r}")
