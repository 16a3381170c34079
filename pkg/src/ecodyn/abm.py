"""Finite-population logit learners coupled to a deterministic resource.

Each of ``N`` agents holds C or D and receives revision opportunities from an
independent unit-rate Poisson clock, so population-level events arrive at rate
``N``.  A revising agent picks C with the logit probability evaluated at the
current empirical cooperator fraction and resource level.  Between events
the resource follows its ODE, advanced by explicit Euler substeps no longer
than ``env_step``.  In the large-``N`` limit the empirical fraction follows
x' = rho_C(x, n) - x, which is what :func:`compare_abm_ode` checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DomainError
from .integrators import Trajectory
from .model import ModelConfig, Rule, State

__all__ = ["AbmConfig", "AbmTrajectory", "DeviationStats", "run_abm", "compare_abm_ode"]


@dataclass(frozen=True)
class AbmConfig:
    model: ModelConfig
    agents: int
    seed: int = 0
    t_end: float = 50.0
    env_step: float = 0.01
    x0: float = 0.6
    n0: float = 0.6

    def __post_init__(self):
        if self.agents < 2:
            raise DomainError(f"need at least 2 agents, got {self.agents}")
        if not self.env_step > 0:
            raise DomainError(f"env_step must be > 0, got {self.env_step}")
        if not self.t_end > 0:
            raise DomainError(f"t_end must be > 0, got {self.t_end}")
        if self.seed < 0:
            raise DomainError("seed must be a non-negative integer")
        if self.model.rule is not Rule.LOGIT:
            raise DomainError("the agent-based model implements the logit rule only")
        State(self.x0, self.n0)


@dataclass
class AbmTrajectory:
    times: np.ndarray
    x_fraction: np.ndarray
    n_env: np.ndarray
    revision_count: int
    agents: int
    clamp_count: int = 0

    @property
    def cooperators(self) -> np.ndarray:
        return np.rint(self.x_fraction * self.agents).astype(np.int64)


@dataclass(frozen=True)
class DeviationStats:
    sup_x: float
    sup_n: float
    mean_x: float
    mean_n: float

    @property
    def sup(self) -> float:
        return max(self.sup_x, self.sup_n)


@numba.njit(cache=True)
def _abm_loop(N, k0, n0, t_end, env_step, beta, a, b, c, d, theta, eps, waits, u_agent, u_choice):
    m = waits.shape[0]
    times = np.empty(m + 2)
    ks = np.empty(m + 2, dtype=np.int64)
    ns = np.empty(m + 2)
    times[0], ks[0], ns[0] = 0.0, k0, n0
    t, k, n = 0.0, k0, n0
    rec = 1
    clamps = 0
    i = 0
    while True:
        if i >= m:
            return times[:rec], ks[:rec], ns[:rec], i, clamps, False
        t_next = t + waits[i]
        stop = t_next > t_end
        if stop:
            t_next = t_end
        span = t_next - t
        sub = max(1, int(math.ceil(span / env_step)))
        dt = span / sub
        x = k / N
        drive = theta * x - (1.0 - x)
        for _ in range(sub):
            n = n + dt * eps * n * (1.0 - n) * drive
            if n < 0.0:
                n = 0.0
                clamps += 1
            elif n > 1.0:
                n = 1.0
                clamps += 1
        t = t_next
        if stop:
            times[rec], ks[rec], ns[rec] = t, k, n
            rec += 1
            return times[:rec], ks[:rec], ns[:rec], i, clamps, True
        z = beta * (a * x * n + b * x + c * n + d)
        if z >= 0.0:
            rho = 1.0 / (1.0 + math.exp(-z))
        else:
            e = math.exp(z)
            rho = e / (1.0 + e)
        is_c = u_agent[i] < x
        adopt_c = u_choice[i] < rho
        if is_c and not adopt_c:
            k -= 1
        elif adopt_c and not is_c:
            k += 1
        times[rec], ks[rec], ns[rec] = t, k, n
        rec += 1
        i += 1


def run_abm(cfg: AbmConfig) -> AbmTrajectory:
    """Simulate one realisation; identical ``cfg`` gives identical output."""
    N = int(cfg.agents)
    k0 = int(round(cfg.x0 * N))
    expected = N * cfg.t_end
    size = int(expected + 8.0 * math.sqrt(expected) + 64)
    _, beta, a, b, c, d, theta, eps = cfg.model.kernel_args()
    while True:
        rng = np.random.default_rng(cfg.seed)
        waits = rng.exponential(1.0 / N, size)
        u_agent = rng.random(size)
        u_choice = rng.random(size)
        times, ks, ns, count, clamps, done = _abm_loop(
            N, k0, float(cfg.n0), float(cfg.t_end), float(cfg.env_step),
            beta, a, b, c, d, theta, eps, waits, u_agent, u_choice,
        )
        if done:
            return AbmTrajectory(times, ks / N, ns, int(count), N, int(clamps))
        size *= 2


def compare_abm_ode(abm: AbmTrajectory, ode: Trajectory) -> DeviationStats:
    """Deviation between an ABM path and an ODE solution on the ODE time grid.

    The ABM path is piecewise constant in ``x`` between events, so at each ODE
    time we take the state left by the most recent event.
    """
    lo = max(abm.times[0], ode.times[0])
    hi = min(abm.times[-1], ode.times[-1])
    if not hi >= lo:
        raise DomainError("ABM and ODE time ranges do not overlap")
    mask = (ode.times >= lo) & (ode.times <= hi)
    t = ode.times[mask]
    idx = np.clip(np.searchsorted(abm.times, t, side="right") - 1, 0, len(abm.times) - 1)
    dx = np.abs(abm.x_fraction[idx] - ode.x[mask])
    dn = np.abs(abm.n_env[idx] - ode.n[mask])
    return DeviationStats(float(dx.max()), float(dn.max()), float(dx.mean()), float(dn.mean()))
