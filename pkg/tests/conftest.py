import sys

import numpy as np
import pytest
from hypothesis import strategies as st

from ecodyn.model import EnvParams, ModelConfig, PayoffDeltas, fig3_config


@pytest.fixture
def fig3():
    return fig3_config()


@st.composite
def assumed_configs(draw, beta=st.floats(0.1, 12.0)):
    """Parameter sets for which every standing assumption holds."""
    sp0 = -draw(st.floats(0.05, 1.5))
    deltas = PayoffDeltas(
        delta_tr1=draw(st.floats(0.05, 2.0)),
        delta_ps1=draw(st.floats(0.05, 2.0)),
        delta_rt0=-sp0 + draw(st.floats(0.05, 2.0)),
        delta_sp0=sp0,
    )
    env = EnvParams(theta=draw(st.floats(0.1, 0.95)), epsilon=draw(st.floats(0.1, 2.0)))
    return ModelConfig(deltas, env, draw(beta))


def random_assumed_configs(rng: np.random.Generator, count: int, beta_range=(0.1, 12.0)):
    out = []
    for _ in range(count):
        sp0 = -rng.uniform(0.05, 1.5)
        deltas = PayoffDeltas(
            rng.uniform(0.05, 2.0), rng.uniform(0.05, 2.0), -sp0 + rng.uniform(0.05, 2.0), sp0
        )
        env = EnvParams(rng.uniform(0.1, 0.95), rng.uniform(0.1, 2.0))
        out.append(ModelConfig(deltas, env, rng.uniform(*beta_range)))
    return out


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key, (ok, detail) in results.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
