import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from einsteuler.fluid import EquationOfState, normalized_velocity
from einsteuler.grid import GridSpec
from einsteuler.reduction import N_STATE, metric_of, pack_state

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

EOS = EquationOfState(K=1.0, gamma=2.0)


def random_states(n, rng, eos=EOS, v_scale=0.1, u_scale=0.5, sigma2_max=0.99, d_scale=0.3):
    """``n`` admissible single-point states: small ``v``, causal ``w``, normalized ``u``."""
    v = rng.uniform(-v_scale, v_scale, (n, 10))
    g = metric_of(v)
    u = normalized_velocity(g, rng.uniform(-u_scale, u_scale, (n, 3)))
    wmax = np.sqrt(sigma2_max / (eos.gamma * eos.K))
    w = wmax * rng.uniform(0.0, 1.0, n)
    dtv = rng.uniform(-d_scale, d_scale, (n, 10))
    dxv = rng.uniform(-d_scale, d_scale, (n, 30))
    return pack_state(v, dtv, dxv, w, u, eos)


@st.composite
def admissible_states(draw, eos=EOS, v_scale=0.1, u_scale=0.5, sigma2_max=0.99):
    """Hypothesis strategy for one admissible 55-component state."""
    v = draw(hnp.arrays(float, 10, elements=st.floats(-v_scale, v_scale)))
    ub = draw(hnp.arrays(float, 3, elements=st.floats(-u_scale, u_scale)))
    wmax = np.sqrt(sigma2_max / (eos.gamma * eos.K))
    w = draw(st.floats(0.0, wmax))
    h = draw(hnp.arrays(float, 40, elements=st.floats(-0.3, 0.3)))
    u = normalized_velocity(metric_of(v), ub)
    return pack_state(v, h[:10], h[10:], w, u, eos)


@pytest.fixture
def eos():
    return EOS


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def line_grid(n=64, L=2 * np.pi, boundary="periodic", order=4):
    return GridSpec((n, 1, 1), (L, 1.0, 1.0), boundary, order)


def zero_state(grid):
    return np.zeros(grid.shape + (N_STATE,))


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> str:
    """Log one acceptance verdict; the lines are repeated in the terminal summary."""
    line = f"[{number:2d}] {'PASS' if passed else 'FAIL'} {title}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
