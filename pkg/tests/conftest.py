import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def ivp_reference(sys, q0, v0, times, rtol=1e-13, atol=1e-14):
    """Independent oracle: scipy's DOP853 on the first-order form; returns (q, v) at ``times``."""
    from scipy.integrate import solve_ivp

    d = sys.dim
    M = np.asarray(sys.mass_matrix(np.zeros(d)))

    def rhs(t, y):
        q, v = y[:d], y[d:]
        return np.concatenate([v, np.linalg.solve(M, sys.force(q, v) - sys.potential_grad(q))])

    times = np.asarray(times, dtype=float)
    sol = solve_ivp(rhs, (times[0], times[-1]), np.concatenate([q0, v0]), method="DOP853",
                    rtol=rtol, atol=atol, t_eval=times)
    assert sol.success
    return sol.y[:d].T, sol.y[d:].T


# one verdict line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
