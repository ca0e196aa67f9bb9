import numpy as np
import pytest

from regnewt import Exponential, IteratedTikhonov, Landweber, Lardy, LinearOperator

ALL_FAMILIES = [IteratedTikhonov(1), IteratedTikhonov(2), IteratedTikhonov(3), Landweber(),
                Lardy(), Exponential()]


def random_operator(rng, rows, cols, target_norm=0.7, weighted=False):
    """Dense operator with weighted 2-norm ``target_norm``."""
    m = rng.standard_normal((rows, cols))
    w_in = rng.uniform(0.5, 2.0, cols) if weighted else None
    w_out = rng.uniform(0.5, 2.0, rows) if weighted else None
    op = LinearOperator.from_matrix(m, w_in, w_out)
    nrm = np.linalg.norm(op.whitened(), 2)
    return LinearOperator.from_matrix(m * (target_norm / nrm), w_in, w_out)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=ALL_FAMILIES, ids=lambda f: f.name)
def family(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
