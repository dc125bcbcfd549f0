import itertools

import numpy as np
import pytest

from raarlab.grid import forward_transform, hermitian_flip


def brute_dft(u, inverse=False):
    """Unitary DFT by direct summation over every site pair."""
    u = np.asarray(u, dtype=complex)
    n = u.size
    sign = 1 if inverse else -1
    out = np.zeros_like(u)
    for k in itertools.product(*(range(d) for d in u.shape)):
        acc = 0j
        for x in itertools.product(*(range(d) for d in u.shape)):
            phase = sum(ki * xi / d for ki, xi, d in zip(k, x, u.shape))
            acc += u[x] * np.exp(sign * 2j * np.pi * phase)
        out[k] = acc / np.sqrt(n)
    return out


def symmetric_data(rng, shape):
    """Hermitian-symmetric magnitudes of a random real signal."""
    m = np.abs(forward_transform(rng.standard_normal(shape)))
    return 0.5 * (m + hermitian_flip(m))


def random_mask(rng, shape):
    D = rng.random(shape) < 0.5
    D.flat[rng.integers(D.size)] = True
    return D


def random_problem(rng, shape):
    return rng.standard_normal(shape), symmetric_data(rng, shape), random_mask(rng, shape)


GRID_SHAPES = [(1,), (2,), (8, 8), (16, 16), (5,), (3, 4)]


@pytest.fixture
def rng():
    return np.random.default_rng(20040511)


# one summary line per acceptance criterion
_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _ACCEPTANCE:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"{verdict}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
