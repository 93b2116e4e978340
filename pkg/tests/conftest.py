import json

import numpy as np
import pytest

from hinf.realization import (
    CenteredRealization,
    DescriptorRealization,
    PartitionedPlant,
    from_descriptor,
)
from hinf.sysfile import fixture_path, load_system


def rand_matrix(rng, *shape, complex_=False):
    M = rng.standard_normal(shape)
    if complex_:
        M = M + 1j * rng.standard_normal(shape)
    return M


def rand_stable_matrix(rng, n, radius=0.8, complex_=False):
    A = rand_matrix(rng, n, n, complex_=complex_)
    rho = max(abs(np.linalg.eigvals(A))) if n else 1.0
    return radius * A / rho


def rand_stable_system(rng, n, m, p, alpha=1.0, radius=0.8, complex_=False, feedthrough=True):
    """Random stable centered system with E = I."""
    A = rand_stable_matrix(rng, n, radius, complex_)
    D = rand_matrix(rng, p, m, complex_=complex_) if feedthrough else np.zeros((p, m))
    return CenteredRealization(A, np.eye(n), rand_matrix(rng, n, m, complex_=complex_),
                               rand_matrix(rng, p, n, complex_=complex_), D, alpha)


def rand_plant(rng, n, m1, m2, p1, p2, alpha=1.0, complex_=False):
    """Random plant with zero D11, D22 and stable A - zE."""
    c = lambda *s: rand_matrix(rng, *s, complex_=complex_)
    return PartitionedPlant.from_blocks(
        rand_stable_matrix(rng, n, complex_=complex_), np.eye(n),
        c(n, m1), c(n, m2), c(p1, n), c(p2, n), D12=c(p1, m2), D21=c(p2, m1), alpha=alpha)


def rand_descriptor(rng, n_finite, n_nil, m, p, complex_=False, nil_index=2):
    """Random regular descriptor system with a nilpotent (polynomial) part.

    The finite part is ``n_finite`` generic eigenvalues; the infinite part
    consists of Jordan blocks of size ``nil_index``.  A random equivalence
    transformation hides the structure.
    """
    n = n_finite + n_nil
    A = np.zeros((n, n), dtype=complex if complex_ else float)
    E = np.zeros_like(A)
    A[:n_finite, :n_finite] = rand_matrix(rng, n_finite, n_finite, complex_=complex_)
    E[:n_finite, :n_finite] = np.eye(n_finite)
    A[n_finite:, n_finite:] = np.eye(n_nil)
    for k in range(n_finite, n - 1):
        if (k - n_finite) % nil_index != nil_index - 1:
            E[k, k + 1] = 1.0
    U = rand_matrix(rng, n, n, complex_=complex_)
    V = rand_matrix(rng, n, n, complex_=complex_)
    return DescriptorRealization(U @ A @ V, U @ E @ V, rand_matrix(rng, n, m, complex_=complex_),
                                 rand_matrix(rng, p, n, complex_=complex_),
                                 rand_matrix(rng, p, m, complex_=complex_))


def unit_points(count, offset=0.1234):
    return np.exp(1j * (offset + 2 * np.pi * np.arange(count) / count))


def contractive_parameters(rng, m2, p2, count, alpha=1.0):
    """Constant and first-order stable parameters with ``||Q|| <= 0.95``.

    First-order ones are ``c b / (z - a)`` with ``|a| <= 0.9``; their norm is
    ``|c b| / (1 - |a|)``.
    """
    out = []
    for k in range(count):
        if k % 2 == 0:
            Q = rand_matrix(rng, m2, p2)
            Q *= rng.uniform(0.05, 0.95) / np.linalg.norm(Q, 2)
            out.append(Q)
        else:
            a = rng.uniform(-0.9, 0.9)
            b = rand_matrix(rng, 1, p2)
            c = rand_matrix(rng, m2, 1)
            gain = np.linalg.norm(c, 2) * np.linalg.norm(b, 2) / (1 - abs(a))
            c *= rng.uniform(0.05, 0.95) / gain
            out.append(from_descriptor(DescriptorRealization([[a]], [[1.0]], b, c,
                                                             np.zeros((m2, p2))),
                                      alpha * alpha, alpha))
    return out


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def acceptance(request):
    """Callable ``record(number, ok, detail)`` for the acceptance summary."""
    results = request.config.stash[_ACCEPTANCE]

    def record(number, ok, detail=""):
        results[number] = (ok, detail)
    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))


@pytest.fixture(scope="session")
def f16():
    return load_system(fixture_path("f16.json")).plant()


@pytest.fixture(scope="session")
def f16_expected():
    return json.loads(fixture_path("f16_expected.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
