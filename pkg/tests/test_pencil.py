import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hinf.errors import SingularPencil, SteinSingular
from hinf.pencil import (
    MatrixPencil,
    generalized_spectrum,
    is_regular,
    numerical_rank,
    ordered_stable_deflation,
    solve_stein,
    solve_stein_general,
)
from hinf.riccati import PopovStructure, symplectic_pencil

from conftest import rand_matrix, rand_stable_matrix


def kron_stein_oracle(E, A, C):
    """Vectorized ``E* X E - A* X A + C* C = 0`` as one dense solve."""
    n = E.shape[0]
    # vec(P X Q) = (Q^T kron P) vec(X), column-major
    K = np.kron(E.T, E.conj().T) - np.kron(A.T, A.conj().T)
    rhs = -(C.conj().T @ C).reshape(-1, order="F")
    return np.linalg.solve(K, rhs).reshape(n, n, order="F")


def random_unitary(rng, n):
    Q, R = np.linalg.qr(rand_matrix(rng, n, n, complex_=True))
    return Q * (np.diag(R) / abs(np.diag(R)))


# -- generalized_spectrum ---------------------------------------------------

def test_spectrum_diagonal():
    spec = generalized_spectrum(MatrixPencil(np.diag([0.5, 2.0]), np.eye(2)))
    assert sorted(spec.finite.real) == pytest.approx([0.5, 2.0], abs=1e-14)
    assert spec.infinite_count == 0


def test_spectrum_with_infinite_eigenvalue():
    spec = generalized_spectrum(MatrixPencil(np.diag([0.5, 1.0]), np.diag([1.0, 0.0])))
    assert spec.finite == pytest.approx([0.5], abs=1e-14)
    assert spec.infinite_count == 1


def test_spectrum_f16_pole_pencil(f16):
    spec = generalized_spectrum(f16.sys.pencil)
    assert spec.infinite_count == 1
    assert np.allclose(spec.finite.imag, 0, atol=1e-12)
    lam = np.sort(spec.finite.real)
    assert np.allclose(lam, [0.1327, 0.8260, 0.9817], atol=1e-3)
    # the short-period pair against the printed z^2 - 1.808 z + 0.8109
    assert lam[1] + lam[2] == pytest.approx(1.808, abs=5e-4)
    assert lam[1] * lam[2] == pytest.approx(0.8109, abs=5e-5)


def test_spectrum_singular_pencil_raises():
    with pytest.raises(SingularPencil):
        generalized_spectrum(MatrixPencil(np.zeros((2, 2)), np.zeros((2, 2))))
    # det(A - zE) == 0 identically despite nonzero entries
    A = np.array([[1.0, 0.0], [0.0, 0.0]])
    E = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert not is_regular(MatrixPencil(A, E))


def test_count_adds_up(rng):
    for n_fin, n_inf in [(3, 1), (2, 3), (0, 2), (4, 0)]:
        n = n_fin + n_inf
        E = np.diag([1.0] * n_fin + [0.0] * n_inf)
        U, V = rand_matrix(rng, n, n), rand_matrix(rng, n, n)
        A = U @ np.diag(rng.uniform(0.1, 2, n)) @ V
        spec = generalized_spectrum(MatrixPencil(A, U @ E @ V))
        assert len(spec.finite) + spec.infinite_count == n
        assert spec.infinite_count == n_inf


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_spectrum_unitary_invariance(n, seed):
    rng = np.random.default_rng(seed)
    A = rand_matrix(rng, n, n, complex_=True)
    E = rand_matrix(rng, n, n, complex_=True)
    U, V = random_unitary(rng, n), random_unitary(rng, n)
    s1 = np.sort_complex(generalized_spectrum(MatrixPencil(A, E)).finite)
    s2 = np.sort_complex(generalized_spectrum(MatrixPencil(U @ A @ V, U @ E @ V)).finite)
    assert len(s1) == len(s2)
    # match as multisets; sort_complex is not stable under roundoff, so pair greedily
    rest = list(s2)
    for lam in s1:
        k = int(np.argmin([abs(lam - mu) for mu in rest]))
        assert abs(lam - rest[k]) <= 1e-9 * max(1.0, abs(lam))
        rest.pop(k)


# -- ordered_stable_deflation ---------------------------------------------

def test_deflation_diagonal():
    res = ordered_stable_deflation(MatrixPencil(np.diag([0.5, 2.0]), np.eye(2)))
    assert res.stable_count == 1
    v = res.basis[:, 0]
    assert abs(abs(v[0]) - 1.0) < 1e-14 and abs(v[1]) < 1e-14
    assert not res.circle_violation


def test_deflation_excludes_infinite():
    res = ordered_stable_deflation(MatrixPencil(np.diag([0.5, 1.0]), np.diag([1.0, 0.0])))
    assert res.stable_count == 1


def test_deflation_flags_circle():
    res = ordered_stable_deflation(MatrixPencil(np.diag([0.5, 1.0 + 1e-10]), np.eye(2)))
    assert res.circle_violation


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_deflation_identity(n, seed):
    rng = np.random.default_rng(seed)
    A = rand_matrix(rng, n, n, complex_=True)
    E = rand_matrix(rng, n, n, complex_=True)
    res = ordered_stable_deflation(MatrixPencil(A, E))
    k = res.stable_count
    V, W = res.basis, res.left
    assert np.abs(V.conj().T @ V - np.eye(k)).max(initial=0.0) <= 1e-12
    scale = np.linalg.norm(A) + np.linalg.norm(E)
    assert np.linalg.norm(A @ V - W @ res.A_hat) <= 1e-10 * scale
    assert np.linalg.norm(E @ V - W @ res.E_hat) <= 1e-10 * scale
    inside = np.sum(np.abs(generalized_spectrum(MatrixPencil(A, E)).finite) < 1)
    assert k == inside


def test_deflation_f16_symplectic(f16):
    from hinf.synthesis import build_sigma_c
    pencil = symplectic_pencil(build_sigma_c(f16))
    assert pencil.n == 10
    res = ordered_stable_deflation(pencil)
    assert res.stable_count == 4
    assert not res.circle_violation


# -- Stein ------------------------------------------------------------------

def test_stein_static():
    c = 0.3 - 0.4j
    X = solve_stein(np.eye(1), np.zeros((1, 1)), np.array([[c]]))
    assert X[0, 0] == pytest.approx(-abs(c) ** 2, abs=1e-15)


def test_stein_scalar():
    X = solve_stein(np.eye(1), np.array([[0.5]]), np.eye(1))
    assert X[0, 0] == pytest.approx(-4.0 / 3.0, abs=1e-14)


@pytest.mark.parametrize("method", ["kron", "schur"])
def test_stein_random_against_kron_oracle(rng, method):
    for n in range(1, 7):
        E = np.eye(n) + 0.2 * rand_matrix(rng, n, n, complex_=True)
        A = rand_stable_matrix(rng, n, 0.7, complex_=True) @ E
        C = rand_matrix(rng, 2, n, complex_=True)
        X = solve_stein_general(E, A, C.conj().T @ C, method=method)
        ref = kron_stein_oracle(E, A, C)
        assert np.abs(X - ref).max() <= 1e-9 * (1 + np.abs(ref).max())
        assert np.array_equal(X, X.conj().T)
        assert np.linalg.eigvalsh(X)[-1] <= 1e-10 * np.abs(X).max()


def test_stein_residual_100_random(rng):
    for _ in range(100):
        n = int(rng.integers(1, 7))
        E = np.eye(n) + 0.3 * rand_matrix(rng, n, n, complex_=True)
        A = rand_stable_matrix(rng, n, 0.9, complex_=True) @ E
        C = rand_matrix(rng, int(rng.integers(1, 4)), n, complex_=True)
        X = solve_stein(E, A, C)
        assert np.array_equal(X, X.conj().T)
        res = np.linalg.norm(E.conj().T @ X @ E - A.conj().T @ X @ A + C.conj().T @ C)
        bound = 1e-10 * (1 + np.linalg.norm(X)) * (
            np.linalg.norm(E) ** 2 + np.linalg.norm(A) ** 2 + np.linalg.norm(C) ** 2)
        assert res <= bound


def test_stein_unsolvable():
    # eigenvalues 2 and 1/2 are reciprocal: lambda_i conj(lambda_j) = 1
    with pytest.raises(SteinSingular):
        solve_stein(np.eye(2), np.diag([2.0, 0.5]), np.eye(2))


# -- rank -------------------------------------------------------------------

def test_numerical_rank():
    assert numerical_rank(np.eye(3), 1e-10) == 3
    assert numerical_rank(np.zeros((2, 3)), 1e-10) == 0
    assert numerical_rank(np.array([[1.0, 0], [0, 1e-12]]), 1e-9) == 1


def test_rank_of_compressed_e_block(f16):
    # row compression of E: the top rows [E1 E12] keep the rank of E
    E = f16.sys.E
    U, s, _ = np.linalg.svd(E)
    r = numerical_rank(E)
    top = (U.conj().T @ E)[:r]
    assert numerical_rank(top) == r == 3


# -- symplectic spectrum reciprocity ----------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_symplectic_reciprocity(n, m, seed):
    rng = np.random.default_rng(seed)
    A = rand_matrix(rng, n, n, complex_=True)
    E = np.eye(n) + 0.3 * rand_matrix(rng, n, n, complex_=True)
    B = rand_matrix(rng, n, m, complex_=True)
    Qh = rand_matrix(rng, n, n, complex_=True)
    Rh = rand_matrix(rng, m, m, complex_=True)
    alpha = np.exp(1j * rng.uniform(0, 2 * np.pi))
    sigma = PopovStructure(A, E, B, Qh + Qh.conj().T, rand_matrix(rng, n, m, complex_=True),
                           Rh + Rh.conj().T + 3 * np.eye(m), alpha)
    lam = generalized_spectrum(symplectic_pencil(sigma)).finite
    lam = lam[np.abs(lam) > 1e-6]
    mirrored = 1.0 / lam.conj()
    for mu in mirrored:
        assert np.min(np.abs(lam - mu)) <= 1e-6 * max(1.0, abs(mu))
