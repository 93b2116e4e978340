"""Dense matrix-pencil numerics.

Generalized spectra, ordered stable deflating subspaces, generalized Stein
solves and SVD-based rank decisions for pencils ``A - z E``.  The QZ and
reordering kernels are LAPACK's (through :mod:`scipy.linalg`); everything
on top of them is plain numpy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, ReorderingFailure, SingularPencil, SteinSingular

__all__ = [
    "EIG_INF_TOL",
    "ON_CIRCLE_TOL",
    "RANK_TOL",
    "REGULARITY_SEED",
    "MatrixPencil",
    "Spectrum",
    "DeflationResult",
    "as_matrix",
    "hermitian_part",
    "generalized_spectrum",
    "ordered_stable_deflation",
    "solve_stein",
    "solve_stein_general",
    "stein_residual",
    "numerical_rank",
    "is_regular",
    "matrix_sqrt",
]

EIG_INF_TOL = 1e-12
ON_CIRCLE_TOL = 1e-8
RANK_TOL = 1e-9
REGULARITY_SEED = 0x5EED
# relative drift allowed between the QZ factors and the pencil after reordering
_REORDER_TOL = 1e-8


def as_matrix(M, rows=None, cols=None, name="matrix"):
    """Return ``M`` as a 2-D complex array, checking the shape if asked.

    Scalars become 1x1 matrices.  ``rows``/``cols`` may be given to pin the
    shape of empty inputs such as a ``0 x m`` input matrix.
    """
    a = np.asarray(M, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        if a.size == 0 and rows is not None and cols is not None:
            a = a.reshape(rows, cols)
        else:
            a = a.reshape(1, -1) if rows in (None, 1) else a.reshape(-1, 1)
    elif a.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got ndim={a.ndim}")
    if a.size == 0 and rows is not None and cols is not None:
        a = a.reshape(rows, cols)
    if rows is not None and a.shape[0] != rows:
        raise DimensionMismatch(f"{name} has {a.shape[0]} rows, expected {rows}")
    if cols is not None and a.shape[1] != cols:
        raise DimensionMismatch(f"{name} has {a.shape[1]} columns, expected {cols}")
    return a


def hermitian_part(M):
    return 0.5 * (M + M.conj().T)


@dataclass(frozen=True, eq=False)
class MatrixPencil:
    """Square pencil ``A - z E``."""

    A: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, name="A")
        E = as_matrix(self.E, rows=A.shape[0], cols=A.shape[1], name="E")
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"pencil must be square, got {A.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "E", E)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def at(self, z):
        return self.A - z * self.E


@dataclass(frozen=True, eq=False)
class Spectrum:
    finite: np.ndarray
    infinite_count: int
    on_circle_tol: float = ON_CIRCLE_TOL

    @property
    def n(self) -> int:
        return len(self.finite) + self.infinite_count

    def all_in_open_disk(self, margin=0.0) -> bool:
        """True when every eigenvalue is finite with modulus below ``1 - margin``."""
        return self.infinite_count == 0 and bool(np.all(np.abs(self.finite) < 1.0 - margin))

    def touches_circle(self) -> bool:
        return bool(np.any(np.abs(np.abs(self.finite) - 1.0) <= self.on_circle_tol))


@dataclass(frozen=True, eq=False)
class DeflationResult:
    """Orthonormal right deflating subspace for the eigenvalues inside the unit disk.

    ``A @ basis = left @ A_hat`` and ``E @ basis = left @ E_hat`` hold up
    to roundoff, with ``A_hat``, ``E_hat`` upper triangular.
    """

    stable_count: int
    basis: np.ndarray
    left: np.ndarray
    A_hat: np.ndarray
    E_hat: np.ndarray
    circle_violation: bool
    spectrum: Spectrum


def _sample_points(n, seed):
    rng = np.random.default_rng(REGULARITY_SEED if seed is None else seed)
    return np.exp(2j * np.pi * rng.random(n + 1))


def is_regular(pencil: MatrixPencil, seed=None) -> bool:
    """Probabilistic regularity test.

    A regular ``n x n`` pencil is singular at no more than ``n`` points, so
    among ``n + 1`` random points on the unit circle at least one gives a
    nonsingular ``A - z E``.  Singular pencils are singular everywhere.
    """
    n = pencil.n
    if n == 0:
        return True
    scale = np.linalg.norm(pencil.A, 2) + np.linalg.norm(pencil.E, 2)
    if scale == 0.0:
        return False
    tol = 1e2 * n * np.finfo(float).eps
    for z in _sample_points(n, seed):
        smin = np.linalg.svd(pencil.at(z), compute_uv=False)[-1]
        if smin > tol * scale:
            return True
    return False


def _classify(alpha, beta, tol=EIG_INF_TOL):
    """Split QZ diagonal pairs into finite eigenvalues and an infinite mask."""
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    infinite = np.abs(beta) <= tol * (np.abs(alpha) + np.abs(beta))
    lam = np.full(alpha.shape, np.inf, dtype=complex)
    lam[~infinite] = alpha[~infinite] / beta[~infinite]
    return lam, infinite


def _complex_qz(A, E):
    AA, BB, Q, Z = sla.qz(A, E, output="complex")
    return AA, BB, Q, Z


def generalized_spectrum(pencil: MatrixPencil, eig_inf_tol=EIG_INF_TOL,
                         on_circle_tol=ON_CIRCLE_TOL, seed=None) -> Spectrum:
    """Finite generalized eigenvalues and the number of infinite ones."""
    if not is_regular(pencil, seed=seed):
        raise SingularPencil("pencil is singular (det(A - zE) vanishes identically)")
    if pencil.n == 0:
        return Spectrum(np.zeros(0, dtype=complex), 0, on_circle_tol)
    AA, BB, _, _ = _complex_qz(pencil.A, pencil.E)
    lam, infinite = _classify(np.diag(AA), np.diag(BB), eig_inf_tol)
    return Spectrum(lam[~infinite], int(infinite.sum()), on_circle_tol)


def ordered_stable_deflation(pencil: MatrixPencil, on_circle_tol=ON_CIRCLE_TOL,
                             eig_inf_tol=EIG_INF_TOL, check_regular=True) -> DeflationResult:
    """Reorder the QZ form so the eigenvalues inside the unit disk come first."""
    if check_regular and not is_regular(pencil):
        raise SingularPencil("pencil is singular (det(A - zE) vanishes identically)")
    n = pencil.n
    if n == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return DeflationResult(0, empty, empty, empty, empty, False,
                               Spectrum(np.zeros(0, dtype=complex), 0, on_circle_tol))
    A, E = pencil.A, pencil.E

    def inside(a, b):
        lam, inf = _classify(a, b, eig_inf_tol)
        return (~inf) & (np.abs(lam) < 1.0)

    try:
        AA, BB, _, _, Q, Z = sla.ordqz(A, E, sort=inside, output="complex")
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise ReorderingFailure(f"eigenvalue reordering failed: {exc}") from exc

    a, b = np.diag(AA), np.diag(BB)
    lam, infinite = _classify(a, b, eig_inf_tol)
    mask = (~infinite) & (np.abs(lam) < 1.0)
    k = int(mask.sum())
    spec = Spectrum(lam[~infinite], int(infinite.sum()), on_circle_tol)
    # with eigenvalues on the circle the split is ill-defined; report it instead
    if not spec.touches_circle() and (not np.all(mask[:k]) or np.any(mask[k:])):
        raise ReorderingFailure("reordered QZ form does not lead with the stable eigenvalues")

    scale = np.linalg.norm(A, 1) + np.linalg.norm(E, 1)
    drift = max(np.linalg.norm(Q @ AA @ Z.conj().T - A, 1),
                np.linalg.norm(Q @ BB @ Z.conj().T - E, 1))
    if drift > _REORDER_TOL * max(scale, 1.0):
        raise ReorderingFailure(f"reordered QZ factors drift by {drift:.2e}")

    return DeflationResult(
        stable_count=k,
        basis=Z[:, :k],
        left=Q[:, :k],
        A_hat=AA[:k, :k],
        E_hat=BB[:k, :k],
        circle_violation=spec.touches_circle(),
        spectrum=spec,
    )


def stein_residual(E, A, W, X):
    """Frobenius norm of ``E* X E - A* X A + W``."""
    return np.linalg.norm(E.conj().T @ X @ E - A.conj().T @ X @ A + W, "fro")


def _check_stein_solvable(E, A, tol=1e-12):
    # E* X E - A* X A is singular iff conj(b_i) b_j == conj(a_i) a_j for a QZ pair
    AA, BB, _, _ = _complex_qz(A, E)
    a, b = np.diag(AA), np.diag(BB)
    gap = np.abs(np.outer(b.conj(), b) - np.outer(a.conj(), a))
    size = np.outer(np.abs(a) + np.abs(b), np.abs(a) + np.abs(b))
    if np.any(gap <= tol * size):
        raise SteinSingular("Stein operator is singular: eigenvalues l_i, l_j with l_i conj(l_j) = 1")


def _stein_kron(E, A, W):
    n = E.shape[0]
    # column-major vec: vec(M X N) = (N^T kron M) vec(X)
    K = np.kron(E.T, E.conj().T) - np.kron(A.T, A.conj().T)
    x = np.linalg.solve(K, -W.reshape(-1, order="F"))
    return x.reshape(n, n, order="F")


def _stein_schur(E, A, W):
    """Column recursion on the triangular QZ form."""
    n = E.shape[0]
    S, T, Q, Z = _complex_qz(A, E)
    # E* X E - A* X A = Z (T* Y T - S* Y S) Z*, with Y = Q* X Q
    Wt = -(Z.conj().T @ W @ Z)
    Sh, Th = S.conj().T, T.conj().T
    Y = np.zeros((n, n), dtype=complex)
    ThY = np.zeros((n, n), dtype=complex)
    ShY = np.zeros((n, n), dtype=complex)
    for j in range(n):
        rhs = Wt[:, j] - ThY[:, :j] @ T[:j, j] + ShY[:, :j] @ S[:j, j]
        M = T[j, j] * Th - S[j, j] * Sh
        Y[:, j] = sla.solve_triangular(M, rhs, lower=True)
        ThY[:, j] = Th @ Y[:, j]
        ShY[:, j] = Sh @ Y[:, j]
    return Q @ Y @ Q.conj().T


def solve_stein_general(E, A, W, method="auto"):
    """Solve ``E* X E - A* X A + W = 0`` for Hermitian ``W``.

    ``method="kron"`` is the dense vectorized reference path, ``"schur"``
    the triangular back-substitution.  ``"auto"`` picks kron for n <= 12.
    """
    E = as_matrix(E, name="E")
    A = as_matrix(A, rows=E.shape[0], cols=E.shape[1], name="A")
    W = as_matrix(W, rows=E.shape[0], cols=E.shape[1], name="W")
    n = E.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    if not is_regular(MatrixPencil(A, E)):
        raise SingularPencil("Stein pencil is singular")
    _check_stein_solvable(E, A)
    if method == "auto":
        method = "kron" if n <= 12 else "schur"
    if method == "kron":
        X = _stein_kron(E, A, W)
    elif method == "schur":
        X = _stein_schur(E, A, W)
    else:
        raise ValueError(f"unknown method {method!r}")
    return hermitian_part(X)


def solve_stein(E, A, C, method="auto"):
    """Hermitian solution of ``E* X E - A* X A + C* C = 0``.

    Examples
    --------
    >>> solve_stein([[1.0]], [[0.5]], [[1.0]]).real
    array([[-1.33333333]])
    """
    C = as_matrix(C, name="C")
    return solve_stein_general(E, A, C.conj().T @ C, method=method)


def numerical_rank(M, tol=RANK_TOL) -> int:
    """Number of singular values above ``tol * sigma_max``."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def matrix_sqrt(M, power=0.5, floor=1e-12):
    """``M**power`` for Hermitian positive definite ``M`` via eigendecomposition."""
    M = hermitian_part(as_matrix(M))
    if M.size == 0:
        return M.copy()
    w, U = np.linalg.eigh(M)
    w = np.maximum(w, floor * max(np.max(np.abs(w)), 1.0))
    return (U * w**power) @ U.conj().T
