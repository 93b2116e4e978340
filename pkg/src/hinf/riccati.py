"""Popov structures and the descriptor discrete-time algebraic Riccati equation.

For ``Sigma = (A - zE, B; Q, L, R)`` centered at ``(alpha, beta)`` the
equation is

    E* X E - A* X A + Q - (M* X B + L) R^{-1} (L* + B* X M) = 0,
    M = alpha E - beta A,

and a solution is stabilizing when ``A - zE + B F (alpha - beta z)`` has all
its eigenvalues in the open unit disk, ``F = -R^{-1}(B* X M + L*)``.

The solver deflates the descriptor symplectic pencil.  Its stable right
deflating subspace is spanned by ``[I; X M; F]`` (direct substitution into
the pencil shows the closed-loop pencil is the restriction), so ``X`` is
recovered from ``X (M V1) = V2`` and ``F`` from ``V3 V1^{-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InputError,
    NumericalError,
    NoStabilizingSolution,
    UnstableOpenLoop,
)
from .pencil import (
    MatrixPencil,
    as_matrix,
    generalized_spectrum,
    hermitian_part,
    ordered_stable_deflation,
    solve_stein_general,
)
from .realization import CenteredRealization, STABILITY_GUARD, evaluate_many

__all__ = [
    "HERMITIAN_TOL",
    "RESIDUAL_TOL",
    "PopovStructure",
    "RiccatiSolution",
    "SpectralFactor",
    "popov_function",
    "symplectic_pencil",
    "solve_ddtare",
    "riccati_residual",
    "riccati_feedback",
    "spectral_factor",
]

HERMITIAN_TOL = 1e-10
RESIDUAL_TOL = 1e-8
_NEWTON_STEPS = 20
_DAMPING_HALVINGS = 4


@dataclass(frozen=True, eq=False)
class PopovStructure:
    """``Sigma = (A - zE, B; Q, L, R)`` with ``B, L`` of size ``n x m``."""

    A: np.ndarray
    E: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    L: np.ndarray
    R: np.ndarray
    alpha: complex = 1.0

    def __post_init__(self):
        R = as_matrix(self.R, name="R")
        m = R.shape[0]
        A = as_matrix(self.A, name="A")
        if A.size == 0:
            A = A.reshape(0, 0)
        n = A.shape[0]
        E = as_matrix(self.E, rows=n, cols=n, name="E")
        B = as_matrix(self.B, rows=n, cols=m, name="B")
        Q = as_matrix(self.Q, rows=n, cols=n, name="Q")
        L = as_matrix(self.L, rows=n, cols=m, name="L")
        if R.shape != (m, m):
            raise DimensionMismatch(f"R must be square, got {R.shape}")
        for name, M in (("Q", Q), ("R", R)):
            if M.size and np.max(np.abs(M - M.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(M))):
                raise InputError(f"{name} is not Hermitian")
        s = np.linalg.svd(R, compute_uv=False) if m else np.ones(1)
        if m and s[-1] <= 1e3 * np.finfo(float).eps * s[0]:
            raise InputError("R is not invertible")
        alpha = complex(self.alpha)
        if abs(abs(alpha) - 1.0) > 1e-12:
            raise InputError("|alpha| must be 1")
        for name, M in (("A", A), ("E", E), ("B", B), ("Q", hermitian_part(Q)), ("L", L),
                        ("R", hermitian_part(R))):
            object.__setattr__(self, name, M)
        object.__setattr__(self, "alpha", alpha)

    @property
    def beta(self) -> complex:
        return self.alpha.conjugate()

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[0]

    @property
    def center_matrix(self):
        return self.alpha * self.E - self.beta * self.A

    @property
    def pencil(self) -> MatrixPencil:
        return MatrixPencil(self.A, self.E)


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    X: np.ndarray
    F: np.ndarray
    residual: float
    closed_loop: MatrixPencil
    newton_steps: int = 0


@dataclass(frozen=True, eq=False)
class SpectralFactor:
    S: CenteredRealization
    R: np.ndarray


def popov_function(sigma: PopovStructure) -> CenteredRealization:
    """Order-``2n`` centered realization of the Popov function."""
    n, a, b = sigma.n, sigma.alpha, sigma.beta
    Z = np.zeros((n, n))
    A = np.block([[sigma.A, Z], [a * sigma.Q, sigma.E.conj().T]])
    E = np.block([[sigma.E, Z], [b * sigma.Q, sigma.A.conj().T]])
    return CenteredRealization(A, E, np.vstack([sigma.B, sigma.L]),
                               np.hstack([sigma.L.conj().T, sigma.B.conj().T]), sigma.R, a)


def symplectic_pencil(sigma: PopovStructure) -> MatrixPencil:
    """The system pencil ``M - z N`` of the Popov function realization."""
    n, m, a, b = sigma.n, sigma.m, sigma.alpha, sigma.beta
    A, E, B, Q, L, R = sigma.A, sigma.E, sigma.B, sigma.Q, sigma.L, sigma.R
    Znn, Zmn, Zmm = np.zeros((n, n)), np.zeros((m, n)), np.zeros((m, m))
    M = np.block([[A, Znn, a * B],
                  [a * Q, E.conj().T, a * L],
                  [L.conj().T, B.conj().T, R]])
    N = np.block([[E, Znn, b * B],
                  [b * Q, A.conj().T, b * L],
                  [Zmn, Zmn, Zmm]])
    return MatrixPencil(M, N)


def riccati_feedback(sigma: PopovStructure, X) -> np.ndarray:
    """``F = -R^{-1}(B* X (alpha E - beta A) + L*)``."""
    G = sigma.B.conj().T @ X @ sigma.center_matrix + sigma.L.conj().T
    return -np.linalg.solve(sigma.R, G)


def _riccati_map(sigma: PopovStructure, X):
    A, E = sigma.A, sigma.E
    G = sigma.L.conj().T + sigma.B.conj().T @ X @ sigma.center_matrix
    return (E.conj().T @ X @ E - A.conj().T @ X @ A + sigma.Q
            - G.conj().T @ np.linalg.solve(sigma.R, G))


def riccati_residual(sigma: PopovStructure, X) -> float:
    """``||DDTARE(X)||_F / (1 + ||X||_F)``."""
    X = as_matrix(X, rows=sigma.n, cols=sigma.n, name="X") if sigma.n else np.zeros((0, 0))
    if sigma.n == 0:
        return 0.0
    return float(np.linalg.norm(_riccati_map(sigma, X), "fro") / (1.0 + np.linalg.norm(X, "fro")))


def _closed_loop(sigma, F) -> MatrixPencil:
    K = sigma.B @ F
    return MatrixPencil(sigma.A + sigma.alpha * K, sigma.E + sigma.beta * K)


def _is_stabilizing(sigma, F) -> bool:
    if sigma.n == 0:
        return True
    try:
        return generalized_spectrum(_closed_loop(sigma, F)).all_in_open_disk(margin=STABILITY_GUARD)
    except InputError:
        return False


def _equilibrate(M, N):
    """Power-of-two row/column scaling of ``|M| + |N|`` (a few sweeps)."""
    size = M.shape[0]
    dl = np.ones(size)
    dr = np.ones(size)
    W = np.abs(M) + np.abs(N)
    for _ in range(5):
        rows = np.linalg.norm(W * dl[:, None] * dr[None, :], axis=1)
        rows[rows == 0] = 1.0
        dl *= 2.0 ** np.round(-np.log2(rows) / 2)
        cols = np.linalg.norm(W * dl[:, None] * dr[None, :], axis=0)
        cols[cols == 0] = 1.0
        dr *= 2.0 ** np.round(-np.log2(cols) / 2)
    return dl, dr


def _newton(sigma, X, max_steps=_NEWTON_STEPS):
    """Newton refinement; each step solves a Stein equation in the closed loop."""
    res = riccati_residual(sigma, X)
    steps = 0
    for steps in range(1, max_steps + 1):
        if res <= 0.1 * RESIDUAL_TOL:
            return X, res, steps - 1
        F = riccati_feedback(sigma, X)
        cl = _closed_loop(sigma, F)
        try:
            dX = solve_stein_general(cl.E, cl.A, _riccati_map(sigma, X))
        except (NumericalError, InputError):
            break
        t = 1.0
        for _ in range(_DAMPING_HALVINGS + 1):
            cand = hermitian_part(X + t * dX)
            cres = riccati_residual(sigma, cand)
            if cres < res:
                break
            t *= 0.5
        else:
            break
        X, res = cand, cres
    return X, res, steps


def solve_ddtare(sigma: PopovStructure, equilibrate=True) -> RiccatiSolution:
    """Stabilizing Hermitian solution of the descriptor DTARE.

    Raises
    ------
    NoStabilizingSolution
        When the symplectic pencil has eigenvalues on the unit circle, the
        stable subspace has the wrong dimension, the coupling block is
        singular, or the candidate fails the residual/stability check even
        after Newton refinement.
    """
    n = sigma.n
    if n == 0:
        F = np.zeros((sigma.m, 0), dtype=complex)
        return RiccatiSolution(np.zeros((0, 0), dtype=complex), F, 0.0,
                               MatrixPencil(np.zeros((0, 0)), np.zeros((0, 0))))
    pencil = symplectic_pencil(sigma)
    if equilibrate:
        dl, dr = _equilibrate(pencil.A, pencil.E)
    else:
        dl = dr = np.ones(pencil.n)
    scaled = MatrixPencil(dl[:, None] * pencil.A * dr[None, :],
                          dl[:, None] * pencil.E * dr[None, :])
    defl = ordered_stable_deflation(scaled)
    if defl.circle_violation:
        raise NoStabilizingSolution("symplectic pencil has eigenvalues on the unit circle")
    if defl.stable_count != n:
        raise NoStabilizingSolution(
            f"stable deflating subspace has dimension {defl.stable_count}, expected {n}")
    V = dr[:, None] * defl.basis
    V1, V2, V3 = V[:n], V[n:2 * n], V[2 * n:]
    P = sigma.center_matrix @ V1
    s = np.linalg.svd(P, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise NoStabilizingSolution("coupling block of the deflating subspace is singular")
    # X P = V2  <=>  P^T X^T = V2^T
    X = np.linalg.lstsq(P.T, V2.T, rcond=None)[0].T
    X = hermitian_part(X)
    res = riccati_residual(sigma, X)
    steps = 0
    if res > RESIDUAL_TOL or not _is_stabilizing(sigma, riccati_feedback(sigma, X)):
        if not _is_stabilizing(sigma, riccati_feedback(sigma, X)):
            # the subspace feedback is the better Newton start when X P = V2 is inexact
            F_sub = np.linalg.solve(V1.T, V3.T).T
            if not _is_stabilizing(sigma, F_sub):
                raise NoStabilizingSolution("deflating subspace does not yield a stabilizing feedback")
        X, res, steps = _newton(sigma, X)
    F = riccati_feedback(sigma, X)
    if res > RESIDUAL_TOL:
        raise NoStabilizingSolution(f"Riccati residual {res:.2e} exceeds {RESIDUAL_TOL:.0e}")
    if not _is_stabilizing(sigma, F):
        raise NoStabilizingSolution("candidate solution is not stabilizing")
    return RiccatiSolution(X, F, res, _closed_loop(sigma, F), steps)


def spectral_factor(sigma: PopovStructure, sol: RiccatiSolution) -> SpectralFactor:
    """``S = (A - zE, B; -F, I)`` with ``Pi = S# R S``."""
    if not generalized_spectrum(sigma.pencil).all_in_open_disk(margin=STABILITY_GUARD):
        raise UnstableOpenLoop("spectral factor requires a stable pencil A - zE")
    S = CenteredRealization(sigma.A, sigma.E, sigma.B, -sol.F, np.eye(sigma.m), sigma.alpha)
    return SpectralFactor(S, sigma.R.copy())


def unit_circle(points: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(points) / points)


def popov_on_circle(sigma: PopovStructure, points: int) -> np.ndarray:
    """Stack of ``Pi(e^{j theta_k})`` on a uniform grid (Hermitian-projected)."""
    vals = evaluate_many(popov_function(sigma), unit_circle(points))
    return 0.5 * (vals + np.conj(np.swapaxes(vals, -1, -2)))
