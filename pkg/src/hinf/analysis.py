"""System-level tests: stabilizability, innerness, bounded-real lemma, H-infinity norm."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    InfeasibleError,
    InputError,
    NoConvergence,
    NumericalError,
    UnstableOpenLoop,
    UnstableSystem,
)
from .pencil import (
    MatrixPencil,
    as_matrix,
    generalized_spectrum,
    matrix_sqrt,
    numerical_rank,
    solve_stein,
)
from .realization import STABILITY_GUARD, CenteredRealization, evaluate_many, is_stable
from .riccati import PopovStructure, popov_on_circle, solve_ddtare

__all__ = [
    "InnerReport",
    "BrlCertificate",
    "NormResult",
    "check_stabilizable",
    "check_detectable",
    "is_inner",
    "bounded_real",
    "brl_structure",
    "hinf_norm",
    "grid_norm",
    "sigma_grid",
    "popov_negative",
    "neg_semidefinite",
]

UNIT_TOL = 1e-8
SIGN_TOL = 1e-8
ZERO_FLOOR = 1e3 * np.finfo(float).eps
HINF_GRID = 256
HINF_TOL = 1e-6
MAX_BISECTIONS = 128


@dataclass(frozen=True, eq=False)
class InnerReport:
    is_unitary: bool
    is_inner: bool
    X: Optional[np.ndarray]
    residuals: tuple
    x_definite: bool = False
    minimality_asserted: bool = False
    note: str = ""


@dataclass(frozen=True, eq=False)
class BrlCertificate:
    """Witness ``(X, V, W)`` for the bounded-real lemma.

    The three identities

        D*D - I = -V*V,
        (alpha E - beta A)* X B + C* D = -W* V,
        E* X E - A* X A + C* C = -W* W

    hold, ``X <= 0`` and ``F = -V^{-1} W`` is stabilizing.
    """

    X: np.ndarray
    V: np.ndarray
    W: np.ndarray
    F: np.ndarray

    def residuals(self, sys: CenteredRealization):
        A, E, B, C, D = sys.A, sys.E, sys.B, sys.C, sys.D
        X, V, W = self.X, self.V, self.W
        Mh = sys.center_matrix.conj().T
        r1 = np.linalg.norm(D.conj().T @ D - np.eye(sys.m) + V.conj().T @ V)
        r2 = np.linalg.norm(Mh @ X @ B + C.conj().T @ D + W.conj().T @ V)
        r3 = np.linalg.norm(E.conj().T @ X @ E - A.conj().T @ X @ A + C.conj().T @ C
                            + W.conj().T @ W)
        scale = 1.0 + np.linalg.norm(X)
        return r1, r2 / scale, r3 / scale


@dataclass(frozen=True)
class NormResult:
    value: float
    lower: float
    upper: float
    iterations: int
    history: tuple = field(default=(), repr=False)


def neg_semidefinite(X, tol=SIGN_TOL) -> bool:
    """``lambda_max(X) <= tol * ||X||_2``, with a rounding-level floor for ``X ~ 0``."""
    if X.size == 0:
        return True
    w = np.linalg.eigvalsh(0.5 * (X + X.conj().T))
    return bool(w[-1] <= tol * np.max(np.abs(w)) + ZERO_FLOOR)


def check_stabilizable(pencil: MatrixPencil, B, tol=1e-9) -> bool:
    """Rank of ``[A - zE, B]`` at the finite eigenvalues outside the open disk, and of ``[E, B]``."""
    n = pencil.n
    B = as_matrix(B, rows=n, name="B") if n else as_matrix(B)
    if n == 0:
        return True
    spec = generalized_spectrum(pencil)
    for lam in spec.finite:
        if abs(lam) >= 1.0:
            if numerical_rank(np.hstack([pencil.at(lam), B]), tol) < n:
                return False
    return numerical_rank(np.hstack([pencil.E, B]), tol) == n


def check_detectable(C, pencil: MatrixPencil, tol=1e-9) -> bool:
    dual = MatrixPencil(pencil.A.conj().T, pencil.E.conj().T)
    C = as_matrix(C, cols=pencil.n, name="C") if pencil.n else as_matrix(C)
    return check_stabilizable(dual, C.conj().T, tol)


def is_inner(sys: CenteredRealization, tol=UNIT_TOL, minimal=False) -> InnerReport:
    """Unitary/inner test through the Stein characterization.

    ``D*D = I``, the Stein solution ``X`` of ``E*XE - A*XA + C*C = 0`` and
    ``D*C + B*X(alpha E - beta A) = 0`` give unitarity; innerness adds a
    stable pencil and ``X <= 0``.  Definiteness of ``X`` is only expected
    for minimal realizations and is reported separately.
    """
    m = sys.m
    r_d = float(np.linalg.norm(sys.D.conj().T @ sys.D - np.eye(m)))
    if sys.n == 0:
        ok = r_d <= tol
        return InnerReport(ok, ok, np.zeros((0, 0)), (r_d, 0.0), True, minimal)
    X = solve_stein(sys.E, sys.A, sys.C)
    xs = 1.0 + np.linalg.norm(X)
    r1 = np.linalg.norm(sys.E.conj().T @ X @ sys.E - sys.A.conj().T @ X @ sys.A
                        + sys.C.conj().T @ sys.C) / xs
    r2 = np.linalg.norm(sys.D.conj().T @ sys.C + sys.B.conj().T @ X @ sys.center_matrix) / xs
    unitary = r_d <= tol and r1 <= tol and r2 <= tol
    w = np.linalg.eigvalsh(X)
    definite = bool(w[-1] < -1e-10 * np.max(np.abs(w))) if np.any(w) else False
    inner = unitary and is_stable(sys) and neg_semidefinite(X)
    return InnerReport(unitary, inner, X, (max(r_d, float(r1)), float(r2)), definite, minimal)


def brl_structure(sys: CenteredRealization) -> PopovStructure:
    C, D = sys.C, sys.D
    return PopovStructure(sys.A, sys.E, sys.B, C.conj().T @ C, C.conj().T @ D,
                          D.conj().T @ D - np.eye(sys.m), sys.alpha)


def bounded_real(sys: CenteredRealization):
    """Bounded-real test: stable with ``||G||_inf < 1``.

    Returns ``(flag, certificate_or_None, diagnostic)``.
    """
    R = sys.D.conj().T @ sys.D - np.eye(sys.m)
    if sys.m and np.linalg.eigvalsh(R)[-1] >= 0:
        return False, None, "D*D - I is not negative definite"
    if sys.n == 0:
        V = matrix_sqrt(-R)
        return True, BrlCertificate(np.zeros((0, 0)), V, np.zeros((sys.m, 0)),
                                    np.zeros((sys.m, 0))), ""
    if not is_stable(sys):
        return False, None, "pencil A - zE is not stable"
    try:
        sol = solve_ddtare(brl_structure(sys))
    except (InfeasibleError, NumericalError, InputError) as exc:
        return False, None, str(exc)
    if not neg_semidefinite(sol.X):
        return False, None, "stabilizing solution is not negative semidefinite"
    V = matrix_sqrt(-R)
    return True, BrlCertificate(sol.X, V, -V @ sol.F, sol.F), ""


def sigma_grid(sys: CenteredRealization, points: int):
    """Singular values (descending) of ``G(e^{j theta})`` on ``theta_k = 2 pi k / N``."""
    theta = 2 * np.pi * np.arange(points) / points
    vals = evaluate_many(sys, np.exp(1j * theta))
    return theta, np.linalg.svd(vals, compute_uv=False)


def grid_norm(sys: CenteredRealization, points: int = HINF_GRID) -> float:
    if sys.p == 0 or sys.m == 0:
        return 0.0
    return float(np.max(sigma_grid(sys, points)[1][:, 0]))


def hinf_norm(sys: CenteredRealization, tol=HINF_TOL, grid_points=HINF_GRID) -> NormResult:
    """H-infinity norm by bisection on the bounded-real lemma.

    The lower bound starts at the grid maximum, the upper bound is the
    smallest BRL-certified multiple of two above it.
    """
    if sys.n and not is_stable(sys):
        raise UnstableSystem("H-infinity norm requires a stable system")
    if sys.m == 0 or sys.p == 0:
        return NormResult(0.0, 0.0, 0.0, 0)
    if sys.n == 0:
        s = float(np.linalg.svd(sys.D, compute_uv=False)[0])
        return NormResult(s, s, s, 0)
    lower = grid_norm(sys, grid_points)
    if lower == 0.0:
        return NormResult(0.0, 0.0, 0.0, 0)

    def certified(g):
        scaled = sys.replace(C=sys.C / g, D=sys.D / g, validate=False)
        return bounded_real(scaled)[0]

    upper = 2.0 * lower
    steps = 0
    while not certified(upper):
        upper *= 2.0
        steps += 1
        if steps > 64:
            raise NoConvergence("could not certify an upper bound")
    history = [(lower, upper)]
    it = 0
    while upper - lower > tol * lower:
        if it >= MAX_BISECTIONS:
            raise NoConvergence("bisection did not reach the requested gap")
        mid = 0.5 * (lower + upper)
        if certified(mid):
            upper = mid
        else:
            lower = mid
        it += 1
        history.append((lower, upper))
    return NormResult(0.5 * (lower + upper), lower, upper, it, tuple(history))


def popov_negative(sigma: PopovStructure, grid_points: int = 512, tol=1e-8) -> bool:
    """``lambda_max(Pi(e^{j theta})) < -tol`` on a uniform grid."""
    if sigma.n and not generalized_spectrum(sigma.pencil).all_in_open_disk(margin=STABILITY_GUARD):
        raise UnstableOpenLoop("Popov negativity test requires a stable pencil")
    return popov_max_eig(sigma, grid_points) < -tol


def popov_max_eig(sigma: PopovStructure, grid_points: int = 512) -> float:
    vals = popov_on_circle(sigma, grid_points)
    return float(np.max(np.linalg.eigvalsh(vals)[:, -1]))
