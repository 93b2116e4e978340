"""Suboptimal H-infinity output-feedback synthesis for centered plants.

The plant is ``T = [[A - zE | B1 B2], [C1 | 0 D12], [C2 | D21 0]]`` centered
at ``z0``.  Two descriptor Riccati equations (the control structure and the
cross structure built from its solution) yield a controller generator
``C(z)``; every admissible controller is ``K = LFT(C, Q)`` with ``Q``
stable and strictly contractive.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analysis import (
    check_detectable,
    check_stabilizable,
    hinf_norm,
    neg_semidefinite,
)
from .errors import (
    AssumptionViolated,
    InfeasibleError,
    NoStabilizingSolution,
    NumericalError,
    DimensionMismatch,
    HypothesisViolated,
    QNotContractive,
    SignConditionFailed,
)
from .pencil import MatrixPencil, as_matrix, generalized_spectrum, matrix_sqrt, numerical_rank
from .realization import (
    STABILITY_GUARD,
    CenteredRealization,
    PartitionedPlant,
    gamma_scale,
    is_stable,
    lft_lower,
)
from .riccati import PopovStructure, RiccatiSolution, solve_ddtare

__all__ = [
    "HypothesisReport",
    "SynthesisData",
    "ControllerGenerator",
    "check_hypotheses",
    "build_sigma_c",
    "build_sigma_cross",
    "build_sigma_o",
    "solve_central_pair",
    "synthesize",
    "central_controller",
    "normalizing_conditions_hold",
    "normalized_central_controller",
    "parametrize",
    "inner_outer_factors",
    "one_block_generator",
    "two_block_generator",
    "dual_two_block_generator",
    "verify_closed_loop",
    "minimal_gamma",
]

HYP_GRID = 720
HYP_RANK_TOL = 1e-8


@dataclass(frozen=True)
class HypothesisReport:
    h1_stab: bool
    h1_detect: bool
    h2: bool
    h3: bool
    worst_h2_sigma_min: float
    worst_h3_sigma_min: float

    @property
    def all_pass(self) -> bool:
        return self.h1_stab and self.h1_detect and self.h2 and self.h3


@dataclass(frozen=True, eq=False)
class SynthesisData:
    sigma_c: PopovStructure
    X: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    sigma_cross: PopovStructure
    Z: np.ndarray
    C_F: np.ndarray
    B_Z: np.ndarray
    sol_c: RiccatiSolution
    sol_cross: RiccatiSolution

    @property
    def F(self):
        return np.vstack([self.F1, self.F2])


@dataclass(frozen=True, eq=False)
class ControllerGenerator:
    """Generator with inputs ``(y2, aux_in)`` and outputs ``(u2, aux_out)``.

    ``Q`` closes ``aux_out -> aux_in``; with ``Q = 0`` the map ``y2 -> u2``
    is the central controller.
    """

    gen: PartitionedPlant
    data: Optional[SynthesisData] = None

    @property
    def sys(self) -> CenteredRealization:
        return self.gen.sys


# ---------------------------------------------------------------------------
# hypotheses


def _min_sv_rel(M):
    s = np.linalg.svd(M, compute_uv=False)
    return s[-1], (s[-1] / s[0] if s[0] > 0 else 0.0)


def _full_column_rank_on_circle(A, E, Bc, C, D, alpha, points):
    """Worst smallest singular value of the system pencil over the circle.

    The matrix ``[[A - z E, B (alpha - beta z)], [C, D]]`` must have full
    column rank at every grid point.
    """
    beta = np.conj(alpha)
    worst_abs, ok = np.inf, True
    zs = np.exp(2j * np.pi * np.arange(points) / points)
    for z in zs:
        M = np.block([[A - z * E, Bc * (alpha - beta * z)], [C, D]])
        if M.shape[0] < M.shape[1]:
            return False, 0.0
        smin, rel = _min_sv_rel(M)
        worst_abs = min(worst_abs, smin)
        if rel <= HYP_RANK_TOL:
            ok = False
    return ok, float(worst_abs)


def check_hypotheses(plant: PartitionedPlant, grid_points: int = HYP_GRID) -> HypothesisReport:
    """Stabilizability/detectability and the two regularity rank conditions."""
    s = plant.sys
    pencil = s.pencil
    h1s = check_stabilizable(pencil, plant.B2)
    h1d = check_detectable(plant.C2, pencil)
    h2, w2 = _full_column_rank_on_circle(s.A, s.E, plant.B2, plant.C1, plant.D12, s.alpha,
                                         grid_points)
    h3, w3 = _full_column_rank_on_circle(s.A.conj().T, s.E.conj().T, plant.C2.conj().T,
                                         plant.B1.conj().T, plant.D21.conj().T,
                                         np.conj(s.alpha), grid_points)
    h2 = h2 and numerical_rank(plant.D12, HYP_RANK_TOL) == plant.m2
    h3 = h3 and numerical_rank(plant.D21, HYP_RANK_TOL) == plant.p2
    return HypothesisReport(h1s, h1d, h2, h3, w2, w3)


# ---------------------------------------------------------------------------
# Riccati structures


def _require_zero_diagonal(plant):
    scale = max(1.0, np.max(np.abs(plant.sys.D)) if plant.sys.D.size else 1.0)
    if plant.D11.size and np.max(np.abs(plant.D11)) > 1e-12 * scale:
        raise HypothesisViolated("D11 must be zero (loop-shift D11 first)")
    if plant.D22.size and np.max(np.abs(plant.D22)) > 1e-12 * scale:
        raise HypothesisViolated("D22 must be zero (use d22_loop_shift)")


def build_sigma_c(plant: PartitionedPlant) -> PopovStructure:
    """Control structure ``(A - zE, [B1 B2]; C1*C1, [0, C1*D12], diag(-I, D12*D12))``."""
    D12, C1 = plant.D12, plant.C1
    if numerical_rank(D12, HYP_RANK_TOL) < plant.m2:
        raise HypothesisViolated("D12 does not have full column rank")
    n, m1, m2 = plant.n, plant.m1, plant.m2
    L = np.hstack([np.zeros((n, m1)), C1.conj().T @ D12])
    R = np.block([[-np.eye(m1), np.zeros((m1, m2))],
                  [np.zeros((m2, m1)), D12.conj().T @ D12]])
    return PopovStructure(plant.sys.A, plant.sys.E, plant.sys.B, C1.conj().T @ C1, L, R,
                          plant.sys.alpha)


def build_sigma_o(plant: PartitionedPlant) -> PopovStructure:
    """Filtering structure on the conjugate-transposed pencil.

    Conjugate transposition swaps the roles of ``alpha`` and ``beta``, so
    the structure is centered at ``conj(alpha)``.
    """
    B1, D21 = plant.B1, plant.D21
    if numerical_rank(D21, HYP_RANK_TOL) < plant.p2:
        raise HypothesisViolated("D21 does not have full row rank")
    n, p1, p2 = plant.n, plant.p1, plant.p2
    s = plant.sys
    L = np.hstack([np.zeros((n, p1)), B1 @ D21.conj().T])
    R = np.block([[-np.eye(p1), np.zeros((p1, p2))],
                  [np.zeros((p2, p1)), D21 @ D21.conj().T]])
    return PopovStructure(s.A.conj().T, s.E.conj().T, s.C.conj().T, B1 @ B1.conj().T, L, R,
                          np.conj(s.alpha))


def _outer_plant(plant, F1, F2):
    """``T_O``: the plant with the ``u1`` loop closed by ``F1`` and scaled ``u2`` output."""
    s = plant.sys
    Dh = matrix_sqrt(plant.D12.conj().T @ plant.D12, 0.5)
    A, E = s.feedback(plant.B1, F1)
    C = np.vstack([-Dh @ F2, plant.C2 + plant.D21 @ F1])
    D = np.block([[np.zeros((plant.m2, plant.m1)), Dh],
                  [plant.D21, np.zeros((plant.p2, plant.m2))]])
    sys = CenteredRealization(A, E, s.B, C, D, s.alpha, validate=False)
    return PartitionedPlant(sys, plant.m1, plant.m2, plant.m2, plant.p2)


def build_sigma_cross(plant: PartitionedPlant, F1, F2) -> PopovStructure:
    """Cross structure: the filtering structure of ``T_O``.

    Pencil ``A* - zE* + F1* B1* (conj(alpha) - alpha z)``, input
    ``[-(D12*D12)^{1/2} F2; C2 + D21 F1]*``, ``Q = B1 B1*``,
    ``L = [0, B1 D21*]``, ``R = diag(-I_{m2}, D21 D21*)``.
    """
    return build_sigma_o(_outer_plant(plant, F1, F2))


def solve_central_pair(plant: PartitionedPlant) -> SynthesisData:
    """Solve both Riccati equations and assemble the generator ingredients."""
    _require_zero_diagonal(plant)
    sigma_c = build_sigma_c(plant)
    sol_c = solve_ddtare(sigma_c)
    X = sol_c.X
    if not neg_semidefinite(X):
        raise SignConditionFailed(
            f"X is not negative semidefinite (lambda_max = {np.linalg.eigvalsh(X)[-1]:.3e})")
    M = plant.sys.center_matrix
    D12hD12 = plant.D12.conj().T @ plant.D12
    F1 = plant.B1.conj().T @ X @ M
    F2 = -np.linalg.solve(D12hD12, plant.D12.conj().T @ plant.C1 + plant.B2.conj().T @ X @ M)
    sigma_x = build_sigma_cross(plant, F1, F2)
    sol_x = solve_ddtare(sigma_x)
    Z = sol_x.X
    if not neg_semidefinite(Z):
        raise SignConditionFailed(
            f"Z is not negative semidefinite (lambda_max = {np.linalg.eigvalsh(Z)[-1]:.3e})")
    C_F = plant.C2 + plant.D21 @ F1
    B_Z = _b_z(plant, Z, C_F)
    return SynthesisData(sigma_c, X, F1, F2, sigma_x, Z, C_F, B_Z, sol_c, sol_x)


def _b_z(plant, Z, C_F):
    M = plant.sys.center_matrix
    D21 = plant.D21
    return -np.linalg.solve((D21 @ D21.conj().T).T,
                            (plant.B1 @ D21.conj().T + M @ Z @ C_F.conj().T).T).T


# ---------------------------------------------------------------------------
# generators


def _generator(plant_like_alpha, A, E, B_in, C_out, D, m_y, m_aux, p_u, p_aux):
    sys = CenteredRealization(A, E, B_in, C_out, D, plant_like_alpha, validate=False)
    return PartitionedPlant(sys, m_y, m_aux, p_u, p_aux)


def synthesize(plant: PartitionedPlant, data: Optional[SynthesisData] = None) -> ControllerGenerator:
    """Controller generator ``C(z)``.

    Pencil ``A - zE + (B F + B_Z C_F)(alpha - beta z)``, inputs
    ``[B_Z, -B2 (D12*D12)^{-1/2} + M Z F2* (D12*D12)^{1/2}]``, outputs
    ``[-F2; (D21 D21*)^{-1/2} C_F]`` and feedthrough
    ``[[0, (D12*D12)^{-1/2}], [(D21 D21*)^{-1/2}, 0]]`` with
    ``M = alpha E - beta A``.
    """
    if data is None:
        data = solve_central_pair(plant)
    s = plant.sys
    M = s.center_matrix
    D12hD12 = plant.D12.conj().T @ plant.D12
    D21D21h = plant.D21 @ plant.D21.conj().T
    Rh, Rmh = matrix_sqrt(D12hD12, 0.5), matrix_sqrt(D12hD12, -0.5)
    Smh = matrix_sqrt(D21D21h, -0.5)
    A, E = s.feedback(np.eye(plant.n), s.B @ data.F + data.B_Z @ data.C_F)
    B_in = np.hstack([data.B_Z, -plant.B2 @ Rmh + M @ data.Z @ data.F2.conj().T @ Rh])
    C_out = np.vstack([-data.F2, Smh @ data.C_F])
    m2, p2 = plant.m2, plant.p2
    D = np.block([[np.zeros((m2, p2)), Rmh], [Smh, np.zeros((p2, m2))]])
    return ControllerGenerator(_generator(s.alpha, A, E, B_in, C_out, D, p2, m2, m2, p2), data)


def central_controller(gen: ControllerGenerator) -> CenteredRealization:
    """``K0 = LFT(C, 0)``, the ``y2 -> u2`` subsystem of the generator."""
    g = gen.gen
    return g.block(1, 1)


def normalizing_conditions_hold(plant: PartitionedPlant, tol=1e-10) -> bool:
    D12, D21 = plant.D12, plant.D21
    lhs1 = D12.conj().T @ np.hstack([plant.C1, D12])
    rhs1 = np.hstack([np.zeros((plant.m2, plant.n)), np.eye(plant.m2)])
    lhs2 = np.vstack([plant.B1, D21]) @ D21.conj().T
    rhs2 = np.vstack([np.zeros((plant.n, plant.p2)), np.eye(plant.p2)])
    return bool(np.max(np.abs(lhs1 - rhs1), initial=0.0) <= tol
                and np.max(np.abs(lhs2 - rhs2), initial=0.0) <= tol)


def normalized_central_controller(plant: PartitionedPlant, data: SynthesisData) -> CenteredRealization:
    """Closed-form central controller valid under the normalizing conditions."""
    s = plant.sys
    M = s.center_matrix
    X, Z = data.X, data.Z
    B1, B2, C2 = plant.B1, plant.B2, plant.C2
    K = (B1 @ B1.conj().T @ X - B2 @ B2.conj().T @ X) @ M - M @ Z @ C2.conj().T @ C2
    A, E = s.feedback(np.eye(plant.n), K)
    return CenteredRealization(A, E, -M @ Z @ C2.conj().T, B2.conj().T @ X @ M,
                               np.zeros((plant.m2, plant.p2)), s.alpha, validate=False)


def parametrize(gen: ControllerGenerator, Qpar, verify=False) -> CenteredRealization:
    """``K = LFT(C, Q)``; with ``verify=True`` the parameter is checked first."""
    g = gen.gen
    if not isinstance(Qpar, CenteredRealization):
        Qpar = CenteredRealization(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, g.p2)),
                                   np.zeros((g.m2, 0)), as_matrix(Qpar, rows=g.m2, cols=g.p2),
                                   g.sys.alpha)
    if Qpar.shape != (g.m2, g.p2):
        raise DimensionMismatch(f"parameter must be {g.m2}x{g.p2}")
    if verify:
        if not is_stable(Qpar) or hinf_norm(Qpar).upper >= 1.0:
            raise QNotContractive("parameter is not stable and strictly contractive")
    return lft_lower(g, Qpar)


# ---------------------------------------------------------------------------
# factorization and the reduction chain


def inner_outer_factors(plant: PartitionedPlant, data: SynthesisData):
    """``T = T_I (x) T_O`` with ``T_I`` inner."""
    s = plant.sys
    D12hD12 = plant.D12.conj().T @ plant.D12
    Rmh = matrix_sqrt(D12hD12, -0.5)
    m1, m2, p1 = plant.m1, plant.m2, plant.p1
    A, E = s.feedback(plant.B2, data.F2)
    TI = CenteredRealization(
        A, E, np.hstack([plant.B1, plant.B2 @ Rmh]),
        np.vstack([plant.C1 + plant.D12 @ data.F2, -data.F1]),
        np.block([[np.zeros((p1, m1)), plant.D12 @ Rmh],
                  [np.eye(m1), np.zeros((m1, m2))]]),
        s.alpha, validate=False)
    T_I = PartitionedPlant(TI, m1, m2, p1, m1)
    T_O = _outer_plant(plant, data.F1, data.F2)
    return T_I, T_O


def _stable_pencil(A, E):
    return generalized_spectrum(MatrixPencil(A, E)).all_in_open_disk(margin=STABILITY_GUARD)


def one_block_generator(plant: PartitionedPlant) -> ControllerGenerator:
    """Generator for square invertible ``D12``, ``D21`` with stable zeros."""
    _require_zero_diagonal(plant)
    s = plant.sys
    D12, D21 = plant.D12, plant.D21
    if D12.shape[0] != D12.shape[1] or numerical_rank(D12) < D12.shape[0]:
        raise AssumptionViolated("D12 must be square and invertible")
    if D21.shape[0] != D21.shape[1] or numerical_rank(D21) < D21.shape[0]:
        raise AssumptionViolated("D21 must be square and invertible")
    D12i, D21i = np.linalg.inv(D12), np.linalg.inv(D21)
    if not _stable_pencil(*s.feedback(-plant.B2 @ D12i, plant.C1)):
        raise AssumptionViolated("T12 has zeros outside the open unit disk")
    if not _stable_pencil(*s.feedback(-plant.B1 @ D21i, plant.C2)):
        raise AssumptionViolated("T21 has zeros outside the open unit disk")
    A, E = s.feedback(np.eye(plant.n), -(plant.B2 @ D12i @ plant.C1 + plant.B1 @ D21i @ plant.C2))
    B_in = np.hstack([plant.B1 @ D21i, plant.B2 @ D12i])
    C_out = np.vstack([-D12i @ plant.C1, -D21i @ plant.C2])
    m2, p2 = plant.m2, plant.p2
    D = np.block([[np.zeros((m2, p2)), D12i], [D21i, np.zeros((p2, m2))]])
    return ControllerGenerator(_generator(s.alpha, A, E, B_in, C_out, D, p2, m2, m2, p2))


def two_block_generator(plant: PartitionedPlant, X, F2) -> ControllerGenerator:
    """Generator for ``p2 = m1`` (``D21`` square) given the control Riccati solution."""
    _require_zero_diagonal(plant)
    s = plant.sys
    D21 = plant.D21
    if D21.shape[0] != D21.shape[1] or numerical_rank(D21) < D21.shape[0]:
        raise AssumptionViolated("two-block problem needs square invertible D21")
    if numerical_rank(plant.D12, HYP_RANK_TOL) < plant.m2:
        raise AssumptionViolated("D12 must have full column rank")
    D21i = np.linalg.inv(D21)
    if not _stable_pencil(*s.feedback(-plant.B1 @ D21i, plant.C2)):
        raise AssumptionViolated("T21 has zeros outside the open unit disk")
    X = as_matrix(X, rows=plant.n, cols=plant.n)
    F2 = as_matrix(F2, rows=plant.m2, cols=plant.n)
    M = s.center_matrix
    Rmh = matrix_sqrt(plant.D12.conj().T @ plant.D12, -0.5)
    A, E = s.feedback(np.eye(plant.n), plant.B2 @ F2 - plant.B1 @ D21i @ plant.C2)
    B_in = np.hstack([plant.B1 @ D21i, plant.B2 @ Rmh])
    C_out = np.vstack([F2, -D21i @ plant.C2 - plant.B1.conj().T @ X @ M])
    m2, p2 = plant.m2, plant.p2
    D = np.block([[np.zeros((m2, p2)), Rmh], [D21i, np.zeros((p2, m2))]])
    return ControllerGenerator(_generator(s.alpha, A, E, B_in, C_out, D, p2, m2, m2, p2))


def dual_two_block_generator(plant: PartitionedPlant, Y=None) -> ControllerGenerator:
    """Generator for ``p1 = m2`` (``D12`` square) from the filtering Riccati solution."""
    _require_zero_diagonal(plant)
    s = plant.sys
    D12, D21 = plant.D12, plant.D21
    if D12.shape[0] != D12.shape[1] or numerical_rank(D12) < D12.shape[0]:
        raise AssumptionViolated("dual two-block problem needs square invertible D12")
    if numerical_rank(D21, HYP_RANK_TOL) < plant.p2:
        raise AssumptionViolated("D21 must have full row rank")
    D12i = np.linalg.inv(D12)
    if not _stable_pencil(*s.feedback(-plant.B2 @ D12i, plant.C1)):
        raise AssumptionViolated("T12 has zeros outside the open unit disk")
    if Y is None:
        sol = solve_ddtare(build_sigma_o(plant))
        Y = sol.X
        if not neg_semidefinite(Y):
            raise SignConditionFailed("Y is not negative semidefinite")
    Y = as_matrix(Y, rows=plant.n, cols=plant.n)
    M = s.center_matrix
    D21D21h = D21 @ D21.conj().T
    Smh = matrix_sqrt(D21D21h, -0.5)
    H2 = _b_z(plant, Y, plant.C2)
    A, E = s.feedback(np.eye(plant.n), H2 @ plant.C2 - plant.B2 @ D12i @ plant.C1)
    B_in = np.hstack([H2, -plant.B2 @ D12i - M @ Y @ plant.C1.conj().T])
    C_out = np.vstack([D12i @ plant.C1, Smh @ plant.C2])
    m2, p2 = plant.m2, plant.p2
    D = np.block([[np.zeros((m2, p2)), D12i], [Smh, np.zeros((p2, m2))]])
    return ControllerGenerator(_generator(s.alpha, A, E, B_in, C_out, D, p2, m2, m2, p2))


def verify_closed_loop(plant: PartitionedPlant, K, tol=1e-6):
    """Form ``LFT(T, K)``; return ``(stable, NormResult or None, closed_loop)``."""
    G = lft_lower(plant, K)
    if not is_stable(G):
        return False, None, G
    return True, hinf_norm(G, tol=tol), G


def _feasible(plant, gamma):
    try:
        solve_central_pair(gamma_scale(plant, gamma))
    except (InfeasibleError, NumericalError):
        return False
    return True


def minimal_gamma(plant: PartitionedPlant, lower=None, upper=None, resolution=1e-3):
    """Bisection over ``gamma`` on Riccati feasibility.

    Returns the smallest feasible level found, within ``resolution``
    relative to it.  ``upper`` is doubled until feasible.
    """
    upper = 1.0 if upper is None else float(upper)
    steps = 0
    while not _feasible(plant, upper):
        upper *= 2.0
        steps += 1
        if steps > 60:
            raise NoStabilizingSolution("no feasible gamma found")
    if lower is None:
        lower = upper / 2.0
        while lower > 1e-12 and _feasible(plant, lower):
            upper, lower = lower, lower / 2.0
    lower = float(lower)
    while upper - lower > resolution * upper:
        mid = 0.5 * (lower + upper)
        if _feasible(plant, mid):
            upper = mid
        else:
            lower = mid
    return upper
