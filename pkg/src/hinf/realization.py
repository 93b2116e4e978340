"""Centered and descriptor realizations and their interconnections.

A centered realization represents

    G(z) = D + C (z E - A)^{-1} B (alpha - beta z),   beta = conj(alpha),

anchored at ``z0 = alpha / beta = alpha**2`` on the unit circle, where
``G(z0) = D``.  Improper and polynomial transfer matrices are admitted
through a singular ``E``.

All interconnections (LFT, Redheffer star product, loop shifts) reduce to
closing a static feedback ``v = S y`` around a block-diagonal aggregate;
see :func:`close_static_loop`.  Orders add; no minimality reduction is
attempted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    CenterIsPole,
    CenterMismatch,
    DeflationRankFailure,
    DimensionMismatch,
    EvalAtPole,
    IllPosed,
    InputError,
    SingularPencil,
)
from .pencil import (
    MatrixPencil,
    Spectrum,
    as_matrix,
    generalized_spectrum,
    is_regular,
    numerical_rank,
)

__all__ = [
    "POLE_CLEARANCE_TOL",
    "STABILITY_GUARD",
    "EVAL_TOL",
    "CenteredRealization",
    "DescriptorRealization",
    "PartitionedPlant",
    "static_gain",
    "from_descriptor",
    "evaluate",
    "evaluate_many",
    "evaluate_sharp",
    "poles",
    "is_stable",
    "close_static_loop",
    "append",
    "lft_lower",
    "star_product",
    "d22_loop_shift",
    "gamma_scale",
    "siso_polynomials",
]

POLE_CLEARANCE_TOL = 1e-8
STABILITY_GUARD = 1e-10
EVAL_TOL = 1e-13
_UNIT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CenteredRealization:
    """Quintuple ``(A - zE, B, C, D)`` centered at ``z0 = alpha**2``.

    Construction checks shapes, ``|alpha| = 1`` and properness at the
    center (``alpha E - beta A`` invertible).  Pass ``validate=False`` to
    skip the properness test in inner loops that preserve it by
    construction.
    """

    A: np.ndarray
    E: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    alpha: complex = 1.0
    validate: bool = True

    def __post_init__(self):
        D = as_matrix(self.D, name="D")
        p, m = D.shape
        A = as_matrix(self.A, name="A")
        if A.size == 0:
            A = A.reshape(0, 0)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        E = as_matrix(self.E, rows=n, cols=n, name="E")
        B = as_matrix(self.B, rows=n, cols=m, name="B")
        C = as_matrix(self.C, rows=p, cols=n, name="C")
        alpha = complex(self.alpha)
        if abs(abs(alpha) - 1.0) > _UNIT_TOL:
            raise InputError(f"|alpha| must be 1, got {abs(alpha)!r}")
        for name, val in (("A", A), ("E", E), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "alpha", alpha)
        if self.validate and n:
            M = alpha * E - alpha.conjugate() * A
            s = np.linalg.svd(M, compute_uv=False)
            scale = max(np.linalg.norm(A, 2) + np.linalg.norm(E, 2), 1.0)
            if s[-1] <= POLE_CLEARANCE_TOL * scale:
                raise CenterIsPole(
                    f"center z0={self.z0:.6g} is a pole (alpha E - beta A is singular)")

    @property
    def beta(self) -> complex:
        return self.alpha.conjugate()

    @property
    def z0(self) -> complex:
        return self.alpha / self.beta

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[1]

    @property
    def p(self) -> int:
        return self.D.shape[0]

    @property
    def shape(self):
        return self.D.shape

    @property
    def pencil(self) -> MatrixPencil:
        return MatrixPencil(self.A, self.E)

    @property
    def center_matrix(self):
        """``alpha E - beta A``, invertible for a proper realization."""
        return self.alpha * self.E - self.beta * self.A

    def replace(self, **changes) -> "CenteredRealization":
        fields = dict(A=self.A, E=self.E, B=self.B, C=self.C, D=self.D,
                      alpha=self.alpha, validate=self.validate)
        fields.update(changes)
        return CenteredRealization(**fields)

    def feedback(self, B_left, F_right) -> tuple:
        """Pencil matrices of ``A - zE + B_left F_right (alpha - beta z)``."""
        K = B_left @ F_right
        return self.A + self.alpha * K, self.E + self.beta * K

    def subsystem(self, rows, cols) -> "CenteredRealization":
        return self.replace(B=self.B[:, cols], C=self.C[rows, :], D=self.D[rows][:, cols],
                            validate=False)

    def __call__(self, z):
        return evaluate(self, z)


def static_gain(D, alpha=1.0) -> CenteredRealization:
    """Order-zero realization of the constant matrix ``D``."""
    D = as_matrix(D, name="D")
    p, m = D.shape
    return CenteredRealization(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, m)),
                               np.zeros((p, 0)), D, alpha)


@dataclass(frozen=True, eq=False)
class DescriptorRealization:
    """``G(z) = D + C (z E - A)^{-1} B`` with a possibly singular ``E``."""

    A: np.ndarray
    E: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = as_matrix(self.D, name="D")
        p, m = D.shape
        A = as_matrix(self.A, name="A")
        if A.size == 0:
            A = A.reshape(0, 0)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        for name, val in (("A", A), ("E", as_matrix(self.E, rows=n, cols=n, name="E")),
                          ("B", as_matrix(self.B, rows=n, cols=m, name="B")),
                          ("C", as_matrix(self.C, rows=p, cols=n, name="C")), ("D", D)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def pencil(self) -> MatrixPencil:
        return MatrixPencil(self.A, self.E)

    def __call__(self, z):
        M = z * self.E - self.A
        return self.D + self.C @ np.linalg.solve(M, self.B) if self.n else self.D.copy()


@dataclass(frozen=True, eq=False)
class PartitionedPlant:
    """A centered realization with inputs ``(u1, u2)`` and outputs ``(y1, y2)``.

    Block views follow the usual naming: ``B1, B2, C1, C2, D11, D12, D21, D22``.
    """

    sys: CenteredRealization
    m1: int
    m2: int
    p1: int
    p2: int

    def __post_init__(self):
        for name in ("m1", "m2", "p1", "p2"):
            if int(getattr(self, name)) < 0:
                raise DimensionMismatch(f"{name} must be nonnegative")
        if self.m1 + self.m2 != self.sys.m or self.p1 + self.p2 != self.sys.p:
            raise DimensionMismatch(
                f"partition ({self.m1}+{self.m2}, {self.p1}+{self.p2}) does not match "
                f"system shape {self.sys.p}x{self.sys.m}")

    # channel views
    @property
    def B1(self):
        return self.sys.B[:, :self.m1]

    @property
    def B2(self):
        return self.sys.B[:, self.m1:]

    @property
    def C1(self):
        return self.sys.C[:self.p1]

    @property
    def C2(self):
        return self.sys.C[self.p1:]

    @property
    def D11(self):
        return self.sys.D[:self.p1, :self.m1]

    @property
    def D12(self):
        return self.sys.D[:self.p1, self.m1:]

    @property
    def D21(self):
        return self.sys.D[self.p1:, :self.m1]

    @property
    def D22(self):
        return self.sys.D[self.p1:, self.m1:]

    @property
    def n(self) -> int:
        return self.sys.n

    @classmethod
    def from_blocks(cls, A, E, B1, B2, C1, C2, D11=None, D12=None, D21=None, D22=None,
                    alpha=1.0) -> "PartitionedPlant":
        A = as_matrix(A)
        n = A.shape[0]
        B1 = as_matrix(B1, rows=n, name="B1") if n else as_matrix(B1)
        B2 = as_matrix(B2, rows=n, name="B2") if n else as_matrix(B2)
        C1 = as_matrix(C1, cols=n, name="C1") if n else as_matrix(C1)
        C2 = as_matrix(C2, cols=n, name="C2") if n else as_matrix(C2)
        m1, m2, p1, p2 = B1.shape[1], B2.shape[1], C1.shape[0], C2.shape[0]
        D11 = np.zeros((p1, m1)) if D11 is None else as_matrix(D11, rows=p1, cols=m1, name="D11")
        D12 = np.zeros((p1, m2)) if D12 is None else as_matrix(D12, rows=p1, cols=m2, name="D12")
        D21 = np.zeros((p2, m1)) if D21 is None else as_matrix(D21, rows=p2, cols=m1, name="D21")
        D22 = np.zeros((p2, m2)) if D22 is None else as_matrix(D22, rows=p2, cols=m2, name="D22")
        sys = CenteredRealization(A, E, np.hstack([B1, B2]), np.vstack([C1, C2]),
                                  np.block([[D11, D12], [D21, D22]]), alpha)
        return cls(sys, m1, m2, p1, p2)

    def block(self, i, j) -> CenteredRealization:
        rows = slice(0, self.p1) if i == 1 else slice(self.p1, self.sys.p)
        cols = slice(0, self.m1) if j == 1 else slice(self.m1, self.sys.m)
        return self.sys.subsystem(rows, cols)

    def replace_sys(self, sys) -> "PartitionedPlant":
        return PartitionedPlant(sys, self.m1, self.m2, self.p1, self.p2)


# ---------------------------------------------------------------------------
# conversion


def from_descriptor(desc: DescriptorRealization, z0=1.0, alpha=None) -> CenteredRealization:
    """Centered realization at ``z0`` of a descriptor system, by one-step deflation.

    ``U (A - zE) V`` is brought to block upper-triangular form with the
    non-dynamic part ``A2`` (invertible) split off at the bottom; the
    leading block ``A1 - z E1`` becomes the pencil of the result.
    ``alpha`` defaults to the principal square root of ``z0``.
    """
    z0 = complex(z0)
    if abs(abs(z0) - 1.0) > _UNIT_TOL:
        raise InputError(f"z0 must lie on the unit circle, |z0| = {abs(z0)!r}")
    if alpha is None:
        alpha = np.sqrt(z0)
    alpha = complex(alpha)
    if abs(alpha * alpha - z0) > 1e-12:
        raise InputError("alpha**2 must equal z0")
    n = desc.n
    if n == 0:
        return static_gain(desc.D, alpha)
    A, E, B, C, D = desc.A, desc.E, desc.B, desc.C, desc.D
    if not is_regular(desc.pencil):
        raise SingularPencil("descriptor pencil is singular")
    spec = generalized_spectrum(desc.pencil)
    if np.any(np.abs(spec.finite - z0) <= POLE_CLEARANCE_TOL * max(1.0, np.abs(z0))):
        raise CenterIsPole(f"z0={z0:.6g} is a pole of the descriptor system")

    r = numerical_rank(E)
    if r == n:
        U = np.eye(n, dtype=complex)
        V = np.eye(n, dtype=complex)
    else:
        Ue, _, _ = np.linalg.svd(E)
        U = Ue.conj().T
        W = (U @ A)[r:, :]
        if numerical_rank(W) < n - r:
            raise DeflationRankFailure("non-dynamic rows of A are rank deficient")
        _, _, Vh = np.linalg.svd(W)
        Vw = Vh.conj().T
        q = n - r
        V = np.hstack([Vw[:, q:], Vw[:, :q]])
    At = U @ A @ V
    Et = U @ E @ V
    Et[r:, :] = 0.0
    At[r:, :r] = 0.0

    Bt = np.linalg.solve(At - z0 * Et, U @ B)  # = V* (A - z0 E)^{-1} B
    Ct = C @ V
    A1, E1, E12 = At[:r, :r], Et[:r, :r], Et[:r, r:]
    B1, B2 = Bt[:r], Bt[r:]
    C1, C2 = Ct[:, :r], Ct[:, r:]
    # (z0 - z) = (alpha - beta z) / beta and 1/beta = alpha on the circle
    Bc = -alpha * (E1 @ B1 + E12 @ B2)
    Dc = D - C1 @ B1 - C2 @ B2
    return CenteredRealization(A1, E1, Bc, C1, Dc, alpha)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(sys: CenteredRealization, z) -> np.ndarray:
    """``D + C (zE - A)^{-1} B (alpha - beta z)`` by one linear solve."""
    z = complex(z)
    if not np.isfinite(z):
        raise EvalAtPole("evaluation at infinity is not supported")
    if sys.n == 0:
        return sys.D.copy()
    M = z * sys.E - sys.A
    if np.linalg.cond(M) > 1.0 / EVAL_TOL:
        raise EvalAtPole(f"z={z:.6g} is (numerically) a pole")
    return sys.D + sys.C @ np.linalg.solve(M, sys.B * (sys.alpha - sys.beta * z))


def evaluate_many(sys: CenteredRealization, zs) -> np.ndarray:
    """Stack of evaluations with shape ``(len(zs), p, m)``."""
    zs = np.asarray(zs, dtype=complex).ravel()
    out = np.broadcast_to(sys.D, (len(zs),) + sys.D.shape).copy()
    if sys.n == 0 or len(zs) == 0:
        return out
    M = zs[:, None, None] * sys.E[None] - sys.A[None]
    if np.any(np.linalg.cond(M) > 1.0 / EVAL_TOL):
        raise EvalAtPole("grid contains a (numerical) pole")
    rhs = sys.B[None] * (sys.alpha - sys.beta * zs)[:, None, None]
    return out + sys.C[None] @ np.linalg.solve(M, rhs)


def evaluate_sharp(sys: CenteredRealization, z) -> np.ndarray:
    """``G#(z) = G(1/conj(z))*``."""
    z = complex(z)
    if z == 0:
        raise EvalAtPole("G# is not evaluated at z = 0")
    return evaluate(sys, 1.0 / z.conjugate()).conj().T


def poles(sys: CenteredRealization) -> Spectrum:
    return generalized_spectrum(sys.pencil)


def is_stable(sys, guard=STABILITY_GUARD) -> bool:
    """All generalized eigenvalues finite and strictly inside the unit disk."""
    pencil = sys.pencil if hasattr(sys, "pencil") else sys
    if pencil.n == 0:
        return True
    return generalized_spectrum(pencil).all_in_open_disk(margin=guard)


# ---------------------------------------------------------------------------
# interconnection


def _require_same_center(*systems):
    a0 = systems[0].alpha
    for s in systems[1:]:
        if abs(s.alpha - a0) > _UNIT_TOL:
            raise CenterMismatch(f"centers differ: alpha={a0} vs alpha={s.alpha}")


def append(*systems: CenteredRealization) -> CenteredRealization:
    """Block-diagonal aggregate (inputs and outputs stacked)."""
    _require_same_center(*systems)
    return CenteredRealization(
        sla.block_diag(*[s.A for s in systems]),
        sla.block_diag(*[s.E for s in systems]),
        sla.block_diag(*[s.B for s in systems]),
        sla.block_diag(*[s.C for s in systems]),
        sla.block_diag(*[s.D for s in systems]),
        systems[0].alpha,
        validate=False,
    )


def close_static_loop(sys: CenteredRealization, w, v, zo, y, S) -> CenteredRealization:
    """Close ``v = S y`` around ``sys`` and keep the ``w -> zo`` channels.

    ``w``, ``v`` index the inputs and ``zo``, ``y`` the outputs.  With
    ``N = (I - S D_yv)^{-1} S`` the closed loop is

        A - zE + B_v N C_y (alpha - beta z),  B_w + B_v N D_yw,
        C_z + D_zv N C_y,                     D_zw + D_zv N D_yw.
    """
    S = as_matrix(S, rows=len(v), cols=len(y), name="S")
    Dyv = sys.D[np.ix_(y, v)]
    M = np.eye(len(v)) - S @ Dyv
    if M.size and np.linalg.cond(M) > 1e12:
        raise IllPosed("interconnection is ill-posed (I - S D_yv is singular)")
    N = np.linalg.solve(M, S) if M.size else S
    Bw, Bv = sys.B[:, w], sys.B[:, v]
    Cz, Cy = sys.C[zo, :], sys.C[y, :]
    Dzw, Dzv, Dyw = sys.D[np.ix_(zo, w)], sys.D[np.ix_(zo, v)], sys.D[np.ix_(y, w)]
    A, E = sys.feedback(Bv @ N, Cy)
    return CenteredRealization(A, E, Bw + Bv @ N @ Dyw, Cz + Dzv @ N @ Cy,
                               Dzw + Dzv @ N @ Dyw, sys.alpha, validate=False)


def _as_system(K, alpha):
    if isinstance(K, CenteredRealization):
        return K
    return static_gain(K, alpha)


def lft_lower(T: PartitionedPlant, K) -> CenteredRealization:
    """``T11 + T12 K (I - T22 K)^{-1} T21`` at realization level.

    ``K`` is an ``m2 x p2`` centered realization (or a constant matrix).
    """
    K = _as_system(K, T.sys.alpha)
    if K.shape != (T.m2, T.p2):
        raise DimensionMismatch(f"controller must be {T.m2}x{T.p2}, got {K.p}x{K.m}")
    _require_same_center(T.sys, K)
    agg = append(T.sys, K)
    m, p = T.sys.m, T.sys.p
    w = list(range(T.m1))
    v = list(range(T.m1, m)) + list(range(m, m + K.m))          # u2, controller input
    zo = list(range(T.p1))
    y = list(range(T.p1, p)) + list(range(p, p + K.p))          # y2, controller output
    S = np.block([[np.zeros((T.m2, T.p2)), np.eye(T.m2)],
                  [np.eye(T.p2), np.zeros((T.p2, T.m2))]])
    return close_static_loop(agg, w, v, zo, y, S)


def star_product(T: PartitionedPlant, G: PartitionedPlant) -> PartitionedPlant:
    """Redheffer product ``T (x) G``: ``y2 -> G's u1`` and ``G's y1 -> u2``.

    The result maps ``(T.u1, G.u2)`` to ``(T.y1, G.y2)``, so that
    ``lft_lower(star_product(T, G), Q) = lft_lower(T, lft_lower(G, Q))``.
    """
    if T.p2 != G.m1 or T.m2 != G.p1:
        raise DimensionMismatch(
            f"interface mismatch: T has (u2={T.m2}, y2={T.p2}), "
            f"G has (u1={G.m1}, y1={G.p1})")
    _require_same_center(T.sys, G.sys)
    agg = append(T.sys, G.sys)
    mT, pT = T.sys.m, T.sys.p
    w = list(range(T.m1)) + [mT + G.m1 + i for i in range(G.m2)]
    v = list(range(T.m1, mT)) + [mT + i for i in range(G.m1)]        # T.u2, G.u1
    zo = list(range(T.p1)) + [pT + G.p1 + i for i in range(G.p2)]
    y = list(range(T.p1, pT)) + [pT + i for i in range(G.p1)]        # T.y2, G.y1
    S = np.block([[np.zeros((T.m2, T.p2)), np.eye(T.m2)],
                  [np.eye(G.m1), np.zeros((G.m1, G.p1))]])
    sys = close_static_loop(agg, w, v, zo, y, S)
    return PartitionedPlant(sys, T.m1, G.m2, T.p1, G.p2)


def d22_loop_shift(K: CenteredRealization, D22) -> CenteredRealization:
    """Realization of ``K (I + D22 K)^{-1}``."""
    D22 = as_matrix(D22, rows=K.m, cols=K.p, name="D22")
    m, p = K.m, K.p
    # K driven by w + v with both outputs equal to K's output; close v = -D22 y
    agg = K.replace(B=np.hstack([K.B, K.B]), C=np.vstack([K.C, K.C]),
                    D=np.block([[K.D, K.D], [K.D, K.D]]), validate=False)
    w, v = list(range(m)), list(range(m, 2 * m))
    zo, y = list(range(p)), list(range(p, 2 * p))
    return close_static_loop(agg, w, v, zo, y, -D22)


def gamma_scale(plant: PartitionedPlant, gamma) -> PartitionedPlant:
    """Divide the ``u1`` input channel by ``gamma`` (``B1``, ``D11``, ``D21``)."""
    gamma = float(gamma)
    if not gamma > 0:
        raise InputError(f"gamma must be positive, got {gamma!r}")
    s = plant.sys
    B = s.B.copy()
    D = s.D.copy()
    B[:, :plant.m1] /= gamma
    D[:, :plant.m1] /= gamma
    return plant.replace_sys(s.replace(B=B, D=D, validate=False))


# ---------------------------------------------------------------------------
# polynomial description of SISO systems


def _det_poly(P0, P1, degree):
    """Coefficients (highest first) of ``det(P0 + z P1)`` by DFT interpolation."""
    N = degree + 1
    zs = np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.array([np.linalg.det(P0 + z * P1) for z in zs])
    # numpy's forward FFT uses e^{-2 pi i jk/N}, which is exactly the inverse map here
    coeffs = np.fft.fft(vals) / N
    return coeffs[::-1]


def siso_polynomials(sys: CenteredRealization, tol=1e-10):
    """Numerator and denominator of a SISO system, highest power first.

    The denominator is ``det(zE - A)`` and the numerator the determinant of
    the system pencil; trailing leading zeros are trimmed relative to
    ``tol``.  Both are returned unnormalized.
    """
    if sys.shape != (1, 1):
        raise DimensionMismatch("siso_polynomials needs a 1x1 system")
    n = sys.n
    den = _det_poly(-sys.A, sys.E, n) if n else np.ones(1, dtype=complex)
    P0 = np.block([[-sys.A, sys.alpha * sys.B], [-sys.C, sys.D]])
    P1 = np.block([[sys.E, -sys.beta * sys.B], [np.zeros((1, n)), np.zeros((1, 1))]])
    num = _det_poly(P0, P1, n + 1)

    def trim(c):
        scale = np.max(np.abs(c)) if c.size else 0.0
        k = 0
        while k < len(c) - 1 and abs(c[k]) <= tol * scale:
            k += 1
        return c[k:]

    return trim(num), trim(den)
