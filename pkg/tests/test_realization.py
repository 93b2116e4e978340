import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hinf.errors import CenterIsPole, CenterMismatch, DimensionMismatch, EvalAtPole, IllPosed
from hinf.realization import (
    CenteredRealization,
    DescriptorRealization,
    PartitionedPlant,
    d22_loop_shift,
    evaluate,
    evaluate_sharp,
    from_descriptor,
    gamma_scale,
    is_stable,
    lft_lower,
    siso_polynomials,
    star_product,
    static_gain,
)

from conftest import rand_descriptor, rand_matrix, rand_stable_system, unit_points


def descriptor_value(A, E, B, C, D, z):
    """Plain ``D + C (zE - A)^{-1} B``."""
    return D + C @ np.linalg.solve(z * E - A, B)


def lft_formula(T, K, m1, p1):
    """Pointwise ``T11 + T12 K (I - T22 K)^{-1} T21``."""
    T11, T12 = T[:p1, :m1], T[:p1, m1:]
    T21, T22 = T[p1:, :m1], T[p1:, m1:]
    return T11 + T12 @ K @ np.linalg.solve(np.eye(T22.shape[0]) - T22 @ K, T21)


def star_formula(T, G, m1, p1, mg1, pg1):
    """Pointwise Redheffer star product; ``T``'s second channel meets ``G``'s first."""
    T11, T12, T21, T22 = T[:p1, :m1], T[:p1, m1:], T[p1:, :m1], T[p1:, m1:]
    G11, G12, G21, G22 = G[:pg1, :mg1], G[:pg1, mg1:], G[pg1:, :mg1], G[pg1:, mg1:]
    # u2 = G11 y2 + G12 w', y2 = T21 w + T22 u2
    S = np.linalg.inv(np.eye(T22.shape[0]) - T22 @ G11)
    K = np.linalg.inv(np.eye(G11.shape[0]) - G11 @ T22)
    top = np.hstack([T11 + T12 @ G11 @ S @ T21, T12 @ K @ G12])
    bot = np.hstack([G21 @ S @ T21, G22 + G21 @ T22 @ K @ G12])
    return np.vstack([top, bot])


# -- conversion -------------------------------------------------------------

def test_convert_proper_keeps_order(rng):
    A = rand_matrix(rng, 3, 3) * 0.3
    B, C, D = rand_matrix(rng, 3, 2), rand_matrix(rng, 2, 3), rand_matrix(rng, 2, 2)
    s = from_descriptor(DescriptorRealization(A, np.eye(3), B, C, D), 1.0)
    assert s.n == 3
    assert np.allclose(s.D, descriptor_value(A, np.eye(3), B, C, D, 1.0), atol=1e-13)


def test_convert_polynomial_z():
    desc = DescriptorRealization(np.eye(2), [[0, 1.0], [0, 0]], [[0.0], [1]], [[-1.0, 0]],
                                 [[0.0]])
    s = from_descriptor(desc, 1.0)
    assert s.n == 1
    assert s.D[0, 0] == pytest.approx(1.0, abs=1e-14)
    for z in 1.7 * unit_points(16) + 0.2:
        assert abs(evaluate(s, z)[0, 0] - z) <= 1e-10


def test_convert_static():
    desc = DescriptorRealization(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, 2)),
                                 np.zeros((1, 0)), [[1.0, 2.0]])
    s = from_descriptor(desc, 1j)
    assert s.n == 0
    assert np.array_equal(s.D, np.array([[1.0, 2.0]]))
    assert s.z0 == pytest.approx(1j)


def test_convert_center_is_pole():
    desc = DescriptorRealization([[1.0]], [[1.0]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(CenterIsPole):
        from_descriptor(desc, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4), st.integers(0, 3), st.integers(1, 3), st.integers(1, 3),
       st.booleans(), st.floats(0, 2 * np.pi), st.integers(0, 2**32 - 1))
def test_conversion_fidelity(n_fin, n_nil, m, p, cplx, phase, seed):
    if n_fin + n_nil == 0:
        return
    rng = np.random.default_rng(seed)
    desc = rand_descriptor(rng, n_fin, n_nil, m, p, complex_=cplx)
    z0 = np.exp(1j * phase)
    s = from_descriptor(desc, z0)
    assert s.n <= desc.n
    assert np.allclose(evaluate(s, z0), s.D, atol=1e-12 * (1 + np.abs(s.D).max()))
    for z in 1.3 * unit_points(32, offset=0.37):
        ref = desc(z)
        assert np.abs(evaluate(s, z) - ref).max() <= 1e-9 * (1 + np.abs(ref).max())


# -- evaluation ---------------------------------------------------------------

def test_f16_values(f16):
    assert np.allclose(evaluate(f16.sys, 1.0), [[0, -1], [0, 1], [1, 0]], atol=1e-14)
    # entry (3,2) of the transfer matrix is 5z - 5
    assert evaluate(f16.sys, 0.0)[2, 1] == pytest.approx(-5.0, abs=1e-12)
    assert evaluate(f16.sys, 0.3 + 0.4j)[2, 1] == pytest.approx(5 * (0.3 + 0.4j) - 5, abs=1e-12)


def test_zero_input_gives_feedthrough(rng):
    s = CenteredRealization(rand_matrix(rng, 3, 3) * 0.2, np.eye(3), np.zeros((3, 2)),
                            rand_matrix(rng, 2, 3), rand_matrix(rng, 2, 2))
    for z in unit_points(5):
        assert np.array_equal(evaluate(s, z), s.D)


def test_eval_at_pole():
    s = CenteredRealization([[0.5]], [[1.0]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(EvalAtPole):
        evaluate(s, 0.5)


def test_sharp(rng):
    s = rand_stable_system(rng, 3, 2, 2, complex_=True)
    for z in unit_points(8):
        assert np.allclose(evaluate_sharp(s, z), evaluate(s, z).conj().T, atol=1e-13)
    D = rand_matrix(rng, 2, 3, complex_=True)
    assert np.allclose(evaluate_sharp(static_gain(D), 0.3 + 2j), D.conj().T)


def test_sharp_allpass():
    # g(z) = (1 - 0.5 z)/(z - 0.5) = -0.5 + 0.75/(z - 0.5)
    g = from_descriptor(DescriptorRealization([[0.5]], [[1.0]], [[1.0]], [[0.75]], [[-0.5]]),
                        1j)
    for z in unit_points(32):
        assert abs(evaluate(g, z)[0, 0] - (1 - 0.5 * z) / (z - 0.5)) <= 1e-12
        assert abs(evaluate_sharp(g, z)[0, 0] * evaluate(g, z)[0, 0] - 1) <= 1e-12


# -- stability ----------------------------------------------------------------

def test_stability_examples(f16):
    assert is_stable(CenteredRealization([[0.5]], [[1.0]], [[1.0]], [[1.0]], [[0.0]]))
    assert not is_stable(f16.sys)
    assert not is_stable(CenteredRealization([[1.5]], [[1.0]], [[1.0]], [[1.0]], [[0.0]]))


def test_stability_unitary_invariance(rng):
    for _ in range(20):
        s = rand_stable_system(rng, 4, 1, 1, radius=rng.uniform(0.5, 1.5), complex_=True)
        U, _ = np.linalg.qr(rand_matrix(rng, 4, 4, complex_=True))
        V, _ = np.linalg.qr(rand_matrix(rng, 4, 4, complex_=True))
        t = CenteredRealization(U @ s.A @ V, U @ s.E @ V, U @ s.B, s.C @ V, s.D, validate=False)
        assert is_stable(s) == is_stable(t)


# -- interconnections ---------------------------------------------------------

def test_lft_with_zero_controller(f16):
    G = lft_lower(f16, np.zeros((1, 1)))
    for z in unit_points(6):
        assert np.allclose(evaluate(G, z), evaluate(f16.sys, z)[:2, :1], atol=1e-12)


def test_lft_pass_through(rng):
    TR = PartitionedPlant(static_gain(np.block([[np.zeros((2, 2)), np.eye(2)],
                                                [np.eye(2), np.zeros((2, 2))]])), 2, 2, 2, 2)
    Q = rand_stable_system(rng, 2, 2, 2)
    G = lft_lower(TR, Q)
    for z in unit_points(8):
        assert np.allclose(evaluate(G, z), evaluate(Q, z), atol=1e-12)


@pytest.mark.parametrize("alpha", [1.0, -1.0, np.exp(0.7j)])
def test_lft_matches_formula(rng, alpha):
    for _ in range(10):
        T = PartitionedPlant(rand_stable_system(rng, 3, 3, 3, alpha, complex_=True), 2, 1, 2, 1)
        K = rand_stable_system(rng, 2, 1, 1, alpha, complex_=True)
        G = lft_lower(T, K)
        assert G.n == 5
        for z in unit_points(16, 0.41):
            ref = lft_formula(evaluate(T.sys, z), evaluate(K, z), 2, 2)
            assert np.abs(evaluate(G, z) - ref).max() <= 1e-9 * (1 + np.abs(ref).max())


def test_lft_errors(rng, f16):
    with pytest.raises(DimensionMismatch):
        lft_lower(f16, np.zeros((2, 1)))
    K = rand_stable_system(rng, 1, 1, 1, alpha=1j)
    with pytest.raises(CenterMismatch):
        lft_lower(f16, K)
    T = PartitionedPlant(static_gain([[0.0, 1.0], [1.0, 1.0]]), 1, 1, 1, 1)
    with pytest.raises(IllPosed):
        lft_lower(T, [[1.0]])


def test_star_with_pass_through(rng):
    T = PartitionedPlant(rand_stable_system(rng, 3, 3, 3), 1, 2, 2, 1)
    # the interface is (u2: 2, y2: 1); the generator's first channel is (y2 -> u2)
    P = np.block([[np.zeros((2, 1)), np.eye(2)], [np.eye(1), np.zeros((1, 2))]])
    S = star_product(T, PartitionedPlant(static_gain(P), 1, 2, 2, 1))
    for z in unit_points(8):
        assert np.allclose(evaluate(S.sys, z), evaluate(T.sys, z), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_star_matches_formula(nt, ng, seed):
    rng = np.random.default_rng(seed)
    alpha = np.exp(1j * rng.uniform(0, 2 * np.pi))
    m1, m2, p1, p2 = 1, 2, 2, 1
    T = PartitionedPlant(rand_stable_system(rng, nt, m1 + m2, p1 + p2, alpha, complex_=True),
                         m1, m2, p1, p2)
    # generator: inputs (y2: p2, w': 1), outputs (u2: m2, z': 2)
    G = PartitionedPlant(rand_stable_system(rng, ng, p2 + 1, m2 + 2, alpha, complex_=True)
                         .replace(D=0.3 * rand_matrix(rng, m2 + 2, p2 + 1)), p2, 1, m2, 2)
    S = star_product(T, G)
    for z in unit_points(16, 0.29):
        ref = star_formula(evaluate(T.sys, z), evaluate(G.sys, z), m1, p1, p2, m2)
        assert np.abs(evaluate(S.sys, z) - ref).max() <= 1e-9 * (1 + np.abs(ref).max())


def test_d22_loop_shift(rng):
    K = rand_stable_system(rng, 2, 1, 1)
    same = d22_loop_shift(K, np.zeros((1, 1)))
    for z in unit_points(4):
        assert np.allclose(evaluate(same, z), evaluate(K, z), atol=1e-14)
    shifted = d22_loop_shift(static_gain([[1.0]]), [[0.5]])
    assert shifted.D[0, 0] == pytest.approx(2.0 / 3.0)
    with pytest.raises(IllPosed):
        d22_loop_shift(static_gain([[2.0]]), [[-0.5]])


def test_d22_loop_shift_pointwise(rng):
    for _ in range(10):
        K = rand_stable_system(rng, 3, 2, 2, complex_=True)
        D22 = 0.3 * rand_matrix(rng, 2, 2, complex_=True)
        Ks = d22_loop_shift(K, D22)
        for z in unit_points(16, 0.5):
            Kz = evaluate(K, z)
            ref = Kz @ np.linalg.inv(np.eye(2) + D22 @ Kz)
            assert np.abs(evaluate(Ks, z) - ref).max() <= 1e-9 * (1 + np.abs(ref).max())


def test_d22_loop_shift_restores_lft(rng):
    # K designed for the plant with D22 removed, shifted, works on the original plant
    for _ in range(5):
        T = PartitionedPlant(rand_stable_system(rng, 3, 2, 2, complex_=True), 1, 1, 1, 1)
        D0 = T.sys.D.copy()
        D0[1:, 1:] = 0.0
        T0 = T.replace_sys(T.sys.replace(D=D0))
        K = rand_stable_system(rng, 2, 1, 1, radius=0.5).replace(D=[[0.1]])
        G0 = lft_lower(T0, K)
        G = lft_lower(T, d22_loop_shift(K, T.D22))
        for z in unit_points(8, 0.2):
            ref = evaluate(G0, z)
            assert np.abs(evaluate(G, z) - ref).max() <= 1e-9 * (1 + np.abs(ref).max())


def test_gamma_scale(f16, rng):
    assert gamma_scale(f16, 1.0).sys.B.tolist() == f16.sys.B.tolist()
    T = PartitionedPlant(static_gain(rand_matrix(rng, 3, 3)), 1, 2, 2, 1)
    S = gamma_scale(T, 4.0)
    G, H = evaluate(T.sys, 0.5), evaluate(S.sys, 0.5)
    assert np.allclose(H[:, :1], G[:, :1] / 4.0)
    assert np.allclose(H[:, 1:], G[:, 1:])


def test_siso_polynomials():
    # 1/(z - 0.5) and (z + 1)/((z - 0.5)(z + 0.25))
    g = from_descriptor(DescriptorRealization([[0.5]], [[1.0]], [[1.0]], [[1.0]], [[0.0]]))
    num, den = siso_polynomials(g)
    assert np.allclose(num / den[0], [1.0], atol=1e-12)
    assert np.allclose(den / den[0], [1.0, -0.5], atol=1e-12)
    A = np.diag([0.5, -0.25])
    h = from_descriptor(DescriptorRealization(A, np.eye(2), [[1.0], [1.0]],
                                              [[2.0, -1.0]], [[0.0]]), -1.0)
    num, den = siso_polynomials(h)
    # 2/(z-0.5) - 1/(z+0.25) = (z + 1)/((z-0.5)(z+0.25))
    assert np.allclose(num / den[0], [1.0, 1.0], atol=1e-12)
    assert np.allclose(den / den[0], [1.0, -0.25, -0.125], atol=1e-12)
