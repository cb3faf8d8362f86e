import numpy as np
import pytest

from helpers import coupled_system, laplace, random_polys, variable_principal
from torspec.operators import (
    EllipticityError,
    OperatorSpec,
    apply_operator,
    assemble_galerkin,
    check_normal_ellipticity,
    check_uniform_ellipticity,
    largest_normal_angle,
    principal_symbol,
)
from torspec.torus_core import TrigPoly

THETA = 3 * np.pi / 4


def diag_system(entries):
    M = np.zeros((3, len(entries), len(entries)), dtype=complex)
    M[1] = np.diag(entries)
    z = TrigPoly.zero(1, entry_shape=M.shape[1:])
    return OperatorSpec(1, [z, z, TrigPoly(1, M)])


def test_operator_spec_validation():
    z = TrigPoly.zero(1)
    with pytest.raises(ValueError):
        OperatorSpec(1, [z, z])  # needs 2m+1 entries
    with pytest.raises(ValueError):
        OperatorSpec(0, [z])
    mixed = [z, z, TrigPoly.zero(1, entry_shape=(2, 2))]
    with pytest.raises(ValueError):
        OperatorSpec(1, mixed)


def test_apply_operator_examples():
    out = apply_operator(laplace(), TrigPoly.basis(3, 3))
    assert out.coeff(3) == pytest.approx(9.0)
    out = apply_operator(variable_principal(), TrigPoly.basis(1, 1))
    assert out.coeff(1) == pytest.approx(2.0)
    assert out.coeff(0) == pytest.approx(0.5)
    assert out.coeff(2) == pytest.approx(0.5)
    # D^2 + D sends e_k to (k^2 - k) e_k
    z = TrigPoly.zero(1)
    one = TrigPoly.from_modes({0: 1.0}, 1)
    AD = OperatorSpec(1, [z, one, one])
    for k in (-2, 1, 4):
        got = apply_operator(AD, TrigPoly.basis(k, abs(k))).coeff(k)
        assert got == pytest.approx(k * k - k)


def test_apply_operator_matches_pointwise_evaluation():
    A = variable_principal()
    u = random_polys(1, 6, seed=13)[0]
    Au = apply_operator(A, u)
    x = np.linspace(-np.pi, np.pi, 257)
    want = (2.0 + np.cos(x)) * (-u.derivative(2)(x))
    np.testing.assert_allclose(Au(x), want, atol=1e-11)


def test_principal_symbol():
    assert principal_symbol(variable_principal(), 0.0, 1.0) == pytest.approx(3.0)
    assert principal_symbol(variable_principal(), 0.0, -1.0) == pytest.approx(3.0)
    S = principal_symbol(diag_system([1.0, 2.0]), 0.3, 1.0)
    np.testing.assert_allclose(S, np.diag([1.0, 2.0]))


def test_uniform_ellipticity_certificates():
    cert = check_uniform_ellipticity(variable_principal())
    assert cert.c1 == pytest.approx(1.0)
    assert cert.c2 == pytest.approx(3.0)
    # 3 + i sin x
    z = TrigPoly.zero(1)
    b = TrigPoly.from_modes({0: 3.0, 1: 0.5, -1: -0.5}, 1)
    cert = check_uniform_ellipticity(OperatorSpec(1, [z, z, b]))
    assert cert.c1 == pytest.approx(3.0)
    assert cert.c2 == pytest.approx(np.sqrt(10.0))


def test_uniform_ellipticity_failure_has_witness():
    z = TrigPoly.zero(1)
    cosx = TrigPoly.from_modes({1: 0.5, -1: 0.5}, 1)
    with pytest.raises(EllipticityError) as err:
        check_uniform_ellipticity(OperatorSpec(1, [z, z, cosx]))
    assert abs(abs(err.value.x) - np.pi) < 0.05
    assert err.value.value.real == pytest.approx(-1.0, abs=1e-3)


def test_uniform_check_rejects_systems():
    with pytest.raises(ValueError):
        check_uniform_ellipticity(diag_system([1.0, 2.0]))


def test_normal_certificate_scalar_frozen():
    cert = check_normal_ellipticity(variable_principal(), THETA)
    # boundary-ray supremum 2/sqrt(2-sqrt(2)) for a symbol with min Re = 1
    assert cert.c1 == pytest.approx(2.0 / np.sqrt(2.0 - np.sqrt(2.0)), rel=1e-6)
    assert cert.r == pytest.approx(1.0)
    assert cert.R == pytest.approx(3.0)
    assert cert.theta == THETA


def test_normal_certificate_diagonal_system():
    cert = check_normal_ellipticity(diag_system([1.0, 2.0]), THETA)
    assert np.isfinite(cert.c1)
    assert cert.r == pytest.approx(1.0)
    assert cert.R == pytest.approx(2.0)


def test_jordan_block_is_normally_elliptic_with_larger_bound():
    M = np.zeros((3, 2, 2), dtype=complex)
    M[1] = np.array([[1.0, 1.0], [0.0, 1.0]])
    z = TrigPoly.zero(1, entry_shape=(2, 2))
    AJ = OperatorSpec(1, [z, z, TrigPoly(1, M)])
    cJ = check_normal_ellipticity(AJ, THETA)
    cI = check_normal_ellipticity(diag_system([1.0, 1.0]), THETA)
    assert cJ.c1 > cI.c1


def test_normal_check_refuses_bad_spectrum():
    z = TrigPoly.zero(1)
    Ai = OperatorSpec(1, [z, z, TrigPoly.from_modes({0: 1j}, 1)])
    with pytest.raises(EllipticityError):
        check_normal_ellipticity(Ai, THETA)
    with pytest.raises(EllipticityError):
        check_normal_ellipticity(diag_system([-1.0, 2.0]), THETA)


def test_largest_normal_angle_bisection():
    ang = largest_normal_angle(variable_principal())
    assert np.pi / 2 < ang < np.pi
    # symbol on the positive real axis tolerates the whole slit plane
    assert ang == pytest.approx(np.pi, abs=1e-6)
    cert = check_normal_ellipticity(variable_principal(), ang)
    assert np.isfinite(cert.c1)
    assert largest_normal_angle(coupled_system()) > THETA


def test_galerkin_diag_example():
    G = assemble_galerkin(laplace(), 2)
    np.testing.assert_allclose(G, np.diag([4.0, 1.0, 0.0, 1.0, 4.0]), atol=1e-15)


def test_galerkin_convolution_entry():
    G = assemble_galerkin(variable_principal(), 2)
    # row j=2, column k=1 holds b2_hat(1) * (-1)^2 * 1^2
    assert G[4, 3] == pytest.approx(0.5)


def test_galerkin_consistent_with_apply():
    for A in (laplace(), variable_principal(), coupled_system()):
        K = 12
        G = assemble_galerkin(A, K)
        for u in random_polys(3, K - 1, seed=21):
            if A.dim == 2:
                c = np.zeros((2 * (K - 1) + 1, 2), dtype=complex)
                c[:, 0] = u.coeffs
                c[:, 1] = u.coeffs[::-1]
                u = TrigPoly(K - 1, c)
            vec = u.truncate(K).coeffs.reshape(-1)
            want = apply_operator(A, u).truncate(K).coeffs.reshape(-1)
            np.testing.assert_allclose(G @ vec, want, atol=1e-12)


def test_galerkin_block_diagonal_for_diag_coefficients():
    G = assemble_galerkin(diag_system([1.0, 2.0]), 1)
    # per-mode 2x2 blocks stay diagonal
    for i in range(3):
        blk = G[2 * i : 2 * i + 2, 2 * i : 2 * i + 2]
        assert blk[0, 1] == 0.0 and blk[1, 0] == 0.0


def test_certificates_serialize():
    d = check_uniform_ellipticity(variable_principal()).as_dict()
    assert d["c1"] == pytest.approx(1.0)
    n = check_normal_ellipticity(variable_principal(), THETA).as_dict()
    assert n["theta"] == pytest.approx(THETA)
