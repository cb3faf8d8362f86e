import numpy as np
import pytest

from helpers import coupled_system, full_operator, laplace, random_polys, variable_principal
from torspec.operators import OperatorSpec, apply_operator
from torspec.resolvent_localization import (
    LadderExhaustedError,
    LocalizedCoefficient,
    LocalizedSolver,
    NearSingularError,
    SingularModeError,
    build_partition,
    commutator_Bj,
    constant_resolvent,
    find_threshold,
    find_thresholds,
    galerkin_resolvent,
    holder_estimate,
    loglog_slope,
    perturbed_resolvent,
    resolvent_norm_estimate,
    resolvent_symbol,
    retraction,
    retraction_at,
    scaled_resolvent_symbol,
    smallness_sweep,
)
from torspec.resolvent_localization import TestDictionary as Dictionary
from torspec.function_spaces import holder_norm
from torspec.torus_core import TrigPoly, wrap


def quick_solver(eps=0.3, K=255, A=None):
    A = variable_principal() if A is None else A
    return LocalizedSolver(A, build_partition(eps), K_pi=K, K_run=K)


def two_plus_cos(x):
    return 2.0 + np.cos(np.asarray(x, dtype=float))


def test_constant_resolvent_is_exact():
    f = random_polys(1, 16, seed=2)[0]
    u = constant_resolvent(2.0 + 1.0j, 1, 5.0, f)
    back = TrigPoly(16, (5.0 + (2.0 + 1.0j) * f.modes.astype(float) ** 2) * u.coeffs)
    np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-14)


def test_constant_resolvent_singular_mode():
    f = TrigPoly.basis(2, 4)
    with pytest.raises(SingularModeError) as err:
        constant_resolvent(1.0, 1, -4.0, f)
    assert abs(err.value.k) == 2


def test_constant_resolvent_matrix_case():
    b = np.diag([1.0, 2.0])
    V = np.zeros((5, 2), dtype=complex)
    V[3] = [1.0, -0.5]
    V[2] = [0.2, 0.0]
    f = TrigPoly(2, V)
    u = constant_resolvent(b, 1, 3.0 + 1.0j, f)
    for i, k in enumerate(f.modes):
        sym = (3.0 + 1.0j) * np.eye(2) + b * float(k) ** 2
        np.testing.assert_allclose(sym @ u.coeffs[i], f.coeffs[i], atol=1e-13)


def test_galerkin_resolvent_reports_residual_and_cond():
    sol = galerkin_resolvent(laplace(), 10.0, 32, TrigPoly.basis(1, 1))
    assert sol.residual < 1e-12
    assert sol.cond < 1e4
    assert sol.u.coeff(1) == pytest.approx(1.0 / 11.0)


def test_galerkin_resolvent_near_singular():
    with pytest.raises((NearSingularError, SingularModeError)):
        galerkin_resolvent(laplace(), -4.0, 32, TrigPoly.basis(1, 1))


def test_retraction_clamps():
    x = np.array([-1.0, -0.1, 0.0, 0.3, 1.0])
    np.testing.assert_allclose(retraction(0.25, x), [-0.25, -0.1, 0.0, 0.25, 0.25])
    with pytest.raises(ValueError):
        retraction(0.25, 1.5)
    # conjugated version wraps: the clamp window rides the center
    z = 3.0
    got = retraction_at(z, 0.2, np.array([3.1, -3.0]))
    np.testing.assert_allclose(got, [3.1, wrap(3.2)], atol=1e-12)


def test_localized_coefficient_shape():
    loc = LocalizedCoefficient(two_plus_cos, 0.7, 0.2)
    assert np.max(np.abs(loc(0.7))) < 1e-12
    # vanishes outside the unit ball around z
    assert np.max(np.abs(loc(0.7 + 1.05))) == 0.0
    # inside the eps ball it is exactly b - b(z)
    x = 0.75
    assert loc(x) == pytest.approx(two_plus_cos(x) - two_plus_cos(0.7), abs=1e-12)
    assert loc.measured_norm(0.5, 256) > 0.0


def test_smallness_sweep_decreases():
    eps = [0.4, 0.2, 0.1]
    vals = smallness_sweep(two_plus_cos, eps, n_centers=12, N=128)
    assert np.all(np.diff(vals) <= 1e-12)
    assert vals[-1] < vals[0]


def test_partition_squares_sum_to_one():
    part = build_partition(0.25)
    assert part.n == int(np.ceil(2 * np.pi / 0.25))
    x = np.linspace(-np.pi, np.pi, 257)
    total = sum(part.pi(j, x) ** 2 for j in range(part.n))
    np.testing.assert_allclose(total, 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        build_partition(0.7)


def test_holder_estimate_tracks_reference_estimator():
    for f in random_polys(4, 24, seed=31):
        fast = holder_estimate(f, 0.5, K_cap=384, N=192)
        ref = holder_norm(f, 0.5, N=192)
        assert fast == pytest.approx(ref, rel=1e-10)


def test_dictionary_is_deterministic_and_geometric():
    d1 = Dictionary(K_modes=8, n_random=3, K_random=16, seed=4)
    d2 = Dictionary(K_modes=8, n_random=3, K_random=16, seed=4)
    f1, f2 = d1.functions(), d2.functions()
    assert len(f1) == len(f2)
    for a, b in zip(f1, f2):
        np.testing.assert_array_equal(a.coeffs, b.coeffs)
    g = Dictionary(K_modes=8, n_random=0, geometric=True)
    modes = sorted({int(k) for f in g.functions() for k in f.modes[np.abs(f.coeffs) > 0]})
    assert modes == [-8, -4, -2, -1, 0, 1, 2, 4, 8]


def test_localized_solver_requires_principal_part():
    with pytest.raises(ValueError):
        quick_solver(A=full_operator())


def test_left_inverse_matches_galerkin_oracle():
    s = quick_solver()
    lam = 1e3
    for f in (TrigPoly.basis(0, 1), TrigPoly.basis(1, 1), random_polys(1, 8, seed=17)[0]):
        u, rep = s.left_inverse(lam, f)
        oracle = galerkin_resolvent(s.A, lam, 128, f).u
        diff = np.max(np.abs(u.truncate(128).coeffs - oracle.coeffs))
        assert diff <= 1e-6
        assert rep.residual <= 1e-8
        assert rep.n_terms >= 1


def test_left_and_right_inverses_agree():
    s = quick_solver()
    f = TrigPoly.basis(1, 1)
    uL, _ = s.left_inverse(1e3, f)
    uR, _ = s.right_inverse(1e3, f)
    assert np.max(np.abs(uL.coeffs - uR.truncate(uL.K).coeffs)) <= 1e-8


def test_commutator_is_the_leibniz_defect():
    s = quick_solver()
    u = random_polys(1, 16, seed=23)[0]
    j = 2
    B = commutator_Bj(s, j, u)
    pij = s.P[j]
    direct = pij.mul(apply_operator(s.A, u)) - apply_operator(s.A, pij.mul(u))
    K = min(B.K, direct.K)
    np.testing.assert_allclose(B.truncate(K).coeffs, direct.truncate(K).coeffs, atol=1e-9)
    # order reduction: relative size falls like 1/k
    def rel(k):
        ek = TrigPoly.basis(k, k)
        return commutator_Bj(s, j, ek).l2_norm() / apply_operator(s.A, ek).l2_norm()

    assert rel(40) < 0.2
    assert rel(40) < 0.3 * rel(5)


def test_script_C_norm_decays_along_the_ladder():
    s = quick_solver()
    d = Dictionary(K_modes=8, n_random=4, K_random=16, seed=0)
    hi = s.script_C_norm(65536.0, d, 2)
    lo = s.script_C_norm(4 * 65536.0, d, 2)
    assert hi <= 0.5
    assert lo <= hi + 1e-9


def test_find_threshold_returns_validated_rung():
    s = quick_solver()
    d = Dictionary(K_modes=8, n_random=4, K_random=16, seed=0)
    res = find_threshold(s, "left", lam0=65536.0, factor=4.0, max_steps=6,
                         dictionary=d, slot_stride=2)
    assert res.omega == 65536.0
    assert res.estimates[0] <= 0.5
    assert res.kind == "left"
    assert res.config["slot_stride"] == 2
    assert res.config["K_pi"] == 255
    # the two validation rungs are recorded and nonincreasing
    assert len(res.lams) >= 3
    assert res.estimates[1] <= res.estimates[0] + 1e-9


def test_find_threshold_exhaustion():
    s = quick_solver()
    d = Dictionary(K_modes=4, n_random=2, K_random=8, seed=0)
    with pytest.raises(LadderExhaustedError):
        find_threshold(s, "left", lam0=1e-3, factor=2.0, max_steps=2, dictionary=d)


def test_find_thresholds_returns_both_kinds():
    s = quick_solver()
    d = Dictionary(K_modes=8, n_random=2, K_random=8, seed=0)
    left, right = find_thresholds(s, lam0=65536.0, factor=4.0, max_steps=6,
                                  dictionary=d, slot_stride=2)
    assert left.kind == "left" and right.kind == "right"
    assert left.omega > 0 and right.omega > 0


def test_perturbed_resolvent_constant_case():
    # A = D^2 + 1: exact resolvent divides by lam + 1 + k^2
    z = TrigPoly.zero(1)
    one = TrigPoly.from_modes({0: 1.0}, 1)
    A = OperatorSpec(1, [one, z, TrigPoly.from_modes({0: 1.0})])
    f = random_polys(1, 8, seed=41)[0]
    u, rep = perturbed_resolvent(A, 10.0, f)
    want = f.coeffs / (11.0 + f.modes.astype(float) ** 2)
    np.testing.assert_allclose(u.truncate(8).coeffs, want, atol=1e-12)
    assert rep.converged


def test_perturbed_resolvent_variable_principal_needs_resolver():
    f = TrigPoly.basis(1, 1)
    with pytest.raises(ValueError):
        perturbed_resolvent(full_operator(), 1e3, f)
    s = quick_solver()
    resolver = lambda g: s.left_inverse(1e3, g)[0]
    u, rep = perturbed_resolvent(full_operator(), 1e3, f, principal_resolver=resolver)
    oracle = galerkin_resolvent(full_operator(), 1e3, 128, f).u
    assert np.max(np.abs(u.truncate(128).coeffs - oracle.coeffs)) <= 1e-6
    assert rep.converged


def test_resolvent_symbol_gaps():
    sym = resolvent_symbol(1.0, 2, 7.0)
    assert sym.gap == 4.0
    assert sym.at(2) == pytest.approx(1.0 / (7.0 + 16.0))
    scaled = scaled_resolvent_symbol(1.0, 2, 7.0)
    assert scaled.gap == 0.0
    assert scaled.at(2) == pytest.approx(7.0 / (7.0 + 16.0))


def test_resolvent_norm_estimate_constant_case():
    d = Dictionary(K_modes=4, n_random=2, K_random=8, seed=0)
    est = resolvent_norm_estimate(1.0, 1, 100.0, d, target="same")
    assert est == pytest.approx(0.01, rel=1e-10)
    low = resolvent_norm_estimate(1.0, 1, 100.0, d, target="lower")
    assert low > est


def test_loglog_slope_recovers_power_law():
    xs = np.array([10.0, 100.0, 1e3, 1e4])
    assert loglog_slope(xs, 5.0 * xs ** -1.5) == pytest.approx(-1.5, abs=1e-12)


def test_matrix_valued_left_inverse():
    s = quick_solver(A=coupled_system())
    V = np.zeros((3, 2), dtype=complex)
    V[2] = [1.0, 0.5]
    f = TrigPoly(1, V)
    u, rep = s.left_inverse(1e3, f)
    oracle = galerkin_resolvent(coupled_system(), 1e3, 96, f).u
    assert np.max(np.abs(u.truncate(96).coeffs - oracle.coeffs)) <= 1e-6
    assert rep.residual <= 1e-8
