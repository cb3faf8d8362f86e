import math

import numpy as np
import pytest

from helpers import cauchy_samples, coupled_system, laplace, random_polys, variable_principal
from torspec.evolution import (
    CauchyProblemSpec,
    E0_norm,
    E1_norm,
    Propagator,
    QuadratureError,
    Trajectory,
    derivative_consistency,
    geometric_grid,
    maxreg_ratio,
    residual_profile,
    semigroup_apply,
    solve_cauchy,
    trace_norm,
    vanishing_check,
    weighted_sup_norm,
)
from torspec.function_spaces import holder_norm
from torspec.operators import EllipticityError, OperatorSpec, apply_operator
from torspec.torus_core import TrigPoly

E1_BASIS = TrigPoly.basis(1, 1)


def decay_spec(mu=1.0):
    return CauchyProblemSpec(laplace(), None, E1_BASIS, 1.0, mu)


def test_geometric_grid_shape():
    ts = geometric_grid(2.0, 8)
    assert ts[0] == 0.0 and ts[-1] == 2.0
    np.testing.assert_allclose(ts, 2.0 * (np.arange(9) / 8.0) ** 2)
    assert np.all(np.diff(ts) > 0)


def test_phi_stack_matches_power_series():
    prop = Propagator(variable_principal(), 8)
    E, phis = prop.phi_stack(0.05, 3)
    Z = -0.05 * prop.G

    def phi_series(q):
        S = np.zeros_like(Z)
        T = np.eye(Z.shape[0], dtype=complex) / math.factorial(q)
        for n in range(60):
            S = S + T
            T = T @ Z / (n + 1 + q)
        return S

    assert np.max(np.abs(E - phi_series(0))) < 1e-12
    for j in (1, 2, 3):
        assert np.max(np.abs(phis[j - 1] - phi_series(j))) < 1e-12


def test_propagator_caches_matrices():
    prop = Propagator(laplace(), 4)
    assert prop.expm(0.3) is prop.expm(0.3)
    assert prop.certificate is not None


def test_propagator_requires_ellipticity():
    z = TrigPoly.zero(1)
    cosx = TrigPoly.from_modes({1: 0.5, -1: 0.5}, 1)
    with pytest.raises(EllipticityError):
        Propagator(OperatorSpec(1, [z, z, cosx]), 4)


def test_semigroup_diagonal_example():
    out = semigroup_apply(laplace(), 0.1, TrigPoly.basis(2, 2), 4)
    assert out.coeff(2) == pytest.approx(np.exp(-0.4), rel=1e-12)
    assert abs(out.coeff(1)) < 1e-15


def test_semigroup_time_zero_and_negative():
    u0 = random_polys(1, 4, seed=8)[0]
    out = semigroup_apply(laplace(), 0.0, u0, 4)
    np.testing.assert_array_equal(out.coeffs, u0.truncate(4).coeffs)
    with pytest.raises(ValueError):
        semigroup_apply(laplace(), -0.1, u0, 4)


def test_semigroup_against_time_stepping_oracle():
    # classic RK4 on the same truncation, step 1e-5
    A = variable_principal()
    K = 16
    prop = Propagator(A, K)
    G = prop.G
    v = TrigPoly.basis(1, 1).truncate(K).coeffs.reshape(-1).astype(complex)
    h = 1e-5
    for _ in range(1000):
        k1 = -G @ v
        k2 = -G @ (v + 0.5 * h * k1)
        k3 = -G @ (v + 0.5 * h * k2)
        k4 = -G @ (v + h * k3)
        v = v + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    out = semigroup_apply(A, 0.01, TrigPoly.basis(1, 1), K, propagator=prop)
    assert np.max(np.abs(out.coeffs.reshape(-1) - v)) <= 1e-8


def test_semigroup_law():
    A = variable_principal()
    prop = Propagator(A, 12)
    for u0 in random_polys(3, 10, seed=14):
        ab = semigroup_apply(A, 0.07, semigroup_apply(A, 0.04, u0, 12, prop), 12, prop)
        once = semigroup_apply(A, 0.11, u0, 12, prop)
        assert np.max(np.abs(ab.coeffs - once.coeffs)) <= 1e-9


def test_strong_continuity():
    A = variable_principal()
    prop = Propagator(A, 12)
    u0 = random_polys(1, 8, seed=15)[0]
    gaps = []
    for p in (2, 6, 10, 14):
        out = semigroup_apply(A, 2.0 ** -p, u0, 12, prop)
        gaps.append(np.max(np.abs(out.coeffs - u0.truncate(12).coeffs)))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-3


def test_analytic_smoothing_bound():
    # t ||A e^{-tA} u0|| stays bounded for slowly decaying data
    A = laplace()
    K = 32
    prop = Propagator(A, K)
    k = np.arange(-K, K + 1)
    rough = TrigPoly(K, 1.0 / (1.0 + np.abs(k)) ** 0.6)
    vals = []
    for p in range(1, 16):
        t = 2.0 ** -p
        u = semigroup_apply(A, t, rough, K, prop)
        vals.append(t * apply_operator(A, u).l2_norm())
    assert max(vals) < 10.0 * vals[0]


def test_solve_free_decay_example():
    traj = solve_cauchy(decay_spec(), 4, 24)
    for t, u in zip(traj.ts, traj.states):
        assert u.coeff(1) == pytest.approx(np.exp(-t), abs=1e-12)


def test_solve_constant_forcing_example():
    spec = CauchyProblemSpec(laplace(), lambda t: E1_BASIS, TrigPoly.zero(1), 1.0, 1.0)
    traj = solve_cauchy(spec, 4, 24)
    for t, u in zip(traj.ts, traj.states):
        assert u.coeff(1) == pytest.approx(1.0 - np.exp(-t), abs=1e-10)


def test_solve_variable_coefficient_residual():
    spec = CauchyProblemSpec(
        variable_principal(),
        lambda t: TrigPoly(2, TrigPoly.basis(2, 2).coeffs * np.exp(-t)),
        TrigPoly.basis(1, 2), 1.0, 1.0)
    traj = solve_cauchy(spec, 32, 48)
    prof = residual_profile(traj, variable_principal(), spec.f)
    assert np.max(prof) <= 1e-6
    assert derivative_consistency(traj) <= 1e-3


def test_trace_is_exact():
    traj = solve_cauchy(decay_spec(), 4, 12)
    np.testing.assert_array_equal(traj.states[0].coeffs, E1_BASIS.truncate(4).coeffs)
    assert traj.ts[0] == 0.0


def test_two_grid_agreement():
    spec = CauchyProblemSpec(
        variable_principal(),
        lambda t: TrigPoly(2, TrigPoly.basis(2, 2).coeffs * np.exp(-t)),
        TrigPoly.basis(1, 2), 1.0, 1.0)
    a = solve_cauchy(spec, 16, 24)
    b = solve_cauchy(spec, 16, 48)
    assert np.max(np.abs(a.states[-1].coeffs - b.states[-1].coeffs)) <= 1e-6


def test_weighted_sup_examples():
    traj = solve_cauchy(decay_spec(mu=0.5), 8, 32)
    # weight t^{1/2} exactly cancels a t^{-1/2} amplitude
    ts = traj.ts
    states = [TrigPoly(1, TrigPoly.basis(0, 1).coeffs * (t ** -0.5 if t > 0 else 1.0))
              for t in ts]
    cancel = Trajectory(ts, states, [TrigPoly.zero(1) for _ in ts], 0.5)
    assert weighted_sup_norm(cancel, "sup", 32) == pytest.approx(1.0, rel=1e-12)
    # mu = 1, stationary e_1
    flat = Trajectory([0.0, 0.5, 1.0], [E1_BASIS] * 3, [TrigPoly.zero(1)] * 3, 1.0)
    assert weighted_sup_norm(flat, "sup", 32) == pytest.approx(1.0, rel=1e-12)
    # decaying run against the 1-D calculus oracle
    w = weighted_sup_norm(traj, "sup", 64)
    grid = np.max(ts[1:] ** 0.5 * np.exp(-ts[1:]))
    assert w == pytest.approx(grid, rel=1e-10)
    assert w == pytest.approx(np.sqrt(0.5) * np.exp(-0.5), abs=1e-3)


def test_weighted_norm_selectors():
    traj = solve_cauchy(decay_spec(), 4, 8)
    assert weighted_sup_norm(traj, "l2") == pytest.approx(1.0, rel=1e-12)
    assert weighted_sup_norm(traj, 0.5, N=256) == pytest.approx(
        holder_norm(E1_BASIS, 0.5), rel=1e-10)
    custom = weighted_sup_norm(traj, lambda u: 2.0)
    assert custom == pytest.approx(2.0)


def test_vanishing_profile_rough_data():
    traj = solve_cauchy(decay_spec(mu=0.5), 8, 32)
    van = vanishing_check(traj, "sup", 64)
    assert len(van) == 5
    assert np.all(van > 0)
    # profile shrinks toward t = 0
    assert np.all(np.diff(van) > 0)
    assert van[0] < 0.25 * van[-1]


def test_E1_norm_examples():
    # stationary constant state: derivative term vanishes
    flat = Trajectory([0.0, 0.5, 1.0], [TrigPoly.basis(0, 1)] * 3,
                      [TrigPoly.zero(1)] * 3, 1.0)
    assert E1_norm(flat, 1, 0.5, 256) == pytest.approx(1.0, rel=1e-12)
    # decaying first harmonic attains its bound at t=0
    traj = solve_cauchy(decay_spec(), 8, 24)
    want = holder_norm(E1_BASIS, 0.5) + holder_norm(E1_BASIS, 2.5)
    assert E1_norm(traj, 1, 0.5, 256) == pytest.approx(want, rel=1e-9)


def test_E0_norm_scales():
    ts = geometric_grid(1.0, 16)
    f = lambda t: E1_BASIS
    base = E0_norm(f, ts, 1.0, 0.5, 256)
    double = E0_norm(lambda t: TrigPoly(1, 2.0 * E1_BASIS.coeffs), ts, 1.0, 0.5, 256)
    assert double == pytest.approx(2.0 * base, rel=1e-12)
    assert base == pytest.approx(holder_norm(E1_BASIS, 0.5), rel=1e-10)


def test_trace_norm_value_and_refusal():
    assert trace_norm(E1_BASIS, 1, 1.0, 0.5) == pytest.approx(
        holder_norm(E1_BASIS, 2.5), rel=1e-12)
    with pytest.raises(ValueError, match="integer"):
        trace_norm(E1_BASIS, 1, 0.75, 0.5)


def test_quadrature_refusal_carries_details():
    fast = lambda t: TrigPoly(1, E1_BASIS.coeffs * np.cos(40.0 * t))
    bad = CauchyProblemSpec(laplace(), fast, TrigPoly.zero(1), 1.0, 1.0)
    with pytest.raises(QuadratureError) as err:
        solve_cauchy(bad, 4, 4, quad_tol=1e-6)
    assert err.value.tol == 1e-6
    assert len(err.value.intervals) == len(err.value.estimates)
    assert max(err.value.estimates) > 1e-6
    # a fine grid renders the same forcing acceptable
    traj = solve_cauchy(bad, 4, 96, quad_tol=1e-3)
    assert traj.quad_errors is not None


def test_trajectory_validation():
    u = TrigPoly.zero(1)
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0, 1.0], [u] * 3, [u] * 3, 1.0)
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0], [u] * 2, [u] * 2, 1.5)
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0], [u, TrigPoly.zero(2)], [u] * 2, 1.0)


def test_cauchy_spec_validation():
    with pytest.raises(ValueError):
        CauchyProblemSpec(laplace(), None, E1_BASIS, 0.0, 1.0)
    with pytest.raises(ValueError):
        CauchyProblemSpec(laplace(), None, E1_BASIS, 1.0, 0.0)


def test_maxreg_ratio_smoke_and_skip():
    K = 8
    samples = cauchy_samples(3, K=K, seed=12)
    samples.append((lambda t: TrigPoly.zero(K), TrigPoly.zero(K)))
    stats = maxreg_ratio(laplace(), samples, 1.0, 0.5, K=K, M=12)
    assert stats.skipped == 1
    assert len(stats.forward) == 3
    assert np.isfinite(stats.max_forward) and np.isfinite(stats.max_reverse)
    d = stats.as_dict()
    assert d["mu"] == 1.0 and d["skipped"] == 1


def test_solver_handles_systems():
    A = coupled_system()
    V = np.zeros((3, 2), dtype=complex)
    V[2] = [1.0, 0.0]
    u0 = TrigPoly(1, V)
    spec = CauchyProblemSpec(A, None, u0, 0.5, 1.0)
    traj = solve_cauchy(spec, 8, 12)
    # energy decays for a normally elliptic system
    norms = [u.l2_norm() for u in traj.states]
    assert norms[-1] < norms[0]
    assert np.max(residual_profile(traj, A)) <= 1e-6
