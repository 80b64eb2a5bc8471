import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from nonlocal_parabolic import fixedpoint as fp
from nonlocal_parabolic.grid import Grid, eigenpairs, norm_l2
from nonlocal_parabolic.potential import builtin

from conftest import bump


def spec_for(g, name="abs", u0=None, T=0.5, nt=16, **kw):
    return fp.ProblemSpec(g, builtin(name), bump(g) if u0 is None else u0, T, nt, **kw)


def dense_picard_V(g, p, f, tol=1e-13):
    A = g.laplacian.toarray()
    v = np.zeros(g.size)
    for _ in range(10_000):
        nxt = np.linalg.solve(A, -p.eta(v) - f)
        if np.max(np.abs(nxt - v)) < tol:
            return nxt
        v = nxt
    raise AssertionError("picard oracle stalled")


def dense_implicit_euler_terminal(g, zeta, u0, T, nt):
    dt = T / nt
    M = np.eye(g.size) + dt * (g.laplacian.toarray() + np.diag(zeta))
    u = u0.copy()
    for _ in range(nt):
        u = np.linalg.solve(M, u)
    return u


def test_psi_zero_initial_data(line17, rng):
    spec = spec_for(line17, u0=np.zeros(line17.size))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        assert np.all(fp.psi(spec, rng.standard_normal(line17.size)) == 0)


def test_psi_without_potential_is_heat_terminal(line17, rng):
    spec = spec_for(line17, "zero")
    heat = fp.heat_terminal(spec)
    for _ in range(3):
        w = fp.random_start(spec, rng)
        assert_allclose(fp.psi(spec, w), heat, atol=1e-14)


def test_psi_against_recomposed_oracles(line17):
    psi1 = eigenpairs(line17, 1)[0][1]
    spec = fp.ProblemSpec(line17, builtin("abs"), psi1, 0.5, 16)
    v = dense_picard_V(line17, spec.potential, psi1 - psi1)
    expected = dense_implicit_euler_terminal(line17, np.abs(v), psi1, 0.5, 16)
    assert_allclose(fp.psi(spec, psi1), expected, atol=1e-11)
    # a w away from u0 exercises a nontrivial elliptic solve
    w = 0.3 * psi1
    v = dense_picard_V(line17, spec.potential, w - psi1)
    expected = dense_implicit_euler_terminal(line17, np.abs(v), psi1, 0.5, 16)
    assert_allclose(fp.psi(spec, w), expected, atol=1e-11)


def test_psi_warns_outside_ball(line17):
    spec = spec_for(line17)
    with pytest.warns(RuntimeWarning):
        fp.psi(spec, 10 * spec.u0)


def test_solve_zero_initial_data(line17):
    sol = fp.solve(spec_for(line17, u0=np.zeros(line17.size)))
    assert sol.iterations == 1
    assert all(np.all(u == 0) for u in sol.trajectory.states)
    assert fp.residual_weak_form(sol) == 0.0


def test_solve_without_potential(line17):
    spec = spec_for(line17, "zero")
    sol = fp.solve(spec)
    assert_allclose(sol.w_star, fp.heat_terminal(spec), atol=1e-13)
    assert fp.residual_weak_form(sol) <= 1e-8
    assert fp.aggregate_consistency(sol)["distance"] <= 1e-12


def test_solve_certified_instance(line17):
    sol = fp.solve(spec_for(line17))
    assert fp.residual_weak_form(sol) <= 1e-8
    assert fp.psi_self_map_check(sol)["pass"]
    assert sol.elliptic_report.passed and sol.parabolic_report.passed
    assert norm_l2(line17, sol.trajectory.states[-1] - sol.w_star) <= 1e-8


def test_aggregate_consistency_is_exact_at_fixed_point():
    # the elliptic v equals dt * sum_j u^j at a converged fixed point, for every resolution
    for n, nt in ((17, 16), (33, 32)):
        g = Grid.interval(1.0, n)
        sol = fp.solve(spec_for(g, "sine", nt=nt))
        agg = fp.aggregate_consistency(sol)
        assert agg["distance"] <= 1e-10 * sol.spec.radius


def test_contraction_observed_in_certified_regime(line33):
    sol = fp.solve(spec_for(line33, "sine", tol=1e-13))
    q = sol.contraction_ratio()
    assert q is not None and q < 1


def test_damping_still_converges(line17):
    plain = fp.solve(spec_for(line17))
    damped = fp.solve(spec_for(line17, alpha=0.5))
    assert damped.iterations > plain.iterations
    assert norm_l2(line17, damped.w_star - plain.w_star) <= 1e-8


def test_outer_budget_exhausted(line17):
    with pytest.raises(fp.OuterNonConvergence) as exc:
        fp.solve(spec_for(line17, max_iter=1))
    assert len(exc.value.history) == 1
    assert exc.value.w is not None


@pytest.mark.parametrize("kw", [dict(T=0), dict(nt=0), dict(tol=0), dict(alpha=0), dict(alpha=1.5)])
def test_spec_validation(line17, kw):
    with pytest.raises(ValueError):
        spec_for(line17, **kw)


def test_certificate_values(line17):
    u0 = bump(line17)
    assert fp.certify_uniqueness(fp.ProblemSpec(line17, builtin("abs"), u0, 1.0, 4)).product == pytest.approx(1.0)
    c = fp.certify_uniqueness(fp.ProblemSpec(line17, builtin("sine"), u0, 0.5, 4))
    assert (c.K, c.M) == (1.0, pytest.approx(5.0, abs=1e-12))
    assert c.product == pytest.approx(1.25) and c.certified
    c = fp.certify_uniqueness(fp.ProblemSpec(line17, builtin("sine"), u0, 1.0, 4))
    assert c.product == pytest.approx(5.0) and not c.certified
    zero = fp.certify_uniqueness(spec_for(line17, u0=np.zeros(line17.size)))
    assert zero.product == 0 and zero.certified


def test_multistart_certified(line17):
    ms = fp.multistart(spec_for(line17, "sine"), starts=5, seed=7)
    assert len(ms.converged) == 5
    assert ms.dispersion <= 1e-7
    for w0 in ms.starts:
        assert norm_l2(line17, w0) <= ms.converged[0].spec.radius * (1 + 1e-12)


def test_multistart_zero_data(line17):
    ms = fp.multistart(spec_for(line17, u0=np.zeros(line17.size)), starts=3, seed=0)
    assert ms.dispersion == 0.0


def test_multistart_threads_match_sequential(line17):
    spec = spec_for(line17, "sine")
    seq = fp.multistart(spec, starts=4, seed=3)
    par = fp.multistart(spec, starts=4, seed=3, workers=4)
    for a, b in zip(seq.converged, par.converged):
        assert np.array_equal(a.w_star, b.w_star)


def test_multistart_uncertified_is_reported(line17):
    spec = spec_for(line17, "sine", T=2.0, max_iter=200)
    assert not fp.certify_uniqueness(spec).certified
    ms = fp.multistart(spec, starts=3, seed=1)
    assert len(ms.solutions) == 3
    assert len(ms.errors) == 3
    if ms.converged:
        assert np.isfinite(ms.dispersion)


def test_multistart_needs_two_starts(line17):
    with pytest.raises(ValueError):
        fp.multistart(spec_for(line17), starts=1)


def test_gronwall_identical_solutions(line17):
    sol = fp.solve(spec_for(line17))
    chk = fp.check_gronwall_51(sol, sol)
    assert chk.passed and chk.lhs.max() == 0 and chk.rhs.max() == 0


def test_gronwall_rejects_mismatched_problems(line17):
    a = fp.solve(spec_for(line17))
    b = fp.solve(spec_for(line17, T=0.4))
    with pytest.raises(ValueError):
        fp.check_gronwall_51(a, b)


@settings(max_examples=20)
@given(seed=st.integers(0, 2**32 - 1), name=st.sampled_from(["abs", "sine", "hyperbolic"]))
def test_gronwall_certified_pairs(seed, name):
    g = Grid.interval(1.0, 17)
    spec = spec_for(g, name, T=0.4)
    assert fp.certify_uniqueness(spec).certified
    rng = np.random.default_rng(seed)
    a = fp.solve(spec, fp.random_start(spec, rng))
    b = fp.solve(spec, fp.random_start(spec, rng))
    assert fp.check_gronwall_51(a, b).passed


@settings(max_examples=10)
@given(seed=st.integers(0, 2**32 - 1))
def test_psi_maps_ball_into_itself(seed):
    g = Grid.interval(1.0, 17)
    spec = spec_for(g, "sine", T=1.0)
    rng = np.random.default_rng(seed)
    for _ in range(10):
        w = fp.random_start(spec, rng)
        assert norm_l2(g, fp.psi(spec, w)) <= spec.radius * (1 + 1e-8)


def test_psi_stability_under_refinement():
    estimates = []
    for n, nt in ((17, 16), (33, 32)):
        g = Grid.interval(1.0, n)
        spec = spec_for(g, "sine", nt=nt)
        estimates.append(fp.psi_lipschitz_estimate(spec, fp.heat_terminal(spec)))
    assert all(np.isfinite(estimates))
    assert 0.5 <= estimates[1] / estimates[0] <= 2.0


def test_damped_picard_on_scalar_contraction():
    w, hist = fp.damped_picard(np.cos, 1.0, 1e-12, 200)
    assert w == pytest.approx(0.7390851332151607, abs=1e-11)
    assert hist[-1] <= 1e-12
