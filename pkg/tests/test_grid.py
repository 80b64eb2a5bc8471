import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from nonlocal_parabolic.grid import (
    Grid, GridMismatch, eigenpairs, eigenvalue_1d, inner, laplacian_apply, norm_h1_semi, norm_inf, norm_l2,
)


def test_spacing_and_diameter():
    g = Grid.rectangle(3.0, 4.0, 7, 9)
    assert g.spacing == (0.5, 0.5)
    assert g.diameter() == pytest.approx(5.0)
    assert g.size == 5 * 7
    assert Grid.interval(2.0, 5).diameter() == 2.0


def test_boundary_mask_is_box_boundary():
    g = Grid.rectangle(1.0, 1.0, 5, 4)
    mask = g.boundary_mask()
    assert mask.sum() == 5 * 4 - 3 * 2
    assert not mask[1:-1, 1:-1].any()


@pytest.mark.parametrize("nodes", [(2,), (5, 2)])
def test_rejects_degenerate_grids(nodes):
    with pytest.raises(ValueError):
        Grid((1.0,) * len(nodes), nodes)


def test_stencil_by_hand():
    g = Grid.interval(1.0, 5)  # h = 0.25, three interior nodes
    assert_allclose(laplacian_apply(g, [0.0, 1.0, 0.0]), [-16.0, 32.0, -16.0])
    assert_allclose(laplacian_apply(g, np.zeros(3)), 0.0)


def test_grid_mismatch(line17):
    with pytest.raises(GridMismatch):
        laplacian_apply(line17, np.zeros(4))
    with pytest.raises(GridMismatch):
        inner(line17, np.zeros(15), np.zeros(14))


def test_first_eigenpair_closed_form(line17):
    h = line17.spacing[0]
    lam, psi = eigenpairs(line17, 1)[0]
    assert lam == pytest.approx(2 / h**2 * (1 - np.cos(np.pi * h)), rel=1e-14)
    x = line17.coordinates()[:, 0]
    # proportional to sin(pi x) with unit discrete norm
    assert_allclose(psi, np.sqrt(2) * np.sin(np.pi * x), atol=1e-14)
    assert norm_l2(line17, psi) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("grid", [Grid.interval(1.0, 17), Grid.interval(2.5, 12), Grid.rectangle(1.0, 2.0, 9, 13)])
def test_eigenpairs_residual_and_orthonormality(grid):
    pairs = eigenpairs(grid, 6)
    lams = [lam for lam, _ in pairs]
    assert lams == sorted(lams)
    for lam, psi in pairs:
        assert norm_l2(grid, laplacian_apply(grid, psi) - lam * psi) <= 1e-12 * max(1.0, lam)
    gram = np.array([[inner(grid, a, b) for _, b in pairs] for _, a in pairs])
    assert_allclose(gram, np.eye(6), atol=1e-12)


def test_eigenpairs_match_dense_spectrum(rect):
    dense = np.linalg.eigvalsh(rect.laplacian.toarray())
    ours = [lam for lam, _ in eigenpairs(rect, 10)]
    assert_allclose(ours, dense[:10], rtol=1e-12)


def test_eigenpairs_too_many(line17):
    with pytest.raises(ValueError):
        eigenpairs(line17, 16)


def test_norms_basic(rect, rng):
    a = rng.standard_normal(rect.size)
    assert inner(rect, a, a) == pytest.approx(norm_l2(rect, a) ** 2)
    assert norm_inf(rect, a) == np.abs(a).max()
    # summation by parts: ||grad a||^2 = (L a, a)
    assert norm_h1_semi(rect, a) ** 2 == pytest.approx(inner(rect, laplacian_apply(rect, a), a), rel=1e-12)


fields_1d = st.integers(4, 40).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.floats(-10, 10), min_size=n - 2, max_size=n - 2))
)


@given(fields_1d, st.floats(0.1, 10.0))
def test_discrete_poincare_1d(data, length):
    n, values = data
    g = Grid.interval(length, n)
    w = np.array(values)
    assert norm_l2(g, w) <= g.diameter() * norm_h1_semi(g, w) + 1e-12


def test_discrete_poincare_random_2d(rect, rng):
    for _ in range(100):
        w = rng.standard_normal(rect.size) * rng.uniform(0.1, 10)
        assert norm_l2(rect, w) <= rect.diameter() * norm_h1_semi(rect, w)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_laplacian_linear_symmetric_positive(alpha, beta, seed):
    g = Grid.rectangle(1.0, 1.5, 6, 8)
    r = np.random.default_rng(seed)
    a, b = r.standard_normal((2, g.size))
    L = lambda w: laplacian_apply(g, w)  # noqa: E731
    assert_allclose(L(alpha * a + beta * b), alpha * L(a) + beta * L(b), atol=1e-10 * (1 + abs(alpha) + abs(beta)) * 100)
    lhs, rhs = inner(g, L(a), b), inner(g, a, L(b))
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1.0)
    lam1 = eigenpairs(g, 1)[0][0]
    assert inner(g, L(a), a) >= lam1 * inner(g, a, a) * (1 - 1e-12)


def test_eigenvalue_helper():
    assert eigenvalue_1d(3, 0.25, 1) == pytest.approx(32 * (1 - np.cos(np.pi / 4)))
