import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import eigh

from conic_andrews import (ClosedRegular, DomainError, InsufficientDataError, ModeExpansion,
                           NeumannAt, NoSolutionError, conic_to_arclength,
                           estimate_holder_exponent, graded_grid, indicial_roots,
                           regularity_exponent, solve_poisson, solve_radial_mode,
                           sphere_spectrum)
from conic_andrews.discretize import ManifoldForms, three_point_form
from conic_andrews.spectral import dyadic_samples, weighted_mean_ratio


def test_sphere_spectrum_multiplicities():
    s3 = sphere_spectrum(3, 5)
    assert [m.multiplicity for m in s3] == [2 * l + 1 for l in range(6)]
    s4 = sphere_spectrum(4, 5)
    assert [m.multiplicity for m in s4] == [(l + 1) ** 2 for l in range(6)]
    assert [m.eigenvalue for m in s4] == [l * (l + 2) for l in range(6)]


def test_indicial_roots_solve_the_indicial_equation():
    for n, beta, lam in [(4, -0.5, 3.0), (3, -0.25, 6.0), (6, -0.9, 20.0)]:
        ap, am = indicial_roots(n, beta, lam)
        for a in (ap, am):
            assert abs(a * (a - 1) + (n - 1) * a - lam / (1 + beta) ** 2) < 1e-10
    assert_allclose(indicial_roots(4, -0.5, 3.0).alpha_plus, 2.605551275463989, rtol=1e-14)
    with pytest.raises(DomainError):
        indicial_roots(4, -1.0, 3.0)


def test_regularity_branches():
    r = regularity_exponent(4, -0.25)
    assert r.holder_class == "C^{1,tau}"
    assert_allclose(r.tau_sup, 0.51661, atol=1e-5)
    assert regularity_exponent(4, -0.5).holder_class == "C^{1,1}"
    assert regularity_exponent(4, -0.75).holder_class == "C^{1,1}"
    with pytest.raises(DomainError):
        regularity_exponent(4, 0.0)


def test_three_point_eigenvalues_match_dense_solver():
    x = np.linspace(0.0, 1.0, 41)
    form = three_point_form(x, lambda t: 1 + t, lambda t: 2 + np.sin(t), lambda t: 1 + t * t)
    A = np.diag(form.diag) + np.diag(form.off, 1) + np.diag(form.off, -1)
    ref = eigh(A, np.diag(form.W), eigvals_only=True)
    lams, vecs = form.smallest_eigenpairs(4)
    assert_allclose(lams, ref[:4], rtol=1e-12)
    for lam, v in zip(lams, vecs.T):
        assert_allclose(A @ v, lam * form.W * v, atol=1e-8 * lam)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 50.0))
def test_inertia_count_matches_dense(sigma):
    x = np.linspace(0.0, 2.0, 30) ** 1.5
    form = three_point_form(x, lambda t: 0.5 + t, None, lambda t: 1 + t)
    A = np.diag(form.diag) + np.diag(form.off, 1) + np.diag(form.off, -1)
    ref = eigh(A, np.diag(form.W), eigvals_only=True)
    if np.min(np.abs(ref - sigma)) > 1e-9:
        assert form.count_below(sigma) == int(np.sum(ref < sigma))


def test_green_formula_against_power_law_solution():
    # phi = rho^m: particular solution rho^{m+2} / ((m+2)(m+n) - c).
    n, beta, degree, m = 4, -0.5, 1, 1.0
    lam = degree * (degree + n - 2)
    c = lam / (1 + beta) ** 2
    ap, _ = indicial_roots(n, beta, lam)
    D = (m + 2) * (m + n) - c
    grid = graded_grid(1.0, 1600, beta)
    sol = solve_radial_mode(degree, beta, n, lambda t: t ** m, grid, ClosedRegular(2.0))
    exact = (2.0 - 1 / D) * grid.nodes ** ap + grid.nodes ** (m + 2) / D
    assert np.max(np.abs(sol.green - exact)) < 1e-10
    assert np.max(np.abs(sol.fd - exact)) < 1e-4
    assert sol.agreement < 1e-4


@pytest.mark.parametrize("beta", [-0.25, -0.5, -0.75])
@pytest.mark.parametrize("degree", [0, 1, 2])
def test_green_and_fd_agree(beta, degree):
    grid = graded_grid(1.0, 800, beta)
    sol = solve_radial_mode(degree, beta, 4, np.cos, grid, ClosedRegular(1.0))
    assert sol.agreement < 1e-4


def test_neumann_modes():
    grid = graded_grid(1.0, 800, -0.5)
    ok = solve_radial_mode(0, -0.5, 3, lambda t: t ** 2 - 3 / 5, grid, NeumannAt(0.0))
    assert ok.agreement < 1e-5
    assert abs(np.trapezoid(grid.nodes ** 2 * ok.green, grid.nodes)) < 1e-3
    with pytest.raises(NoSolutionError):
        solve_radial_mode(0, -0.5, 3, lambda t: 1 + 0 * t, grid, NeumannAt(0.0))
    # Compatible nonzero flux: int_0^1 rho^2 drho = 1/3 = L^2 * flux.
    solve_radial_mode(0, -0.5, 3, lambda t: 1 + 0 * t, grid, NeumannAt(1 / 3))
    sol = solve_radial_mode(2, -0.5, 3, lambda t: t, grid, NeumannAt(0.3))
    assert sol.agreement < 1e-4
    with pytest.raises(DomainError):
        solve_radial_mode(1, -0.5, 3, np.cos, grid, branch="minus")


def test_holder_estimator_on_synthetic_power_laws():
    rho = 0.5 / 2.0 ** np.arange(12)
    assert_allclose(estimate_holder_exponent(rho, 1 + rho ** 0.7, u0=1.0).exponent, 0.7,
                    atol=1e-12)
    assert_allclose(estimate_holder_exponent(rho, 3 + 2 * rho ** 1.3).exponent, 1.3,
                    atol=1e-12)
    with pytest.raises(InsufficientDataError):
        estimate_holder_exponent(rho, np.ones_like(rho))
    with pytest.raises(DomainError):
        estimate_holder_exponent(np.array([1.0, 0.4, 0.3, 0.1, 0.05]), np.ones(5))


@pytest.mark.parametrize("beta", [-0.25, -0.5, -0.75])
def test_measured_tip_exponents(beta):
    grid = graded_grid(1.0, 2001, beta)
    for degree in (1, 2, 3):
        sol = solve_radial_mode(degree, beta, 4, lambda t: 0 * t, grid)
        pts, vals = dyadic_samples(sol.rho, sol.fd)
        est = estimate_holder_exponent(pts, vals, u0=0.0)
        assert abs(est.exponent - sol.roots.alpha_plus) < 0.01


def test_poisson_on_round_sphere(sphere4):
    r = sphere4.grid(801)
    # Delta cos r = -n cos r on S^n; Delta of sin r Y_1 is -n sin r Y_1.
    phi = ModeExpansion(r, {0: np.cos(r), 1: np.sin(r)})
    u = solve_poisson(sphere4, phi)
    assert np.max(np.abs(u.modes[0] + np.cos(r) / 4)) < 1e-5
    assert np.max(np.abs(u.modes[1] + np.sin(r) / 4)) < 1e-5
    assert all(rec["residual"] < 1e-10 for rec in u.info["records"])


def test_poisson_compatibility_dichotomy(sphere4):
    r = sphere4.grid(401)
    W = ManifoldForms(sphere4, r).W
    ok = np.cos(r) - np.sum(W * np.cos(r)) / np.sum(W)
    assert weighted_mean_ratio(W, ok) < 1e-14
    solve_poisson(sphere4, ModeExpansion(r, {0: ok}))
    with pytest.raises(NoSolutionError):
        solve_poisson(sphere4, ModeExpansion(r, {0: ok + 1e-6}))
    with pytest.raises(DomainError):
        solve_poisson(sphere4, ModeExpansion(r[:-1], {0: ok[:-1]}))


def test_mode_expansion_csv_round_trip():
    r = np.linspace(0, 1, 7)
    e = ModeExpansion(r, {0: np.sin(r), 3: np.exp(r) / 7})
    back = ModeExpansion.from_csv(e.to_csv())
    assert_allclose(back.r, r, rtol=0)
    for l in e.modes:
        assert_allclose(back.modes[l], e.modes[l], rtol=0)


def test_conic_to_arclength_flat_cone():
    out = conic_to_arclength(-0.5, lambda r: 0.0, lambda r: r)
    assert_allclose(out.rho, out.r ** 0.5 / 0.5, rtol=1e-12)
    assert_allclose(out.h, out.r ** 0.5, rtol=1e-12)
    assert abs(out.tip_slope - 0.5) < 1e-10


def test_conic_to_arclength_with_conformal_factor():
    for beta in (-0.25, -0.75):
        out = conic_to_arclength(beta, lambda r: 0.3 * r + r * r, np.sin)
        assert abs(out.tip_slope - (1 + beta)) < 1e-6
        assert np.all(np.diff(out.rho) > 0)
    with pytest.raises(DomainError):
        conic_to_arclength(-0.5, lambda r: math.sin(1 / r) / r, lambda r: r)
