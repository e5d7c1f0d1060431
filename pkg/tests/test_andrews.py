import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conic_andrews import (DomainError, ModeExpansion, PositivityError, SineProfile,
                           WarpedManifold, bochner_deficit, boundary_ii_integral,
                           build_perturbed, build_round_sphere,
                           first_eigenvalue, rayleigh_quotient, rescale, rigidity_check,
                           solve_poisson)
from conic_andrews.discretize import ManifoldForms
from conic_andrews.geometry import BOUNDARY, SMOOTH_CAP
from oracles import axisymmetric_oracle, oracle_modes


def mean_free(M, r, vals, forms=None):
    W = (forms or ManifoldForms(M, r)).W
    return vals - np.sum(W * vals) / np.sum(W)


@pytest.mark.parametrize("case", ["sphere", "perturbed"])
def test_rayleigh_matches_2d_oracle(case):
    M = build_round_sphere(3)
    if case == "perturbed":
        M = build_perturbed(M, 0.05)
    modes = oracle_modes(M)
    ref = axisymmetric_oracle(M, modes)
    r = M.grid(2001)
    phi = ModeExpansion(r, {l: g(r) for l, (g, _) in modes.items()})
    phi.modes[0] = mean_free(M, r, phi.modes[0])
    assert abs(rayleigh_quotient(M, phi) / ref - 1) < 1e-4


def test_rayleigh_examples(sphere3, sphere4):
    for M in (sphere3, sphere4):
        r = M.grid(2001)
        val = rayleigh_quotient(M, ModeExpansion(r, {0: mean_free(M, r, np.cos(r))}))
        assert abs(val - M.n / (M.n - 1)) < 1e-4
    r = sphere4.grid(2001)
    zonal = mean_free(sphere4, r, 5 * np.cos(r) ** 2 - 1)
    assert abs(rayleigh_quotient(sphere4, ModeExpansion(r, {0: zonal})) - 10 / 3) < 1e-4
    sectoral = ModeExpansion(r, {2: np.sin(r) ** 2})
    assert abs(rayleigh_quotient(sphere4, sectoral) - 10 / 3) < 1e-4


def test_rayleigh_preconditions(sphere4):
    r = sphere4.grid(201)
    with pytest.raises(DomainError):
        rayleigh_quotient(sphere4, ModeExpansion(r, {0: np.cos(r) + 1}))
    with pytest.raises(DomainError):
        rayleigh_quotient(sphere4, ModeExpansion(r, {1: np.zeros_like(r)}))
    concave_boundary = WarpedManifold(4, SineProfile(1.0, 0.0, 2.5), (SMOOTH_CAP, BOUNDARY))
    with pytest.raises(DomainError):
        first_eigenvalue(concave_boundary, nodes=201)
    # f = 1.2 sin r: f'(0) = 1.2 > 1, so kappa_tan < 0 and Ricci fails.
    too_wide = WarpedManifold(4, SineProfile(1.2, 0.0, 1.0), (SMOOTH_CAP, BOUNDARY))
    with pytest.raises(PositivityError):
        first_eigenvalue(too_wide, nodes=201)


def test_eigenfunction_quotient_consistency(football):
    e = first_eigenvalue(football, nodes=1001)
    F = rayleigh_quotient(football, e.eigenfunction())
    assert abs(F - e.lambda1_global) < 1e-10
    rng = np.random.default_rng(7)
    r = e.r
    f = football.profile.f(r)
    forms = ManifoldForms(football, r)
    for _ in range(100):
        modes = {}
        for l in range(0, 4):
            k = np.arange(1, 5)
            base = np.cos(np.outer(r / football.b, k) * math.pi) @ rng.standard_normal(4)
            modes[l] = f ** l * base
        modes[0] = mean_free(football, r, modes[0], forms)
        val = rayleigh_quotient(football, ModeExpansion(r, modes), forms=forms)
        assert val >= e.lambda1_global - 1e-12


def test_random_band_limited_football_above_bound(football):
    rng = np.random.default_rng(11)
    r = football.grid(2001)
    f = football.profile.f(r)
    forms = ManifoldForms(football, r)
    for _ in range(20):
        modes = {l: f ** l * np.polyval(rng.standard_normal(5), r / football.b)
                 for l in range(4)}
        modes[0] = mean_free(football, r, modes[0], forms)
        assert rayleigh_quotient(football, ModeExpansion(r, modes), forms=forms) >= 4 / 3 - 1e-6


def test_first_eigenvalue_modes(sphere4, hemisphere4):
    e = first_eigenvalue(sphere4, nodes=1001)
    # Ric^{-1} = g/3 on S^4: mode eigenvalues are Laplace eigenvalues l(l+3)/3 (mode 0 from l=1).
    assert_allclose(e.lambda1_per_mode[:3], [4 / 3, 4 / 3, 10 / 3], rtol=1e-4)
    assert e.bound_satisfied
    assert e.error_estimate > abs(e.lambda1_global - 4 / 3)
    h = first_eigenvalue(hemisphere4, nodes=1001)
    assert h.ell_star == 1


def test_scaling_invariance_of_quotient(football):
    r = football.grid(801)
    f = football.profile.f(r)
    phi = ModeExpansion(r, {0: mean_free(football, r, np.cos(r)), 2: f ** 2})
    base = rayleigh_quotient(football, phi)
    for c in (0.5, 2.0):
        M = rescale(football, c)
        scaled = ModeExpansion(c * r, {0: mean_free(M, c * r, np.cos(r)), 2: f ** 2})
        assert abs(rayleigh_quotient(M, scaled) / base - 1) < 1e-8


def _random_radial(M, rng):
    c = rng.standard_normal(4)
    w = math.pi / M.length * np.arange(1, 5)
    a = M.a
    return (lambda r: np.cos(np.outer(r - a, w)) @ c,
            lambda r: -(np.sin(np.outer(r - a, w)) * w) @ c,
            lambda r: -(np.cos(np.outer(r - a, w)) * w ** 2) @ c)


def test_bochner_identity_on_presets(presets):
    rng = np.random.default_rng(3)
    for name, M in presets.items():
        for _ in range(10):
            d = bochner_deficit(M, _random_radial(M, rng))
            assert d.residual < 10 * d.quadrature_error, name
            assert d.traceless_hessian_energy >= 0


def test_bochner_cos_r_is_pure_trace(sphere3, sphere4):
    u = (np.cos, lambda r: -np.sin(r), lambda r: -np.cos(r))
    for M in (sphere3, sphere4):
        d = bochner_deficit(M, u)
        assert abs(d.traceless_hessian_energy) < 1e-10
        assert abs(d.bochner_rhs) < 1e-10


def test_bochner_boundary_requires_neumann(hemisphere4):
    u = (np.sin, np.cos, lambda r: -np.sin(r))
    d = bochner_deficit(hemisphere4, u)
    assert d.boundary_ii_term == 0.0
    with pytest.raises(DomainError):
        bochner_deficit(hemisphere4, (np.cos, lambda r: -np.sin(r), lambda r: -np.cos(r)))
    with pytest.raises(DomainError):
        bochner_deficit(hemisphere4, u, case="closed")


def test_boundary_ii_integral(hemisphere4, cap4, sphere4):
    for M, sign in ((hemisphere4, 0), (cap4, 1)):
        r = M.grid(1001)
        e = first_eigenvalue(M, nodes=1001)
        phi = {l: e.eigenfunctions[l] for l in range(1, 4)}
        u = solve_poisson(M, ModeExpansion(r, phi))
        val = boundary_ii_integral(M, u)
        if sign == 0:
            assert abs(val) < 1e-12
        else:
            assert val > 0
    r = cap4.grid(201)
    with pytest.raises(DomainError):
        boundary_ii_integral(cap4, ModeExpansion(r, {1: np.sin(r)}))
    zero = ModeExpansion(r, {1: np.zeros_like(r)})
    assert boundary_ii_integral(cap4, zero) == 0.0
    with pytest.raises(DomainError):
        boundary_ii_integral(sphere4, ModeExpansion(sphere4.grid(11), {0: np.zeros(11)}))


def test_rigidity_models(sphere4, football, hemisphere4, cap4):
    for M, case in ((sphere4, "smooth"), (football, "C"), (hemisphere4, "hemisphere")):
        rep = rigidity_check(M, first_eigenvalue(M, nodes=1001))
        assert rep.equality, M.name
        assert rep.case == case
        assert rep.gradient_residual < 1e-3
    rep = rigidity_check(sphere4, first_eigenvalue(sphere4, nodes=1001))
    assert rep.fhat_residual < 1e-4
    strict = rigidity_check(cap4, first_eigenvalue(cap4, nodes=1001))
    assert not strict.equality
    assert strict.ratio > 10 * 1e-6


def test_rigidity_on_perturbed_sphere(perturbed4):
    # Every warped product attains the bound in degree 0 (phi = f'), so the
    # traceless Hessian of the minimizer vanishes and equality is flagged.
    e = first_eigenvalue(perturbed4, nodes=1001)
    rep = rigidity_check(perturbed4, e)
    assert rep.equality
    assert rep.ell_star == 0
    r = e.r
    fprime = perturbed4.profile.df(r)
    phi = e.eigenfunctions[0]
    assert abs(abs(np.corrcoef(phi, fprime)[0, 1]) - 1) < 1e-4
