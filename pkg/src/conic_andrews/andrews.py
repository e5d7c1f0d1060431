"""The Ric^{-1}-weighted Rayleigh quotient and its sharp lower bound.

For mean-zero ``phi`` on a closed, conic, or weakly convex warped manifold
with positive Ricci curvature,

    F(phi) = int Ric^{-1}(grad phi, grad phi) dv / int phi^2 dv >= n/(n-1).

On ``dr^2 + f^2 g_{S^{n-1}}`` the Ricci endomorphism is diagonal with
eigenvalues ``rho_rad`` (radial) and ``rho_tan`` (tangential), so ``F``
splits over spherical-harmonic degrees into weighted Sturm-Liouville forms.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .discretize import ManifoldForms
from .errors import DomainError, PositivityError
from .geometry import boundary_convexity, check_positive_ricci, integrate_radial
from .library import validate_manifold
from .numerics import nodal_derivatives
from .spectral import (MEAN_ZERO_TOL, ModeExpansion, solve_poisson, sphere_eigenvalue,
                       weighted_mean_ratio)

__all__ = [
    "EigenResult", "DeficitReport", "RigidityReport", "andrews_bound",
    "rayleigh_quotient", "first_eigenvalue", "bochner_deficit",
    "boundary_ii_integral", "traceless_hessian_energy", "rigidity_check",
    "EQUALITY_TOL",
]

EQUALITY_TOL = 1e-6


def andrews_bound(n):
    return n / (n - 1.0)


def _require_positive(M):
    rep = check_positive_ricci(M)
    if not rep.passed:
        raise PositivityError(
            f"Ricci curvature not positive on {M.name}: min {rep.min_rho:.4g} "
            f"at r={rep.min_location:.6g}", location=rep.min_location)


def _require_convex(M):
    for key, val in boundary_convexity(M).items():
        if val < -1e-12:
            raise DomainError(
                f"boundary at end {key!r} is not weakly convex (II = {val:.4g} < 0)")


def rayleigh_quotient(M, phi, forms=None, check=True):
    """Discrete ``F(phi)`` for a mode expansion on nodes spanning ``[a, b]``.

    Closed and conic manifolds require the degree-0 part to have weighted
    mean zero (``DomainError`` otherwise); with a Boundary end the mean is
    projected out, which is the normalization used there.
    """
    if check:
        _require_positive(M)
    if forms is None:
        if (not np.isclose(phi.r[0], M.a) or not np.isclose(phi.r[-1], M.b)
                or np.any(np.diff(phi.r) <= 0)):
            raise DomainError("mode grid mismatch: nodes must increase from a to b")
        forms = ManifoldForms(M, phi.r)
    W = forms.W
    num = den = 0.0
    for degree in sorted(phi.modes):
        vals = phi.modes[degree]
        if degree == 0:
            if M.has_boundary:
                vals = vals - np.sum(W * vals) / np.sum(W)
            elif weighted_mean_ratio(W, vals) > MEAN_ZERO_TOL:
                raise DomainError("degree-0 part of phi must have weighted mean zero")
        form = forms.ricci_form(sphere_eigenvalue(M.n, degree))
        num += form.energy(vals)
        den += form.mass(vals)
    if den <= 0.0:
        raise DomainError("phi vanishes identically (zero denominator)")
    return num / den


@dataclass
class EigenResult:
    """Per-degree first eigenvalues of the quotient and their minimum."""

    n: int
    lambda1_per_mode: list
    lambda1_global: float
    ell_star: int
    r: np.ndarray
    eigenfunctions: dict
    error_per_mode: list
    error_estimate: float
    extrapolated: float
    nodes: int
    bound: float = field(init=False)

    def __post_init__(self):
        self.bound = andrews_bound(self.n)

    @property
    def margin(self):
        return self.lambda1_global - self.bound

    @property
    def bound_satisfied(self):
        return self.lambda1_global >= self.bound - self.error_estimate

    def eigenfunction(self):
        """The minimizing eigenfunction as a single-degree ``ModeExpansion``."""
        return ModeExpansion(self.r, {self.ell_star: self.eigenfunctions[self.ell_star]})

    def as_dict(self):
        return {
            "n": self.n, "nodes": self.nodes, "lambda1_global": self.lambda1_global,
            "lambda1_per_mode": list(self.lambda1_per_mode), "ell_star": self.ell_star,
            "error_estimate": self.error_estimate, "extrapolated": self.extrapolated,
            "bound": self.bound, "margin": self.margin,
            "bound_satisfied": bool(self.bound_satisfied),
        }


def _mode_eigenpairs(forms, n, lmax, vectors):
    lams, vecs = [], {}
    for degree in range(lmax + 1):
        form = forms.ricci_form(sphere_eigenvalue(n, degree))
        # Degree 0: constants are an exact zero mode, skip to the next.
        index = 1 if degree == 0 else 0
        lam = form.eigenvalue(index)
        lams.append(lam)
        if vectors:
            v = form.eigenvector(lam)
            if degree == 0:
                v -= np.sum(form.W * v) / np.sum(form.W)
                v /= math.sqrt(form.mass(v))
            if v[np.argmax(np.abs(v))] < 0:
                v = -v
            vecs[degree] = v
    return lams, vecs


def first_eigenvalue(M, nodes=2001, lmax=4):
    """Smallest eigenvalue of the quotient over degrees ``0..lmax``.

    Solved on ``nodes`` and on a half-resolution grid; ``error_estimate`` is
    the difference between the two (conservative for a second-order scheme)
    and ``extrapolated`` the Richardson value.
    """
    if nodes < 11:
        raise DomainError("need at least 11 radial nodes")
    if lmax < 1:
        raise DomainError("lmax must be >= 1")
    _require_positive(M)
    if M.has_boundary:
        _require_convex(M)
    r = M.grid(nodes)
    fine, vecs = _mode_eigenpairs(ManifoldForms(M, r), M.n, lmax, True)
    coarse, _ = _mode_eigenpairs(ManifoldForms(M, M.grid((nodes + 1) // 2)), M.n, lmax, False)
    errs = [abs(a - b) for a, b in zip(fine, coarse)]
    ell = int(np.argmin(fine))
    lam = fine[ell]
    return EigenResult(
        n=M.n, lambda1_per_mode=fine, lambda1_global=lam, ell_star=ell, r=r,
        eigenfunctions=vecs, error_per_mode=errs, error_estimate=errs[ell],
        extrapolated=lam + (lam - coarse[ell]) / 3.0, nodes=nodes)


@dataclass
class DeficitReport:
    traceless_hessian_energy: float
    bochner_rhs: float
    boundary_ii_term: float
    residual: float
    quadrature_error: float

    def as_dict(self):
        return dict(self.__dict__)


def _radial_samples(M, r, u):
    uf, duf, d2uf = u
    vals = [np.asarray(g(r), dtype=float) * np.ones_like(r) for g in (uf, duf, d2uf)]
    return vals


def bochner_deficit(M, u, case=None, panels=2048, neumann_tol=1e-8):
    """Both sides of the integrated Bochner identity for a radial ``u``.

    ``u`` is a triple of vectorized callables ``(u, u', u'')``. ``case`` is
    ``"closed"``, ``"conic"`` or ``"boundary"`` (inferred when omitted); the
    boundary case requires ``u' = 0`` at every Boundary end.
    """
    inferred = ("boundary" if M.has_boundary else
                "conic" if any(e.kind == "cone" for e in M.ends) else "closed")
    case = inferred if case is None else case.lower()
    if case != inferred:
        raise DomainError(f"case {case!r} does not match manifold ({inferred})")
    n = M.n
    p = M.profile
    if case == "boundary":
        for key, end, x in (("a", M.ends[0], M.a), ("b", M.ends[1], M.b)):
            if end.kind == "boundary":
                slope = float(np.asarray(u[1](np.array([x])))[0])
                if abs(slope) > neumann_tol:
                    raise DomainError(f"Neumann condition violated at end {key!r}: "
                                      f"u' = {slope:.3e}")

    def pieces(r):
        _, du, d2u = _radial_samples(M, r, u)
        fv, dfv = p.f(r), p.df(r)
        kr, _ = M.kappas(r, include_boundary=True)
        lap = d2u + (n - 1) * dfv / fv * du
        return du, d2u, fv, dfv, (n - 1) * kr, lap

    def traceless(r):
        du, d2u, fv, dfv, _, _ = pieces(r)
        return (n - 1) / n * (d2u - dfv / fv * du) ** 2

    def rhs(r):
        du, _, _, _, rho_rad, lap = pieces(r)
        return (n - 1) / n * lap ** 2 - rho_rad * du ** 2

    try:
        T = integrate_radial(M, traceless, panels)
        B = integrate_radial(M, rhs, panels)
    except (DomainError, FloatingPointError) as exc:
        raise DomainError(f"non-finite integrand near a tip (insufficient decay): {exc}")
    # Radial gradient is normal to the boundary: the II term vanishes.
    ii = 0.0
    return DeficitReport(T.value, B.value, ii, abs(T.value - B.value + ii), T.error + B.error)


def boundary_ii_integral(M, u, neumann_tol=1e-4):
    """``int_{dM} II(grad u, grad u) dsigma`` for a mode expansion ``u``.

    Only tangential gradients contribute; degree ``l`` gives
    ``II * lam_l u_l(L)^2 f(L)^{n-3}`` (harmonics normalized on the unit
    sphere), with ``II`` the inner-normal convexity of the end.
    """
    conv = boundary_convexity(M)
    if not conv:
        raise DomainError(f"{M.name} has no Boundary end")
    n = M.n
    total = 0.0
    for key, kappa in conv.items():
        idx = 0 if key == "a" else -1
        x = M.a if key == "a" else M.b
        fx = float(M.profile.f(x))
        for degree, vals in sorted(u.modes.items()):
            du = nodal_derivatives(u.r, vals, order=1)[0, idx]
            scale = max(np.max(np.abs(vals)), 1e-300) / M.length
            if abs(du) > neumann_tol * scale:
                raise DomainError(f"Neumann condition violated for degree {degree} "
                                  f"at end {key!r}: u' = {du:.3e}")
            total += kappa * sphere_eigenvalue(n, degree) * vals[idx] ** 2 * fx ** (n - 3)
    return total


def _resolved(r, rel=1e-7):
    # Nodes whose neighbour spacing is far above roundoff; graded tips
    # cluster nodes below what a finite-difference stencil can resolve.
    h = np.diff(r)
    ok = np.zeros(len(r), dtype=bool)
    ok[1:-1] = np.minimum(h[:-1], h[1:]) > rel * (r[-1] - r[0])
    return ok


def traceless_hessian_energy(M, r, degree, u, W=None):
    """``int |Hess u - (Delta u / n) g|^2 dv`` for ``u = u_l(r) Y_l``.

    Nodal derivatives of the samples ``u`` on ``r``; the integral uses the
    lumped weights ``W`` and skips end nodes and nodes packed too tightly
    against a tip to differentiate (their volume weight is negligible).
    """
    n = M.n
    lam = sphere_eigenvalue(n, degree)
    du, d2u = nodal_derivatives(r, u, order=2)
    inner = _resolved(r)
    x = r[inner]
    fv, dfv = M.profile.f(x), M.profile.df(x)
    u0, u1, u2 = u[inner], du[inner], d2u[inner]
    lap = u2 + (n - 1) * dfv / fv * u1 - lam * u0 / fv ** 2
    D = lap / n
    S = dfv * u1 / fv - lam * u0 / ((n - 1) * fv ** 2) - D
    tau = (n - 2) * lam * (lam - (n - 1)) / (n - 1)
    dens = ((u2 - D) ** 2 + 2 * lam * (u1 - u0 * dfv / fv) ** 2 / fv ** 2
            + tau * (u0 / fv ** 2) ** 2 + (n - 1) * S ** 2)
    if W is None:
        W = ManifoldForms(M, r).W
    # W already carries f^{n-1}.
    return float(np.sum(W[inner] * dens))


@dataclass
class RigidityReport:
    equality: bool
    traceless_energy: float
    laplacian_norm: float
    ratio: float
    gradient_residual: float
    fhat_residual: float
    case: str
    betas: tuple
    ell_star: int
    margin: float

    def as_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def rigidity_check(M, eig, tol=EQUALITY_TOL):
    """Evaluate the equality conditions on the minimizing eigenfunction.

    (i) solve ``Delta u = phi_1`` and flag equality when the traceless
    Hessian energy is below ``tol * int (Delta u)^2``; (ii) residual of
    ``grad phi + n/(n-1) Ric(grad u) = 0``; (iii) compare ``|grad u|`` with
    ``f`` up to a constant factor (degree 0 only); (iv) classify the ends.
    """
    n = M.n
    ell = eig.ell_star
    r = eig.r
    forms = ManifoldForms(M, r)
    W = forms.W
    phi = eig.eigenfunctions[ell]
    sol = solve_poisson(M, ModeExpansion(r, {ell: phi}), forms=forms).modes[ell]
    energy = traceless_hessian_energy(M, r, ell, sol, W)
    lap_norm = float(np.sum(W * phi ** 2))
    ratio = energy / lap_norm

    inner = _resolved(r)
    x = r[inner]
    kr, kt = M.kappas(x)
    rho_rad, rho_tan = (n - 1) * kr, kr + (n - 2) * kt
    dphi = nodal_derivatives(r, phi, order=1)[0][inner]
    du = nodal_derivatives(r, sol, order=1)[0][inner]
    lam = sphere_eigenvalue(n, ell)
    c = n / (n - 1.0)
    Wi = W[inner]
    res = np.sum(Wi * (dphi + c * rho_rad * du) ** 2)
    ref = np.sum(Wi * dphi ** 2)
    if lam:
        fv = M.profile.f(x)
        res += lam * np.sum(Wi * ((phi[inner] + c * rho_tan * sol[inner]) / fv) ** 2)
        ref += lam * np.sum(Wi * (phi[inner] / fv) ** 2)
    grad_res = math.sqrt(res / ref)

    if ell == 0:
        fv = M.profile.f(x)
        g = np.abs(du)
        scale = np.sum(Wi * g * fv) / np.sum(Wi * fv * fv)
        fhat_res = math.sqrt(np.sum(Wi * (g - scale * fv) ** 2) / np.sum(Wi * g ** 2))
    else:
        fhat_res = float("nan")

    cls = validate_manifold(M)
    equality = bool(ratio < tol)
    case = cls.case
    if case == "boundary" and equality:
        case = "hemisphere"
    return RigidityReport(equality, energy, lap_norm, ratio, grad_res, fhat_res, case,
                          cls.declared_betas, ell, eig.margin)
