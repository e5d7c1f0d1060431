"""Mode decomposition of the Laplacian on warped and conic manifolds.

Functions on ``M`` are expanded as ``u = sum_l u_l(r) Y_l`` over
spherical harmonics of the link ``S^{n-1}``, normalized in ``L^2`` of the
unit sphere. On the model cone ``d rho^2 + (1+beta)^2 rho^2 g_{S^{n-1}}``
each coefficient solves

    u'' + (n-1)/rho u' - lam / ((1+beta)^2 rho^2) u = phi,

whose homogeneous solutions are ``rho^{alpha_+}``, ``rho^{alpha_-}``.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import comb

from .discretize import ManifoldForms, _cell_integrals, three_point_form
from .errors import DomainError, InsufficientDataError, NoSolutionError
from .numerics import gauss_panels, nodal_derivatives, richardson_limit

__all__ = [
    "SphereMode", "IndicialPair", "GradedGrid", "RegularityReport", "ModeExpansion",
    "ClosedRegular", "NeumannAt", "RadialModeSolution", "HolderEstimate",
    "ArcLengthProfile", "MEAN_ZERO_TOL", "sphere_spectrum", "sphere_eigenvalue",
    "indicial_roots", "regularity_exponent", "graded_grid", "solve_radial_mode",
    "solve_poisson", "weighted_mean_ratio", "estimate_holder_exponent",
    "dyadic_samples", "conic_to_arclength",
]

MEAN_ZERO_TOL = 1e-10


class SphereMode(NamedTuple):
    degree: int
    eigenvalue: float
    multiplicity: int


class IndicialPair(NamedTuple):
    alpha_plus: float
    alpha_minus: float


def sphere_eigenvalue(n, degree):
    """Eigenvalue of ``-Delta`` on ``S^{n-1}`` for harmonics of the given degree."""
    return float(degree * (degree + n - 2))


def _multiplicity(n, degree):
    # Harmonic polynomials of this degree in n variables.
    if degree == 0:
        return 1
    if degree == 1:
        return n
    return int(comb(degree + n - 1, n - 1, exact=True) - comb(degree + n - 3, n - 1, exact=True))


def sphere_spectrum(n, lmax):
    if n < 3:
        raise DomainError("n must be >= 3")
    if lmax < 0:
        raise DomainError("lmax must be >= 0")
    return [SphereMode(l, sphere_eigenvalue(n, l), _multiplicity(n, l))
            for l in range(lmax + 1)]


def indicial_roots(n, beta, lam):
    if beta <= -1.0:
        raise DomainError("beta must exceed -1")
    if beta > 0.0:
        raise DomainError("beta must be <= 0")
    if lam < 0:
        raise DomainError("sphere eigenvalue must be >= 0")
    half = 0.5 * (n - 2)
    root = math.sqrt(half * half + lam / (1.0 + beta) ** 2)
    return IndicialPair(root - half, -root - half)


@dataclass(frozen=True)
class RegularityReport:
    n: int
    beta: float
    gamma1: float
    holder_class: str         # "C^{1,tau}" or "C^{1,1}"
    tau_sup: float            # tau < tau_sup (C^{1,tau}); 1.0 for C^{1,1}
    data_exponent: float
    measured: float = float("nan")

    def describe(self):
        if self.holder_class == "C^{1,1}":
            return "C^{1,1}"
        return f"C^{{1,tau}} for every tau < {self.tau_sup:.5f}"


def regularity_exponent(n, beta, gamma_data=1.0):
    """Predicted Hoelder class of solutions near a cone tip of coefficient ``beta``.

    ``gamma1 = alpha_+`` of the degree-1 modes; the class is ``C^{1,tau}``
    for all ``tau < min(gamma1 - 1, 1)`` when ``-1/2 < beta < 0`` and
    ``C^{1,1}`` when ``-1 < beta <= -1/2``.
    """
    if n < 3:
        raise DomainError("n must be >= 3")
    if not (-1.0 < beta < 0.0):
        raise DomainError("beta must lie in (-1, 0)")
    if gamma_data <= 0:
        raise DomainError("data Hoelder exponent must be positive")
    gamma1 = indicial_roots(n, beta, n - 1).alpha_plus
    if beta <= -0.5:
        return RegularityReport(n, beta, gamma1, "C^{1,1}", 1.0, gamma_data)
    return RegularityReport(n, beta, gamma1, "C^{1,tau}", min(gamma1 - 1.0, 1.0), gamma_data)


@dataclass(frozen=True)
class GradedGrid:
    """Nodes ``rho_i = L (i/N)^q``, ``i = 1..N``; the tip ``rho = 0`` is excluded."""

    nodes: np.ndarray
    q: float
    length: float

    def with_tip(self):
        return np.concatenate([[0.0], self.nodes])


def graded_grid(length, count, beta=0.0, q=None):
    if q is None:
        q = max(2.0, float(math.ceil(1.0 / (1.0 + beta) - 1e-12)))
    if q < 1:
        raise DomainError("grading exponent must be >= 1")
    i = np.arange(1, count + 1)
    return GradedGrid(length * (i / count) ** q, float(q), float(length))


@dataclass(frozen=True)
class ClosedRegular:
    """Bounded at the tip, Dirichlet value ``u(L) = value``."""

    value: float = 1.0


@dataclass(frozen=True)
class NeumannAt:
    """Bounded at the tip, prescribed slope ``u'(L) = flux``."""

    flux: float = 0.0


@dataclass
class RadialModeSolution:
    rho: np.ndarray
    green: np.ndarray
    fd: np.ndarray
    tip_value: float
    roots: IndicialPair
    agreement: float          # sup |green - fd| / sup |green|

    def spline(self, which="green"):
        vals = self.green if which == "green" else self.fd
        return CubicSpline(np.log(self.rho), vals)

    def record(self, mode):
        return {"mode": mode, "residual": self.agreement,
                "alpha_plus": self.roots.alpha_plus, "alpha_minus": self.roots.alpha_minus}


def _panel_cumulative(nodes, fn, npts=6):
    pts, wts = gauss_panels(nodes, npts)
    return np.concatenate([[0.0], np.cumsum(np.sum(fn(pts) * wts, axis=1))])


def solve_radial_mode(mode, beta, n, rhs, grid, bc=ClosedRegular(), branch="plus"):
    """Solve one spherical-harmonic mode on the model cone two ways.

    ``rhs`` is a vectorized callable ``phi(rho)``. The variation-of-constants
    formula (bounded ``alpha_+`` branch) is evaluated by Gauss quadrature;
    the three-point scheme on ``grid`` (tip node added, natural condition)
    provides the independent finite-difference solution.

    For degree 0 with ``NeumannAt`` the compatibility
    ``int_0^L phi rho^{n-1} = L^{n-1} flux`` is required (``NoSolutionError``
    otherwise) and both solutions are normalized to weighted mean zero.
    """
    if branch != "plus":
        raise DomainError("only the bounded alpha_+ branch is admissible at the tip")
    if isinstance(mode, SphereMode):
        degree, lam = mode.degree, mode.eigenvalue
    else:
        degree, lam = int(mode), sphere_eigenvalue(n, int(mode))
    ap, am = roots = indicial_roots(n, beta, lam)
    A = ap - am
    c_pot = lam / (1.0 + beta) ** 2
    full = grid.with_tip()
    rho = grid.nodes
    L = full[-1]

    def phi(x):
        return np.asarray(rhs(x), dtype=float) * np.ones_like(x)

    I2 = _panel_cumulative(full, lambda t: t ** (ap + n - 1) * phi(t))[1:]
    # Accumulated from L inward so the singular tip panel is never touched.
    pts, wts = gauss_panels(full, 6)
    panels = np.sum(pts ** (am + n - 1) * phi(pts) * wts, axis=1)
    I1 = -np.append(np.cumsum(panels[::-1])[::-1][1:], 0.0)
    v = (rho ** ap * I1 - rho ** am * I2) / A

    weight_mass = _panel_cumulative(full, lambda t: t ** (n - 1))[-1]
    if degree == 0 and isinstance(bc, NeumannAt):
        total = I2[-1]
        phi_norm = math.sqrt(_panel_cumulative(full, lambda t: t ** (n - 1) * phi(t) ** 2)[-1])
        gap = abs(total - L ** (n - 1) * bc.flux)
        if gap > MEAN_ZERO_TOL * math.sqrt(weight_mass) * max(phi_norm, 1e-300) \
                and gap > 0.0:
            raise NoSolutionError(
                f"degree-0 Neumann problem incompatible: weighted mean gap {gap:.3e}")

    if isinstance(bc, ClosedRegular):
        c = (bc.value - v[-1]) / L ** ap
        green = c * rho ** ap + v
    elif isinstance(bc, NeumannAt):
        if degree == 0:
            green = v.copy()
        else:
            dv = (ap * L ** (ap - 1) * I1[-1] - am * L ** (am - 1) * I2[-1]) / A
            c = (bc.flux - dv) / (ap * L ** (ap - 1))
            green = c * rho ** ap + v
    else:
        raise DomainError(f"unknown boundary condition {bc!r}")

    form = three_point_form(full, lambda t: t ** (n - 1),
                            (lambda t: c_pot * t ** (n - 3)) if c_pot else None,
                            lambda t: t ** (n - 1))
    load = -_cell_integrals(full, lambda t: t ** (n - 1) * phi(t), 6)
    if isinstance(bc, ClosedRegular):
        fd = form.solve_dirichlet_last(load, bc.value)
    else:
        load[-1] += L ** (n - 1) * bc.flux
        if degree == 0:
            fd = form.solve_with_mean_constraint(load)
        else:
            fd = form.solve(load)

    if degree == 0 and isinstance(bc, NeumannAt):
        # Same normalization for both: discrete weighted mean zero.
        w = form.W
        green_full = np.concatenate([[_green_tip(green, rho)], green])
        green = green - np.sum(w * green_full) / np.sum(w)

    agreement = float(np.max(np.abs(green - fd[1:])) / max(np.max(np.abs(green)), 1e-300))
    return RadialModeSolution(rho, green, fd[1:], float(fd[0]), roots, agreement)


def _green_tip(vals, rho):
    # Tip value for the normalization only: quadratic extrapolation.
    return float(np.polyval(np.polyfit(rho[:3], vals[:3], 2), 0.0))


@dataclass
class ModeExpansion:
    """Radial coefficients ``u_l(r)`` on a shared node array.

    ``modes`` maps harmonic degree to samples; each degree stands for one
    L^2-normalized harmonic of that degree.
    """

    r: np.ndarray
    modes: dict
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.modes = {int(l): np.asarray(v, dtype=float) for l, v in self.modes.items()}
        for l, v in self.modes.items():
            if v.shape != self.r.shape:
                raise DomainError(f"mode {l} has {v.shape} samples for {self.r.shape} nodes")

    def to_csv(self):
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["degree", "node", "r", "value"])
        for l in sorted(self.modes):
            for i, (ri, vi) in enumerate(zip(self.r, self.modes[l])):
                out.writerow([l, i, f"{ri:.17g}", f"{vi:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.DictReader(io.StringIO(text)))
        degrees = sorted({int(row["degree"]) for row in rows})
        r = np.array([float(row["r"]) for row in rows if int(row["degree"]) == degrees[0]])
        modes = {l: np.array([float(row["value"]) for row in rows if int(row["degree"]) == l])
                 for l in degrees}
        return cls(r, modes)


def _check_grid(M, r):
    if (len(r) < 5 or np.any(np.diff(r) <= 0)
            or not np.isclose(r[0], M.a, rtol=0, atol=1e-12 * M.length)
            or not np.isclose(r[-1], M.b, rtol=0, atol=1e-12 * M.length)):
        raise DomainError("mode grid mismatch: nodes must increase from a to b")


def weighted_mean_ratio(W, values):
    """``|int phi dv| / (||phi||_{L^2} Vol^{1/2})`` for lumped weights ``W``."""
    norm = math.sqrt(float(np.sum(W * values ** 2)) * float(np.sum(W)))
    if norm == 0.0:
        return 0.0
    return abs(float(np.sum(W * values))) / norm


def solve_poisson(M, phi, forms=None):
    """Solve ``Delta u = phi`` mode by mode on the warped manifold ``M``.

    Tips carry the natural (bounded) condition, Boundary ends the Neumann
    condition. Degree 0 requires the weighted mean of ``phi`` to vanish to
    ``MEAN_ZERO_TOL`` (relative); its solution is normalized to mean zero.
    """
    r = phi.r
    _check_grid(M, r)
    if forms is None:
        forms = ManifoldForms(M, r)
    out, records = {}, []
    for degree in sorted(phi.modes):
        vals = phi.modes[degree]
        form = forms.laplace_form(sphere_eigenvalue(M.n, degree))
        load = -form.W * vals
        if degree == 0:
            ratio = weighted_mean_ratio(form.W, vals)
            if ratio > MEAN_ZERO_TOL:
                raise NoSolutionError(
                    f"Delta u = phi needs int phi dv = 0 (relative mean {ratio:.3e})")
            load -= form.W * np.sum(load) / np.sum(form.W)
            u = form.solve_with_mean_constraint(load)
        else:
            u = form.solve(load)
        resid = form.apply(u) - load
        records.append({"mode": degree, "residual": float(np.max(np.abs(resid))
                                                          / max(np.max(np.abs(load)), 1e-300))})
        out[degree] = u
    return ModeExpansion(r, out, info={"records": records})


@dataclass
class HolderEstimate:
    exponent: float
    stderr: float
    r_squared: float
    levels: int

    def as_dict(self):
        return dict(self.__dict__)


def dyadic_samples(rho, u, rho_top=None, levels=16, max_rel_spacing=0.01):
    """Interpolate ``u(rho)`` at ``rho_top / 2^j``.

    Only the part of the grid with local spacing ``h / rho <= max_rel_spacing``
    is used, where a second-order scheme resolves power laws to well below
    the slope tolerance.
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    if rho_top is None:
        rho_top = 0.25 * rho[-1]
    h = np.diff(rho)
    rel = np.concatenate([[h[0]], h]) / rho
    fine = rho[rel <= max_rel_spacing]
    if not len(fine):
        raise InsufficientDataError("grid too coarse for dyadic sampling")
    lowest = fine[0]
    pts = rho_top / 2.0 ** np.arange(levels)
    pts = pts[pts >= lowest]
    if np.all(u > 0) or np.all(u < 0):
        # Log-log interpolation is exact for a pure power law.
        sign = np.sign(u[0])
        spline = CubicSpline(np.log(rho), np.log(np.abs(u)))
        return pts, sign * np.exp(spline(np.log(pts)))
    spline = CubicSpline(np.log(rho), u)
    return pts, spline(np.log(pts))


def estimate_holder_exponent(rho, u, u0=None, min_levels=4):
    """Slope of ``log |u(rho) - u(0+)|`` against ``log rho`` on a dyadic sequence.

    With ``u0`` unknown, successive differences ``u(rho_j) - u(rho_{j+1})``
    are used instead (same exponent for a power-law leading term).
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    order = np.argsort(rho)[::-1]
    rho, u = rho[order], u[order]
    if len(rho) > 1:
        ratios = rho[:-1] / rho[1:]
        if not np.allclose(ratios, ratios[0], rtol=1e-6):
            raise DomainError("samples must form a geometric (dyadic) sequence")
    if u0 is None:
        y, x = np.abs(np.diff(u)), rho[:-1]
    else:
        y, x = np.abs(u - u0), rho
    # Roundoff floor relative to the data the differences are taken from.
    ref = np.max(np.abs(u)) if u0 is None else abs(u0)
    floor = 1e-13 * ref if ref > 0 else np.finfo(float).tiny
    keep = y > floor
    if keep.sum() < min_levels:
        raise InsufficientDataError(f"only {int(keep.sum())} resolved dyadic levels")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    coef, res, *_ = np.polyfit(lx, ly, 1, full=True)
    fit = np.polyval(coef, lx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum((ly - fit) ** 2))
    dof = max(len(lx) - 2, 1)
    stderr = math.sqrt(ss_res / dof / max(float(np.sum((lx - lx.mean()) ** 2)), 1e-300))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return HolderEstimate(float(coef[0]), stderr, r2, int(keep.sum()))


@dataclass
class ArcLengthProfile:
    r: np.ndarray
    rho: np.ndarray
    h: np.ndarray
    tip_slope: float
    tip_slope_error: float


def _check_decay(beta, w, r_max):
    # |r^{-k beta} d^k w| must stay bounded as r -> 0 (k = 0, 1, 2).
    r = r_max * 2.0 ** -np.arange(2, 22)
    vals = []
    for x in r:
        h = 0.05 * x
        st = x + h * np.arange(-2, 3)
        d = np.array([w(s) for s in st], dtype=float)
        d1 = (d[0] - 8 * d[1] + 8 * d[3] - d[4]) / (12 * h)
        d2 = (-d[0] + 16 * d[1] - 30 * d[2] + 16 * d[3] - d[4]) / (12 * h * h)
        vals.append([abs(d[2]), x ** (-beta) * abs(d1), x ** (-2 * beta) * abs(d2)])
    vals = np.array(vals)
    if not np.all(np.isfinite(vals)):
        raise DomainError("conformal factor is not finite near the tip")
    head, deep = vals[:4].max(axis=0), vals[-4:].max(axis=0)
    if np.any(deep > 10.0 * head + 1.0):
        raise DomainError("conformal factor violates the weighted decay bounds")


def conic_to_arclength(beta, w, f0, r_max=1.0, count=400):
    """Arc-length polar form of ``r^{2 beta} e^{2 w} (dr^2 + f0(r)^2 g_{S^{n-1}})``.

    ``rho(r) = int_0^r t^beta e^{w(t)} dt`` is computed after the substitution
    ``t = s^{1/(1+beta)}`` (smooth integrand); ``h = e^{w} r^beta f0``.
    ``tip_slope`` is the extrapolated limit of ``h / rho`` (``1 + beta``).
    """
    if not (-1.0 < beta <= 0.0):
        raise DomainError("beta must lie in (-1, 0]")
    if beta < 0:
        _check_decay(beta, w, r_max)
    e = 1.0 + beta
    s_nodes = np.linspace(0.0, r_max ** e, count + 1)
    pts, wts = gauss_panels(s_nodes, 8)
    integrand = np.exp(np.vectorize(w)(pts ** (1.0 / e)))
    rho_nodes = np.concatenate([[0.0], np.cumsum(np.sum(integrand * wts, axis=1))]) / e
    r = s_nodes ** (1.0 / e)
    if np.any(np.diff(rho_nodes) <= 0):
        raise DomainError("rho(r) is not strictly increasing")
    wv = np.vectorize(w)(r[1:])
    h = np.exp(wv) * r[1:] ** beta * np.asarray(f0(r[1:]), dtype=float)

    probe = r_max * 0.05 * 2.0 ** -np.arange(8)
    ratios = []
    for x in probe:
        pp, pw = gauss_panels(np.array([0.0, x ** e]), 8)
        rx = np.sum(np.exp(np.vectorize(w)(pp ** (1.0 / e))) * pw) / e
        hx = math.exp(w(x)) * x ** beta * float(f0(np.array([x]))[0])
        ratios.append(hx / rx)
    slope, err = richardson_limit(np.array(ratios), ratio=2.0)
    return ArcLengthProfile(r[1:], rho_nodes[1:], h, slope, err)
