"""Concrete warped manifolds: spheres, hemispheres, footballs, perturbations."""

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConvergenceError, DomainError, PositivityError
from .geometry import (BOUNDARY, SMOOTH_CAP, WarpedManifold, check_positive_ricci,
                       cone, cone_angle)
from .profiles import FootballProfile, PerturbedProfile, ScaledProfile, SineProfile

__all__ = [
    "FootballSpec", "build_round_sphere", "build_hemisphere", "build_cap",
    "build_football", "build_perturbed", "rescale", "validate_manifold",
    "ClassificationReport",
]


@dataclass(frozen=True)
class FootballSpec:
    n: int
    k: int
    beta: float
    c0: float
    c2: float
    f_max: float
    total_length: float

    def as_dict(self):
        return asdict(self)


def _check_dim(n):
    if int(n) != n or n < 3:
        raise DomainError("dimension n must be an integer >= 3")


def build_round_sphere(n):
    _check_dim(n)
    return WarpedManifold(n, SineProfile(), (SMOOTH_CAP, SMOOTH_CAP),
                          name=f"round_sphere(n={n})")


def build_hemisphere(n):
    _check_dim(n)
    return WarpedManifold(n, SineProfile(1.0, 0.0, 0.5 * math.pi),
                          (SMOOTH_CAP, BOUNDARY), name=f"hemisphere(n={n})")


def build_cap(n, radius):
    """Geodesic ball ``[0, radius]`` of the unit round sphere (convex for radius < pi/2)."""
    _check_dim(n)
    if not (0.0 < radius < math.pi):
        raise DomainError("cap radius must lie in (0, pi)")
    return WarpedManifold(n, SineProfile(1.0, 0.0, radius), (SMOOTH_CAP, BOUNDARY),
                          name=f"cap(n={n}, radius={radius:.6g})")


def build_football(n, beta, allow_degenerate=False):
    """Constant-``sigma_{n/2}`` conic sphere with two tips of cone coefficient ``beta``.

    ``beta = 0`` (the round sphere) is accepted only with ``allow_degenerate``.
    """
    if n % 2 or n < 4:
        raise DomainError("football construction needs even n >= 4")
    if not (-1.0 < beta < 0.0) and not (allow_degenerate and beta == 0.0):
        raise DomainError("beta must lie in (-1, 0)")
    prof = FootballProfile(n, beta)
    ends = (SMOOTH_CAP, SMOOTH_CAP) if beta == 0.0 else (cone(beta), cone(beta))
    M = WarpedManifold(n, prof, ends, name=f"football(n={n}, beta={beta:g})")
    spec = FootballSpec(n=n, k=prof.k, beta=beta, c0=prof.c0, c2=prof.c2,
                        f_max=prof.f_max, total_length=prof.b - prof.a)
    return M, spec


def build_perturbed(base, eps, m=1):
    """Multiply the base profile by ``1 + eps sin^2(m pi (r-a)/(b-a))``.

    Raises ``PositivityError`` (with the offending ``r``) if the result
    loses positive Ricci curvature.
    """
    if not check_positive_ricci(base).passed:
        raise PositivityError("base manifold does not have positive Ricci curvature")
    if eps == 0.0:
        return base
    M = WarpedManifold(base.n, PerturbedProfile(base.profile, eps, m), base.ends,
                       name=f"{base.name}+perturbed(eps={eps:g}, m={m})")
    rep = check_positive_ricci(M)
    if not rep.passed:
        raise PositivityError(
            f"perturbation eps={eps:g} destroys positive Ricci "
            f"(min {rep.min_rho:.4g} at r={rep.min_location:.6g})",
            location=rep.min_location)
    return M


def rescale(M, c):
    """The constant rescaling ``c^2 g``: profile ``c f(r / c)`` on ``[c a, c b]``."""
    return WarpedManifold(M.n, ScaledProfile(M.profile, c), M.ends,
                          name=f"{M.name}*{c:g}")


@dataclass
class ClassificationReport:
    case: str                 # "smooth" | "B" | "C" | "boundary"
    description: str
    declared_betas: tuple
    measured_slopes: tuple
    betas_consistent: bool

    def as_dict(self):
        return asdict(self)


def validate_manifold(M, tol=1e-4):
    """Classify the endpoint pair and check declared cone angles.

    Cases follow the warped-sphere classification: two smooth caps, one
    cone plus a cap ("B"), two cones ("C"), or a manifold with boundary.
    """
    kinds = tuple(e.kind for e in M.ends)
    slopes, ok = [], True
    for key, end in zip("ab", M.ends):
        if end.kind == "boundary":
            slopes.append(None)
            continue
        try:
            s = cone_angle(M, key)
        except ConvergenceError:
            slopes.append(float("nan"))
            ok = False
            continue
        slopes.append(s)
        ok &= abs(s - end.slope) < tol
    ncone = kinds.count("cone")
    if "boundary" in kinds:
        case, desc = "boundary", "manifold with boundary"
    elif ncone == 0:
        case, desc = "smooth", "two smooth caps (smooth sphere)"
    elif ncone == 1:
        case, desc = "B", "one cone point and one smooth cap"
    else:
        case, desc = "C", "two cone points"
    betas = tuple(e.beta if e.kind == "cone" else (0.0 if e.kind == "cap" else None)
                  for e in M.ends)
    return ClassificationReport(case, desc, betas, tuple(slopes), bool(ok))
