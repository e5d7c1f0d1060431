"""Curvature of warped products ``g = dr^2 + f(r)^2 g_{S^{n-1}}``.

Ricci is reported as eigenvalues of the Ricci endomorphism:

    rho_rad = -(n-1) f''/f
    rho_tan = -f''/f + (n-2) (1 - f'^2)/f^2

(the link is the unit round sphere, whose Ricci tensor is ``(n-2) gbar``).
The second fundamental form of the level sphere ``{r = const}`` is returned
with the sign ``-f'/f`` (normal ``d/dr``). The inner-normal convention used
for boundary convexity has the opposite sign; see ``boundary_convexity``.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import comb, gamma

from .errors import DomainError, InvalidProfileError
from .numerics import richardson_limit, simpson_uniform
from .profiles import RadialProfile, profile_from_dict

__all__ = [
    "End", "SMOOTH_CAP", "BOUNDARY", "cone", "WarpedManifold",
    "CurvaturePair", "SchoutenPair", "Quadrature", "RicciReport",
    "sphere_volume", "ricci_eigenvalues", "second_fundamental_form",
    "boundary_convexity", "schouten_components", "elementary_symmetric",
    "sigma_k", "sigma_half_reduced", "integrate_radial", "check_positive_ricci",
    "cone_angle", "manifold_to_dict", "manifold_from_dict",
]

ENDPOINT_EPS = 1e-6


@dataclass(frozen=True)
class End:
    kind: str                       # "cap" | "cone" | "boundary"
    beta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("cap", "cone", "boundary"):
            raise InvalidProfileError(f"unknown endpoint kind {self.kind!r}")
        if self.kind == "cone":
            if self.beta is None or not (-1.0 < self.beta < 0.0):
                raise InvalidProfileError("cone endpoint needs beta in (-1, 0)")

    @property
    def is_tip(self):
        return self.kind != "boundary"

    @property
    def slope(self):
        """Expected limit of ``|f / (r - r_end)|``."""
        return 1.0 + self.beta if self.kind == "cone" else 1.0

    def grading(self):
        if self.kind == "boundary":
            return 1.0
        return float(max(2, math.ceil(1.0 / self.slope - 1e-12)))


SMOOTH_CAP = End("cap")
BOUNDARY = End("boundary")


def cone(beta):
    return End("cone", beta)


@dataclass(frozen=True)
class WarpedManifold:
    n: int
    profile: RadialProfile
    ends: tuple = (SMOOTH_CAP, SMOOTH_CAP)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise InvalidProfileError("dimension n must be an integer >= 3")
        if len(self.ends) != 2:
            raise InvalidProfileError("need exactly two endpoint descriptors")
        r = self.interior_points(257)
        fv = self.profile.f(r)
        if not np.all(np.isfinite(fv)) or np.any(fv <= 0):
            raise InvalidProfileError("f must be positive and finite inside (a, b)")
        for end, r_end in zip(self.ends, (self.a, self.b)):
            if end.kind == "boundary" and not self.profile.f(r_end) > 0:
                raise InvalidProfileError("boundary end needs f bounded away from 0")

    @property
    def a(self):
        return self.profile.a

    @property
    def b(self):
        return self.profile.b

    @property
    def length(self):
        return self.b - self.a

    @property
    def has_boundary(self):
        return any(e.kind == "boundary" for e in self.ends)

    def interior_points(self, num):
        """``num`` Chebyshev-type points strictly inside ``(a, b)``."""
        k = np.arange(num)
        t = 0.5 * (1.0 - np.cos(math.pi * (k + 0.5) / num))
        return self.a + self.length * t

    def grid(self, nodes):
        """Node array ``r_0 = a < ... < r_N = b`` graded toward tip ends."""
        qa, qb = (e.grading() for e in self.ends)
        s = np.linspace(0.0, 1.0, nodes)
        t, _ = _grading_map(s, qa, qb)
        # Measure the right half from b so tip spacing keeps its precision.
        tc, _ = _grading_map(1.0 - s, qb, qa)
        right = s > 0.5
        r = self.a + self.length * t
        r[right] = self.b - self.length * tc[right]
        r[0], r[-1] = self.a, self.b
        return r

    def _check_interior(self, r, include_boundary=False):
        r = np.asarray(r, dtype=float)
        lo_ok = r >= self.a if include_boundary and not self.ends[0].is_tip else r > self.a
        hi_ok = r <= self.b if include_boundary and not self.ends[1].is_tip else r < self.b
        if not (np.all(lo_ok) and np.all(hi_ok)):
            raise DomainError(f"r must lie strictly inside ({self.a}, {self.b})")
        return r

    def _guarded(self, r, include_boundary=False):
        # Sampled profiles: freeze curvature within ENDPOINT_EPS of a tip.
        r = self._check_interior(r, include_boundary)
        if self.profile.analytic:
            return r
        eps = ENDPOINT_EPS * self.length
        lo = self.a + eps if self.ends[0].is_tip else self.a
        hi = self.b - eps if self.ends[1].is_tip else self.b
        return np.clip(r, lo, hi)

    def kappas(self, r, include_boundary=False):
        """``(-f''/f, (1 - f'^2)/f^2)``; Boundary endpoints allowed on request."""
        r = self._guarded(r, include_boundary)
        if np.any(self.profile.f(r) <= 0):
            raise InvalidProfileError("f(r) <= 0")
        return self.profile.kappa_rad(r), self.profile.kappa_tan(r)


def _grading_map(s, qa, qb):
    """Map ``[0,1] -> [0,1]`` with ``s**qa`` clustering at 0 and ``qb`` at 1."""
    if qa == 1.0 and qb == 1.0:
        return s.copy(), np.ones_like(s)
    if qb == 1.0:
        return s ** qa, qa * s ** (qa - 1.0)
    if qa == 1.0:
        t = 1.0 - s
        return 1.0 - t ** qb, qb * t ** (qb - 1.0)
    num, den = s ** qa, s ** qa + (1.0 - s) ** qb
    dnum = qa * s ** (qa - 1.0)
    dden = dnum - qb * (1.0 - s) ** (qb - 1.0)
    return num / den, (dnum * den - num * dden) / den ** 2


class CurvaturePair(NamedTuple):
    rho_rad: float
    rho_tan: float


class SchoutenPair(NamedTuple):
    a_rr: float
    a_tt: float


class Quadrature(NamedTuple):
    value: float
    error: float


def sphere_volume(dim):
    """Volume of the unit round sphere ``S^dim``."""
    return 2.0 * math.pi ** ((dim + 1) / 2.0) / gamma((dim + 1) / 2.0)


def ricci_eigenvalues(M, r):
    kr, kt = M.kappas(r)
    n = M.n
    return CurvaturePair((n - 1) * kr, kr + (n - 2) * kt)


def second_fundamental_form(M, r):
    r = M._check_interior(r)
    return -M.profile.df(r) / M.profile.f(r)


def boundary_convexity(M):
    """Second fundamental form of each Boundary end w.r.t. the inner normal.

    This is the sign for which ``II >= 0`` means weakly convex; it equals
    ``+f'/f`` at a right end and ``-f'/f`` at a left end.
    Returns ``{"a": value, "b": value}`` for boundary ends only.
    """
    out = {}
    p = M.profile
    if M.ends[0].kind == "boundary":
        out["a"] = float(-p.df(M.a) / p.f(M.a))
    if M.ends[1].kind == "boundary":
        out["b"] = float(p.df(M.b) / p.f(M.b))
    return out


def schouten_components(M, r):
    kr, kt = M.kappas(r)
    half = 0.5 * kt
    return SchoutenPair(kr - half, half)


def elementary_symmetric(values, k):
    """``e_k`` of ``values`` via the product-polynomial recurrence."""
    values = np.asarray(values, dtype=float)
    e = np.zeros(k + 1)
    e[0] = 1.0
    for v in values:
        e[1:] = e[1:] + v * e[:-1]
    return float(e[k])


def sigma_k(M, r, k):
    n = M.n
    if not (1 <= k <= n):
        raise DomainError(f"k must satisfy 1 <= k <= n, got {k}")
    a_rr, a_tt = schouten_components(M, r)
    if np.ndim(a_rr) == 0:
        return elementary_symmetric([a_rr] + [a_tt] * (n - 1), k)
    return np.array([elementary_symmetric([x] + [y] * (n - 1), k)
                     for x, y in zip(a_rr, a_tt)])


def sigma_half_reduced(M, r):
    """``C(n-1, k-1) a_tt^(k-1) (-f''/f)`` for ``k = n/2`` (even ``n``)."""
    if M.n % 2:
        raise DomainError("reduced sigma_{n/2} form needs even n")
    k = M.n // 2
    kr, kt = M.kappas(r)
    return comb(M.n - 1, k - 1, exact=True) * (0.5 * kt) ** (k - 1) * kr


def integrate_radial(M, w, panels=2048):
    """``Vol(S^{n-1}) * int_a^b w(r) f(r)^{n-1} dr`` by composite Simpson.

    The rule runs in the grading coordinate ``s`` of ``M.grid`` (so tip
    behaviour is resolved); the error is estimated as ``|S_N - S_{N/2}|/15``
    with a floor at the rounding level of ``int |w| f^{n-1}``.
    """
    if panels % 4:
        panels += 4 - panels % 4
    qa, qb = (e.grading() for e in M.ends)
    s = np.linspace(0.0, 1.0, panels + 1)
    t, dt = _grading_map(s, qa, qb)
    r = M.a + M.length * t
    jac = M.length * dt
    inner = np.zeros_like(r)
    mask = jac > 0
    rm = r[mask]
    fv = M.profile.f(rm)
    wv = np.asarray(w(rm), dtype=float) * np.ones_like(rm)
    if not np.all(np.isfinite(wv)):
        raise DomainError("non-finite integrand samples")
    inner[mask] = wv * fv ** (M.n - 1) * jac[mask]
    vol = sphere_volume(M.n - 1)
    fine = simpson_uniform(inner, s[1] - s[0])
    coarse = simpson_uniform(inner[::2], s[2] - s[0])
    # Floor for smooth periodic-like integrands where Simpson is exact to roundoff.
    roundoff = 64.0 * np.finfo(float).eps * simpson_uniform(np.abs(inner), s[1] - s[0])
    return Quadrature(vol * fine, vol * max(abs(fine - coarse) / 15.0, roundoff))


@dataclass
class RicciReport:
    passed: bool
    min_rho: float
    min_location: float
    min_rho_rad: float
    min_rho_tan: float
    concave: bool
    max_d2f: float

    def as_dict(self):
        return dict(self.__dict__)


def check_positive_ricci(M, samples=2001):
    r = M.interior_points(samples)
    rr, rt = ricci_eigenvalues(M, r)
    both = np.minimum(rr, rt)
    i = int(np.argmin(both))
    d2 = M.profile.d2f(r)
    return RicciReport(
        passed=bool(both[i] > 0),
        min_rho=float(both[i]),
        min_location=float(r[i]),
        min_rho_rad=float(rr.min()),
        min_rho_tan=float(rt.min()),
        concave=bool(np.all(d2 < 0)),
        max_d2f=float(d2.max()),
    )


def cone_angle(M, endpoint, h0=None, levels=8, tol=1e-6):
    """Extrapolate ``|f(r) / (r - r_end)|`` to the endpoint (``1 + beta``).

    ``endpoint`` is ``"a"`` or ``"b"``. Richardson on the dyadic sequence
    ``h0 / 2^j``. Raises ``ConvergenceError`` if the table does not settle.
    """
    from .errors import ConvergenceError

    idx = {"a": 0, "b": 1}[endpoint]
    end = M.ends[idx]
    if end.kind == "boundary":
        raise DomainError("cone angle is undefined at a boundary end")
    if h0 is None:
        h0 = 0.02 * M.length
    h = h0 / 2.0 ** np.arange(levels)
    r = M.a + h if idx == 0 else M.b - h
    ratios = np.abs(M.profile.f(r) / h)
    limit, err = richardson_limit(ratios)
    if not np.isfinite(limit) or err > tol:
        raise ConvergenceError(f"cone-angle extrapolation did not settle (err={err:.3g})")
    return limit


def manifold_to_dict(M):
    ends = [{"kind": e.kind, **({"beta": e.beta} if e.kind == "cone" else {})}
            for e in M.ends]
    return {"schema": "warped-manifold/1", "name": M.name, "n": M.n,
            "interval": [M.a, M.b], "ends": ends, "profile": M.profile.to_dict()}


def manifold_from_dict(d):
    if d.get("schema") != "warped-manifold/1":
        raise InvalidProfileError(f"unsupported schema {d.get('schema')!r}")
    ends = tuple(End(e["kind"], e.get("beta")) for e in d["ends"])
    return WarpedManifold(int(d["n"]), profile_from_dict(d["profile"]), ends,
                          name=d.get("name", ""))
