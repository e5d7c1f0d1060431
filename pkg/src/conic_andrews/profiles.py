"""Warping functions ``f`` for metrics ``dr^2 + f(r)^2 g_{S^{n-1}}``.

Every profile exposes ``f``, ``df``, ``d2f`` plus the two curvature
combinations that the geometry needs,

    kappa_rad = -f''/f              (radial sectional curvature)
    kappa_tan = (1 - f'^2) / f^2    (tangential sectional curvature)

Closed-form profiles override the two ``kappa_*`` methods with expressions
free of the ``0/0`` cancellation that the generic formulas suffer near a
cap or cone tip.
"""

import math

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import DomainError, InvalidProfileError
from .numerics import nodal_derivatives

__all__ = [
    "RadialProfile",
    "SineProfile",
    "LinearProfile",
    "FootballProfile",
    "ScaledProfile",
    "PerturbedProfile",
    "SampledProfile",
    "profile_from_dict",
]


class RadialProfile:
    """Base class. Subclasses set ``a``, ``b`` and implement ``f``, ``df``, ``d2f``."""

    kind = "abstract"
    analytic = True

    a: float
    b: float

    @property
    def length(self):
        return self.b - self.a

    def f(self, r):
        raise NotImplementedError

    def df(self, r):
        raise NotImplementedError

    def d2f(self, r):
        raise NotImplementedError

    def kappa_rad(self, r):
        return -self.d2f(r) / self.f(r)

    def kappa_tan(self, r):
        fp = self.df(r)
        return (1.0 - fp) * (1.0 + fp) / self.f(r) ** 2

    def to_dict(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()!r})"


class SineProfile(RadialProfile):
    """``f = amplitude * sin(r)``; amplitude 1 on ``[0, pi]`` is the round sphere."""

    kind = "sine"

    def __init__(self, amplitude=1.0, a=0.0, b=math.pi):
        if amplitude <= 0:
            raise InvalidProfileError("amplitude must be positive")
        if not (0.0 <= a < b <= math.pi):
            raise InvalidProfileError("sine profile needs 0 <= a < b <= pi")
        self.amplitude = float(amplitude)
        self.a, self.b = float(a), float(b)

    def f(self, r):
        return self.amplitude * np.sin(r)

    def df(self, r):
        return self.amplitude * np.cos(r)

    def d2f(self, r):
        return -self.amplitude * np.sin(r)

    def kappa_rad(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def kappa_tan(self, r):
        c2 = self.amplitude ** 2
        s2 = np.sin(r) ** 2
        return ((1.0 - c2) + c2 * s2) / (c2 * s2)

    def to_dict(self):
        return {"formula": "sine", "params": {"amplitude": self.amplitude},
                "interval": [self.a, self.b]}


class LinearProfile(RadialProfile):
    """``f = slope * (r - a) + offset``; slope 1, offset 0 is flat space."""

    kind = "linear"

    def __init__(self, slope=1.0, offset=0.0, a=0.0, b=1.0):
        if b <= a:
            raise InvalidProfileError("need a < b")
        self.slope, self.offset = float(slope), float(offset)
        self.a, self.b = float(a), float(b)

    def f(self, r):
        return self.slope * (np.asarray(r, dtype=float) - self.a) + self.offset

    def df(self, r):
        return np.full_like(np.asarray(r, dtype=float), self.slope)

    def d2f(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def kappa_rad(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def kappa_tan(self, r):
        return (1.0 - self.slope ** 2) / self.f(r) ** 2

    def to_dict(self):
        return {"formula": "linear",
                "params": {"slope": self.slope, "offset": self.offset},
                "interval": [self.a, self.b]}


class FootballProfile(RadialProfile):
    """Warping function of constant ``sigma_{n/2}`` with two equal cone tips.

    The profile solves the first integral

        (1/n) (1 - f'^2)^k - (1/n) f^n = c2,     k = n/2,

    normalized so that ``sigma_{n/2}`` equals its round-sphere value. With
    ``f = f_max sin(theta)`` the arc length ``r(theta)`` has a smooth
    integrand on ``[0, pi/2]``; it is represented by a Chebyshev series and
    inverted by Newton iteration, then mirrored about the midpoint.
    """

    kind = "football"

    def __init__(self, n, beta):
        if n % 2 or n < 4:
            raise DomainError("football profiles need even n >= 4")
        if not (-1.0 < beta <= 0.0):
            raise DomainError("beta must lie in (-1, 0]")
        self.n, self.beta = int(n), float(beta)
        self.k = self.n // 2
        self.c0 = 1.0
        self.c2 = (1.0 - (1.0 + beta) ** 2) ** self.k / self.n
        self.f_max = (1.0 - self.n * self.c2) ** (1.0 / self.n)
        self._build()
        self.a = 0.0
        self.b = 2.0 * self.half_length

    # (1 - G(s)) / cos^2(theta) with s = sin(theta), G(s) = X(s)^(1/k),
    # written without cancellation at the turning point s = 1.
    def _g(self, s):
        n, k = self.n, self.k
        x = n * self.c2 + self.f_max ** n * s ** n
        sum_s = sum(s ** j for j in range(n))
        sum_x = sum(x ** (m / k) for m in range(k))
        return self.f_max ** n * sum_s / ((1.0 + s) * sum_x)

    def _drdtheta(self, theta):
        return self.f_max / np.sqrt(self._g(np.sin(theta)))

    def _build(self):
        dom = [0.0, 0.5 * math.pi]
        for deg in (16, 32, 64, 128, 256):
            series = C.Chebyshev.interpolate(self._drdtheta, deg, domain=dom)
            tail = np.abs(series.coef[-4:]).max()
            if tail < 1e-15 * np.abs(series.coef).max():
                break
        self._dr = series
        self._r = series.integ(lbnd=0.0)
        self.half_length = float(self._r(0.5 * math.pi))
        th = np.linspace(0.0, 0.5 * math.pi, 401)
        self._table = (self._r(th), th)

    def theta_of_r(self, rho):
        """Invert ``r(theta)`` on the left half ``[0, half_length]``."""
        rho = np.asarray(rho, dtype=float)
        th = np.interp(rho, *self._table)
        for _ in range(30):
            step = (self._r(th) - rho) / self._dr(th)
            th = np.clip(th - step, 0.0, 0.5 * math.pi)
            if np.all(np.abs(step) < 1e-15):
                break
        return th

    def _fold(self, r):
        r = np.asarray(r, dtype=float)
        left = r <= self.half_length
        rho = np.where(left, r, 2.0 * self.half_length - r)
        return rho, np.where(left, 1.0, -1.0)

    def f(self, r):
        rho, _ = self._fold(r)
        return self.f_max * np.sin(self.theta_of_r(rho))

    def df(self, r):
        rho, sign = self._fold(r)
        th = self.theta_of_r(rho)
        return sign * np.cos(th) * np.sqrt(self._g(np.sin(th)))

    def _x(self, fv):
        return self.n * self.c2 + fv ** self.n

    def d2f(self, r):
        fv = self.f(r)
        return -fv ** (self.n - 1) / self._x(fv) ** ((self.k - 1) / self.k)

    def kappa_rad(self, r):
        fv = self.f(r)
        return fv ** (self.n - 2) / self._x(fv) ** ((self.k - 1) / self.k)

    def kappa_tan(self, r):
        fv = self.f(r)
        return self._x(fv) ** (1.0 / self.k) / fv ** 2

    def first_integral(self, fv, dfv):
        """``(1/n)(1 - f'^2)^k - (c0/n) f^n``; constant (= c2) along the profile."""
        n, k = self.n, self.k
        return ((1.0 - dfv ** 2) ** k - self.c0 * fv ** n) / n

    def sample_table(self, nodes=2001):
        """Graded ``(r, f)`` table, clustered at both tips."""
        q = max(2.0, math.ceil(1.0 / (1.0 + self.beta)))
        s = np.linspace(0.0, 1.0, nodes)
        g = s ** q / (s ** q + (1.0 - s) ** q)
        r = self.a + self.length * g
        return r, self.f(r)

    def to_dict(self):
        return {"formula": "football", "params": {"n": self.n, "beta": self.beta},
                "interval": [self.a, self.b]}


class ScaledProfile(RadialProfile):
    """Constant rescaling ``c * f(r / c)`` on ``[c a, c b]``."""

    kind = "scaled"

    def __init__(self, base, c):
        if c <= 0:
            raise InvalidProfileError("scale must be positive")
        self.base, self.c = base, float(c)
        self.a, self.b = self.c * base.a, self.c * base.b
        self.analytic = base.analytic

    def f(self, r):
        return self.c * self.base.f(np.asarray(r) / self.c)

    def df(self, r):
        return self.base.df(np.asarray(r) / self.c)

    def d2f(self, r):
        return self.base.d2f(np.asarray(r) / self.c) / self.c

    def kappa_rad(self, r):
        return self.base.kappa_rad(np.asarray(r) / self.c) / self.c ** 2

    def kappa_tan(self, r):
        return self.base.kappa_tan(np.asarray(r) / self.c) / self.c ** 2

    def to_dict(self):
        return {"formula": "scaled", "params": {"c": self.c, "base": self.base.to_dict()},
                "interval": [self.a, self.b]}


class PerturbedProfile(RadialProfile):
    """``f (1 + eps sin^2(m pi (r - a) / (b - a)))``.

    The bump and its first derivative vanish at both ends, so endpoint
    behaviour (cap, cone angle) is inherited from the base.
    """

    kind = "perturbed"

    def __init__(self, base, eps, m=1):
        if m < 1:
            raise DomainError("shape index m must be >= 1")
        self.base, self.eps, self.m = base, float(eps), int(m)
        self.a, self.b = base.a, base.b
        self.analytic = base.analytic
        self._w = self.m * math.pi / (self.b - self.a)

    def _bump(self, r):
        t = self._w * (np.asarray(r, dtype=float) - self.a)
        s = np.sin(t) ** 2
        ds = self._w * np.sin(2.0 * t)
        d2s = 2.0 * self._w ** 2 * np.cos(2.0 * t)
        return s, ds, d2s

    def f(self, r):
        s, _, _ = self._bump(r)
        return self.base.f(r) * (1.0 + self.eps * s)

    def df(self, r):
        s, ds, _ = self._bump(r)
        return self.base.df(r) * (1.0 + self.eps * s) + self.eps * self.base.f(r) * ds

    def d2f(self, r):
        s, ds, d2s = self._bump(r)
        f0, f1, f2 = self.base.f(r), self.base.df(r), self.base.d2f(r)
        return f2 * (1.0 + self.eps * s) + self.eps * (2.0 * f1 * ds + f0 * d2s)

    def kappa_rad(self, r):
        s, ds, d2s = self._bump(r)
        f0, f1 = self.base.f(r), self.base.df(r)
        return (self.base.kappa_rad(r)
                - self.eps * (2.0 * f1 * ds / f0 + d2s) / (1.0 + self.eps * s))

    def kappa_tan(self, r):
        s, ds, _ = self._bump(r)
        f0, f1 = self.base.f(r), self.base.df(r)
        fe = f0 * (1.0 + self.eps * s)
        delta = self.eps * (f1 * s + f0 * ds)          # f_eps' - f'
        return (f0 ** 2 * self.base.kappa_tan(r) - delta * (delta + 2.0 * f1)) / fe ** 2

    def to_dict(self):
        return {"formula": "perturbed",
                "params": {"eps": self.eps, "m": self.m, "base": self.base.to_dict()},
                "interval": [self.a, self.b]}


class SampledProfile(RadialProfile):
    """Tabulated ``(r, f)`` with 4th-order finite-difference derivatives."""

    kind = "sampled"
    analytic = False

    def __init__(self, r, f):
        r = np.asarray(r, dtype=float)
        f = np.asarray(f, dtype=float)
        if r.ndim != 1 or r.shape != f.shape or len(r) < 5:
            raise InvalidProfileError("need matching 1-D arrays with >= 5 samples")
        if np.any(np.diff(r) <= 0):
            raise InvalidProfileError("sample nodes must be strictly increasing")
        if not np.all(np.isfinite(f)):
            raise InvalidProfileError("non-finite profile samples")
        if np.any(f[1:-1] <= 0):
            raise InvalidProfileError("f must be positive in the open interval")
        self.r_nodes, self.f_nodes = r, f
        self.a, self.b = float(r[0]), float(r[-1])
        d1, d2 = nodal_derivatives(r, f, order=2)
        self._f = CubicHermiteSpline(r, f, d1)
        self._d2 = CubicSpline(r, d2)

    def f(self, r):
        return self._f(r)

    def df(self, r):
        return self._f(r, 1)

    def d2f(self, r):
        return self._d2(r)

    def to_dict(self):
        return {"samples": {"r": self.r_nodes.tolist(), "f": self.f_nodes.tolist()},
                "interval": [self.a, self.b]}


def profile_from_dict(d):
    """Inverse of ``RadialProfile.to_dict``."""
    if "samples" in d:
        return SampledProfile(d["samples"]["r"], d["samples"]["f"])
    tag, p = d["formula"], d.get("params", {})
    interval = d.get("interval")
    if tag == "sine":
        a, b = interval if interval else (0.0, math.pi)
        return SineProfile(p.get("amplitude", 1.0), a, b)
    if tag == "linear":
        a, b = interval if interval else (0.0, 1.0)
        return LinearProfile(p.get("slope", 1.0), p.get("offset", 0.0), a, b)
    if tag == "football":
        return FootballProfile(p["n"], p["beta"])
    if tag == "scaled":
        return ScaledProfile(profile_from_dict(p["base"]), p["c"])
    if tag == "perturbed":
        return PerturbedProfile(profile_from_dict(p["base"]), p["eps"], p.get("m", 1))
    raise InvalidProfileError(f"unknown profile formula {tag!r}")
