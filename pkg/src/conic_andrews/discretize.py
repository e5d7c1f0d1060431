"""Self-adjoint three-point discretization of radial Sturm-Liouville forms.

For coefficient functions ``p, q, w > 0`` on a node array ``r_0 < ... < r_N``
the quadratic forms

    a(u, u) = int p u'^2 + q u^2,        m(u, u) = int w u^2

are approximated by piecewise-linear ``u`` with the potential and mass
lumped to dual cells ``[m_{i-1}, m_i]`` (``m_i`` edge midpoints):

    a(u, u) ~ sum_e K_e (u_{i+1} - u_i)^2 + sum_i Q_i u_i^2,   K_e = int_e p / h_e^2
    m(u, u) ~ sum_i W_i u_i^2

All coefficient integrals use Gauss-Legendre points strictly inside the
cells, so ``p, q, w`` are never evaluated at an endpoint. No boundary
condition is imposed: endpoints carry the natural (no-flux / Neumann)
condition. The scheme is homogeneous under ``r -> c r``.
"""

import numpy as np
from scipy.linalg import solve_banded, solveh_banded
from scipy.sparse import csc_matrix, diags
from scipy.sparse.linalg import splu

from .errors import ConvergenceError
from .numerics import gauss_panels

GAUSS_POINTS = 3


class ThreePointForm:
    """Tridiagonal stiffness ``K`` (per edge), lumped ``Q`` and ``W`` (per node)."""

    def __init__(self, nodes, K, Q, W):
        self.nodes = np.asarray(nodes, dtype=float)
        self.K = np.asarray(K, dtype=float)
        self.Q = np.asarray(Q, dtype=float)
        self.W = np.asarray(W, dtype=float)

    @property
    def diag(self):
        d = self.Q.copy()
        d[:-1] += self.K
        d[1:] += self.K
        return d

    @property
    def off(self):
        return -self.K

    def energy(self, u):
        u = np.asarray(u, dtype=float)
        return float(np.sum(self.K * np.diff(u) ** 2) + np.sum(self.Q * u ** 2))

    def mass(self, u):
        u = np.asarray(u, dtype=float)
        return float(np.sum(self.W * u ** 2))

    def apply(self, u):
        d, e = self.diag, self.off
        out = d * u
        out[:-1] += e * u[1:]
        out[1:] += e * u[:-1]
        return out

    def count_below(self, sigma):
        """Number of eigenvalues of ``A v = lam W v`` below ``sigma``.

        Sylvester inertia of ``A - sigma W`` from the LDL^T pivot recurrence;
        works on the unscaled pencil, so tiny tip masses cause no loss.
        """
        d = (self.diag - sigma * self.W).tolist()
        e2 = (self.off ** 2).tolist()
        count = 0
        piv = d[0]
        tiny = 1e-300
        for i in range(len(d)):
            if i:
                piv = d[i] - e2[i - 1] / piv
            if piv == 0.0:
                piv = -tiny
            if piv < 0.0:
                count += 1
        return count

    def eigenvalue(self, index, rtol=1e-14, max_iter=200):
        """``index``-th smallest eigenvalue (0-based) by bisection on inertia counts."""
        lo, hi = 0.0, 1.0
        while self.count_below(hi) <= index:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                raise ConvergenceError("no eigenvalue bracket found")
        if self.count_below(lo) > index:
            lo = -1.0
            while self.count_below(lo) > index:
                lo *= 2.0
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            if self.count_below(mid) > index:
                hi = mid
            else:
                lo = mid
            if hi - lo <= rtol * max(abs(hi), 1e-300):
                break
        return 0.5 * (lo + hi)

    def eigenvector(self, lam, iterations=4, seed=0):
        """Inverse iteration for the eigenvector at (a converged) ``lam``, W-normalized."""
        d = self.diag - lam * (1.0 - 1e-10) * self.W
        ab = np.zeros((3, len(d)))
        ab[0, 1:] = self.off
        ab[1] = d
        ab[2, :-1] = self.off
        x = np.random.default_rng(seed).standard_normal(len(d))
        for _ in range(iterations):
            x = solve_banded((1, 1), ab, self.W * x)
            x /= np.sqrt(self.mass(x))
        return x

    def smallest_eigenpairs(self, count):
        """Lowest ``count`` eigenpairs of ``A v = lam W v`` (bisection + inverse iteration)."""
        lams = np.array([self.eigenvalue(i) for i in range(count)])
        vecs = np.column_stack([self.eigenvector(lam) for lam in lams])
        return lams, vecs

    def solve(self, rhs):
        """Solve ``A u = rhs`` for a positive-definite form."""
        d, e = self.diag, self.off
        ab = np.zeros((2, len(d)))
        ab[0, 1:] = e
        ab[1] = d
        return solveh_banded(ab, rhs)

    def solve_dirichlet_last(self, rhs, value):
        """Solve with ``u_N = value`` imposed; ``rhs[:-1]`` is used."""
        d = self.diag[:-1]
        load = np.array(rhs[:-1], dtype=float)
        load[-1] -= self.off[-1] * value
        ab = np.zeros((2, len(d)))
        ab[0, 1:] = self.off[:-1]
        ab[1] = d
        return np.append(solveh_banded(ab, load), value)

    def solve_with_mean_constraint(self, rhs):
        """Solve the singular (constants-in-kernel) system with ``sum W u = 0``.

        ``rhs`` must be orthogonal to constants; the caller checks this.
        """
        nn = len(self.W)
        A = diags([self.off, self.diag, self.off], [-1, 0, 1], shape=(nn, nn)).tolil()
        A.resize((nn + 1, nn + 1))
        A[:nn, nn] = self.W[:, None]
        A[nn, :nn] = self.W[None, :]
        sol = splu(csc_matrix(A)).solve(np.append(rhs, 0.0))
        return sol[:nn]


def _cell_integrals(nodes, fn, npts):
    """Integrals of ``fn`` over the two halves of every edge."""
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    left_pts, left_w = _half_panels(nodes[:-1], mids, npts)
    right_pts, right_w = _half_panels(mids, nodes[1:], npts)
    left = np.sum(fn(left_pts) * left_w, axis=1)
    right = np.sum(fn(right_pts) * right_w, axis=1)
    out = np.zeros(len(nodes))
    out[:-1] += left
    out[1:] += right
    return out


def _half_panels(lo, hi, npts):
    t, wt = np.polynomial.legendre.leggauss(npts)
    half = 0.5 * (hi - lo)[:, None]
    pts = 0.5 * (hi + lo)[:, None] + half * t[None, :]
    return pts, half * wt[None, :]


def three_point_form(nodes, p, q, w, npts=GAUSS_POINTS):
    """Assemble ``ThreePointForm`` from vectorized coefficient callables.

    ``q`` may be ``None`` (zero potential).
    """
    nodes = np.asarray(nodes, dtype=float)
    h = np.diff(nodes)
    pts, wts = gauss_panels(nodes, npts)
    K = np.sum(p(pts) * wts, axis=1) / h ** 2
    Q = np.zeros(len(nodes)) if q is None else _cell_integrals(nodes, q, npts)
    W = _cell_integrals(nodes, w, npts)
    return ThreePointForm(nodes, K, Q, W)


class ManifoldForms:
    """Curvature data of a warped manifold sampled once at all Gauss points.

    Builds the per-mode forms of the Ric^{-1}-weighted quotient and of the
    Laplacian without re-evaluating the profile.
    """

    def __init__(self, M, nodes, npts=GAUSS_POINTS):
        self.M = M
        self.nodes = np.asarray(nodes, dtype=float)
        n = M.n
        h = np.diff(self.nodes)
        pts, wts = gauss_panels(self.nodes, npts)
        mids = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        halves = [_half_panels(self.nodes[:-1], mids, npts),
                  _half_panels(mids, self.nodes[1:], npts)]

        def sample(x):
            fv = M.profile.f(x)
            kr, kt = M.kappas(x)
            rho_rad = (n - 1) * kr
            rho_tan = kr + (n - 2) * kt
            return fv, rho_rad, rho_tan

        fv, rr, _ = sample(pts)
        self._edge = dict(vol=np.sum(fv ** (n - 1) * wts, axis=1) / h ** 2,
                          ric=np.sum(fv ** (n - 1) / rr * wts, axis=1) / h ** 2)
        cells = {"vol": np.zeros(len(self.nodes)), "tan_vol": np.zeros(len(self.nodes)),
                 "tan_ric": np.zeros(len(self.nodes))}
        for k, (hp, hw) in enumerate(halves):
            fv, _, rt = sample(hp)
            contrib = {"vol": np.sum(fv ** (n - 1) * hw, axis=1),
                       "tan_vol": np.sum(fv ** (n - 3) * hw, axis=1),
                       "tan_ric": np.sum(fv ** (n - 3) / rt * hw, axis=1)}
            for key, val in contrib.items():
                if k == 0:
                    cells[key][:-1] += val
                else:
                    cells[key][1:] += val
        self._cell = cells

    @property
    def W(self):
        return self._cell["vol"]

    def ricci_form(self, lam):
        """Numerator of the quotient for a degree with sphere eigenvalue ``lam``."""
        return ThreePointForm(self.nodes, self._edge["ric"], lam * self._cell["tan_ric"],
                              self._cell["vol"])

    def laplace_form(self, lam):
        """Dirichlet form of ``-Delta`` restricted to the degree-``lam`` eigenspace."""
        return ThreePointForm(self.nodes, self._edge["vol"], lam * self._cell["tan_vol"],
                              self._cell["vol"])
