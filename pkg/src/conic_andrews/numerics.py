"""Small numerical helpers shared across modules."""

import numpy as np


def fd_weights(x0, x, m):
    """Finite-difference weights on arbitrary nodes (Fornberg's recursion).

    Returns an array ``c`` of shape ``(m + 1, len(x))`` such that
    ``c[d] @ f(x)`` approximates the ``d``-th derivative of ``f`` at ``x0``.
    """
    x = np.asarray(x, dtype=float)
    npts = len(x)
    c = np.zeros((m + 1, npts))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, npts):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def nodal_derivatives(x, y, order=2, width=5):
    """First ``order`` derivatives of samples ``y`` at the nodes ``x``.

    Centered ``width``-point stencils in the interior, one-sided near the
    ends (4th order for the default width on smooth data).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < width:
        raise ValueError(f"need at least {width} nodes, got {n}")
    half = width // 2
    out = np.zeros((order, n))
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        idx = slice(lo, lo + width)
        w = fd_weights(x[i], x[idx], order)
        out[:, i] = w[1:] @ y[idx]
    return out


def gauss_panels(nodes, npts=4):
    """Gauss-Legendre points and weights on every panel between ``nodes``."""
    nodes = np.asarray(nodes, dtype=float)
    t, wt = np.polynomial.legendre.leggauss(npts)
    lo, hi = nodes[:-1, None], nodes[1:, None]
    half = 0.5 * (hi - lo)
    pts = (lo + hi) * 0.5 + half * t[None, :]
    wts = half * wt[None, :]
    return pts, wts


def simpson_uniform(values, h):
    """Composite Simpson sum for samples on a uniform grid (even panel count)."""
    values = np.asarray(values, dtype=float)
    npan = len(values) - 1
    if npan < 2 or npan % 2:
        raise ValueError("Simpson rule needs an even number of panels")
    return h / 3.0 * (values[0] + values[-1]
                      + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())


def richardson_limit(values, ratio=2.0, powers=None):
    """Richardson table for ``values[j] ~ L + sum_p c_p h_j**p``, ``h_j = h_0 / ratio**j``.

    ``powers`` defaults to 1, 2, 3, ...  Returns ``(limit, error_estimate)``
    where the error estimate is the change across the last table level.
    """
    values = np.asarray(values, dtype=float)
    m = len(values)
    if m < 2:
        raise ValueError("need at least two values")
    if powers is None:
        powers = np.arange(1, m)
    table = [values.copy()]
    for lev in range(1, m):
        prev = table[-1]
        fac = ratio ** powers[lev - 1]
        table.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    return float(table[-1][-1]), float(abs(table[-1][-1] - table[-2][-1]))
