"""Adaptive quadrature helpers for integrands with endpoint power singularities.

The mixture integrals are all of the form ``int_0 s^d k(s) ds`` where the kernel
``k`` changes on a few known scales (distances of the frequency to the pole
angles). Writing ``s = exp(x)`` turns the power singularity into an
exponentially decaying tail and the multi-scale structure into features of unit
width located at ``log(scale)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .errors import QuadratureNonConvergent

DEFAULT_EPSREL = 1e-10
TAIL_DECADES = 25.0  # natural-log units kept below the smallest scale
ACCEPT_REL = 1e-6  # error estimate tolerated when quad reports ier != 0


def quad(f, a, b, *, epsrel=DEFAULT_EPSREL, points=None, limit=200):
    """``scipy.integrate.quad`` that raises instead of warning."""
    if a == b:
        return 0.0
    kw = dict(epsabs=0.0, epsrel=epsrel, limit=limit, full_output=1)
    if points is not None and len(points):
        kw["points"] = points
        kw["limit"] = max(limit, 4 * len(points) + 50)
    out = integrate.quad(f, a, b, **kw)
    val, err = out[0], out[1]
    if not math.isfinite(val):
        raise QuadratureNonConvergent(f"non-finite integral on [{a}, {b}]")
    if len(out) > 3 and err > ACCEPT_REL * abs(val) + 1e-300:
        raise QuadratureNonConvergent(
            f"quadrature on [{a}, {b}] stopped with error estimate {err:.3g} for value {val:.6g}")
    return val


def power_weighted(w, d, k, upper, scales, *, epsrel=DEFAULT_EPSREL):
    """Integral of ``w(s) * k(s)`` over ``(0, upper]``.

    ``w`` behaves like ``c s^d`` at 0 (``d > -1``); ``k`` is smooth with
    transitions at the given ``scales``. Contributions below ``exp(-25)`` times
    the smallest scale are added from the local power law.
    """
    x_hi = math.log(upper)
    logs = sorted(math.log(sc) for sc in scales if 0.0 < sc < upper)
    x_lo = (logs[0] if logs else x_hi) - TAIL_DECADES
    exp = math.exp

    def f(x):
        s = exp(x)
        return s * w(s) * k(s)

    body = quad(f, x_lo, x_hi, epsrel=epsrel, points=logs or None)
    s_lo = exp(x_lo)
    tail = s_lo * w(s_lo) * k(s_lo) / (d + 1.0)
    return body + tail


def cluster_points(centers, lo, hi, ratio=4.0):
    """Breakpoints geometrically refined around clustered singular points.

    Around each center, points at ``gap/2 * ratio^k`` (k >= 0) on both sides,
    where ``gap`` is the distance to the nearest other center (or the interval
    width). Lets per-panel quadrature see only endpoint singularities.
    """
    cs = sorted({c for c in centers if lo <= c <= hi})
    width = hi - lo
    pts = set(c for c in cs if lo < c < hi)
    for i, c in enumerate(cs):
        others = [abs(c - o) for j, o in enumerate(cs) if j != i and o != c]
        gap = min(others) if others else width
        gap = max(gap, 1e-15 * max(1.0, abs(c)))
        step = gap / 2.0
        while step < width:
            for p in (c - step, c + step):
                if lo < p < hi:
                    pts.add(p)
            step *= ratio
    return sorted(pts)


def panel_integral(f, lo, hi, breakpoints, *, epsrel=DEFAULT_EPSREL):
    """Sum of per-panel adaptive integrals between consecutive breakpoints."""
    edges = [lo] + [p for p in breakpoints if lo < p < hi] + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += quad(f, a, b, epsrel=epsrel)
    return total


GL8_X, GL8_W = np.polynomial.legendre.leggauss(8)


def gauss_legendre(f, a, b, nodes=8):
    """Fixed-order Gauss-Legendre rule for smooth integrands (vectorized f)."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(w, f(mid + half * x)))
