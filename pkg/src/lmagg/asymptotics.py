"""Numerical checks of the local power laws of the mixture integrals.

A singular mixture behaves like ``f(lam_s + delta) = C delta^-a + B + o(1)``.
Successive differences along a geometric ladder of offsets remove the regular
part ``B``, so the exponent is fitted from ``log(f(delta_{k+1}) - f(delta_k))``
against ``log(delta_k)``. The plain log-log slope of ``f`` is reported next to it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .classify import REGION_LM, phase_diagram, phase_region
from .errors import PreconditionViolated
from .laws import CONTINUOUS, DISCRETE, AngularLaw, RadialLaw
from .model import REGIME_INDEPENDENT, complex_pair_model
from .poles import COMPLEX, REAL
from .shapes import CONSTANT, Shape, indicator
from .spectral import F, group_average, spectrum_values

LADDER_TOP = 1     # first decade: offsets start at 10^-1
LADDER_BOTTOM = 6  # last offset 10^-6
PER_DECADE = 4
RESIDUAL_LIMIT = 0.02
ORACLE_TOL = 1e-8


@dataclass
class AsymptoticFit:
    target: float
    offsets: np.ndarray
    values: np.ndarray
    fitted_exponent: float
    raw_slope: float
    local_slopes: list
    predicted_exponent: float | None = None
    fitted_constant: float | None = None
    predicted_constant: float | None = None
    constant_trace: list = field(default_factory=list)
    residual: float = 0.0
    drift: float | None = None

    @property
    def power_law(self) -> bool:
        return self.residual <= RESIDUAL_LIMIT

    @property
    def exponent_error(self) -> float | None:
        if self.predicted_exponent is None:
            return None
        return self.fitted_exponent - self.predicted_exponent

    @property
    def constant_ratio(self) -> float | None:
        if self.fitted_constant is None or not self.predicted_constant:
            return None
        return self.fitted_constant / self.predicted_constant

    def to_dict(self) -> dict:
        return {"target": self.target, "fitted_exponent": self.fitted_exponent,
                "raw_slope": self.raw_slope, "predicted_exponent": self.predicted_exponent,
                "fitted_constant": self.fitted_constant, "predicted_constant": self.predicted_constant,
                "local_slopes": list(map(float, self.local_slopes)), "residual": self.residual,
                "drift": self.drift, "power_law": self.power_law}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def rows(self):
        """``(offset, value)`` pairs for CSV fit tables."""
        return list(zip(self.offsets.tolist(), self.values.tolist()))


def ladder(top: int = LADDER_TOP, bottom: int = LADDER_BOTTOM, per_decade: int = PER_DECADE):
    if bottom - top < 3:
        raise PreconditionViolated("the ladder must cover at least 3 decades")
    k = np.arange((bottom - top) * per_decade + 1)
    return 10.0 ** (-top - k / per_decade)


def fit_singularity(f, target: float, *, predicted_exponent=None, predicted_constant=None,
                    sides=(-1.0, 1.0), top=LADDER_TOP, bottom=LADDER_BOTTOM,
                    per_decade=PER_DECADE) -> AsymptoticFit:
    """Fit ``f(target + delta) ~ C delta^-a`` over a decade ladder of offsets.

    ``f`` maps an array of frequencies to values; both sides of the target are
    averaged unless ``sides`` says otherwise.
    """
    delta = ladder(top, bottom, per_decade)
    vals = np.zeros_like(delta)
    for s in sides:
        vals += np.asarray(f(target + s * delta), dtype=float)
    vals /= len(sides)
    logd = np.log(delta)
    diffs = vals[1:] - vals[:-1]
    last = slice(-per_decade, None)
    # raw slope over the final decade
    raw = -np.polyfit(logd[-per_decade - 1:], np.log(np.abs(vals[-per_decade - 1:])), 1)[0]
    local = []
    for j in range(bottom - top):
        sl = slice(j * per_decade, (j + 1) * per_decade + 1)
        local.append(-np.polyfit(logd[sl], np.log(np.abs(vals[sl])), 1)[0])
    if np.all(diffs[last] > 0):
        x, y = logd[:-1][last], np.log(diffs[last])
        coef = np.polyfit(x, y, 1)
        exponent = -coef[0]
        residual = float(np.sqrt(np.mean((np.polyval(coef, x) - y) ** 2)))
    else:
        # no blow-up: the differences stop being positive, report the raw slope
        exponent, residual = raw, 0.0
    fit = AsymptoticFit(target, delta, vals, float(exponent), float(raw), local,
                        predicted_exponent, None, predicted_constant, [], residual)
    a = predicted_exponent if predicted_exponent is not None else exponent
    if a > 0:
        scale = delta[1:] ** (-a) - delta[:-1] ** (-a)
        trace = diffs / scale
        fit.constant_trace = trace.tolist()
        fit.fitted_constant = float(np.mean(trace[last]))
        prev = float(np.mean(trace[-2 * per_decade:-per_decade]))
        fit.drift = abs(fit.fitted_constant / prev - 1.0) if prev else None
    return fit


# ---------------------------------------------------------------------------
# oracle integrals


def _quad(f, a, b, points=None):
    kw = dict(epsabs=0.0, epsrel=ORACLE_TOL * 0.1, limit=400)
    if points and math.isfinite(a) and math.isfinite(b):
        kw["points"] = points
    return integrate.quad(f, a, b, **kw)[0]


def radial_constant(d: float, n: float) -> float:
    """``int_0^inf u^d (1 + u^2)^(-n/2) du``, finite for ``-1 < d < n - 1``."""
    return 0.5 * special.beta((d + 1) / 2, (n - d - 1) / 2)


def pair_constant(d: float, n: float, alpha: float) -> float:
    """Double integral for a diffuse pair located at 0 or pi.

    ``int_R int_0^inf u^d |t|^-alpha [((t-1)^2+u^2)((t+1)^2+u^2)]^(-n/2) du dt``.
    """
    def inner(t):
        # u = c w with c = |t - 1| keeps the integrand of order one for every t
        c = abs(t - 1.0)
        g = lambda w: w ** d * (1 + w * w) ** (-n / 2) * ((t + 1) ** 2 + (c * w) ** 2) ** (-n / 2)
        # the second factor switches on at w ~ (t + 1) / c; integrate up to it in log w
        k = max(1.0, (t + 1) / c)
        body = _quad(lambda x: g(math.exp(x)) * math.exp(x), 0.0, math.log(k)) if k > 1 else 0.0
        return c ** (d + 1 - n) * (_quad(g, 0.0, 1.0) + body + k * _quad(lambda v: g(k * v), 1.0, math.inf))

    h = lambda t: inner(t) * t ** (-alpha)
    # the tail t > 2 is folded onto (0, 1/2] through t = 1/v
    tail = lambda v: h(1.0 / v) / (v * v)
    half = _quad(h, 0.0, 0.5) + _quad(h, 0.5, 1.0) + _quad(h, 1.0, 2.0) + _quad(tail, 0.0, 0.5)
    return 2.0 * half


def offset_constant(d: float, n: float, alpha: float) -> float:
    """``int_R |t|^-alpha |t - 1|^-(n-1-d) dt`` for a diffuse pair away from 0 and pi."""
    e = n - 1.0 - d
    h = lambda t: abs(t) ** (-alpha) * abs(t - 1.0) ** (-e)
    # algebraic endpoint weights absorb the singular factors at 0 and 1 exactly
    kw = dict(epsabs=0.0, epsrel=ORACLE_TOL * 0.1, limit=400, weight="alg")
    near = (integrate.quad(lambda t: (1.0 - t) ** (-e), -1.0, 0.0, wvar=(0.0, -alpha), **kw)[0]
            + integrate.quad(lambda t: 1.0, 0.0, 1.0, wvar=(-alpha, -e), **kw)[0]
            + integrate.quad(lambda t: t ** (-alpha), 1.0, 2.0, wvar=(-e, 0.0), **kw)[0])
    return _quad(h, -math.inf, -1.0) + near + _quad(h, 2.0, math.inf)


# ---------------------------------------------------------------------------
# lemma checks


@dataclass
class _CheckGroup:
    """Minimal group record accepted by :func:`group_average` (``multiplicity = n/2``)."""

    kind: str
    radial: RadialLaw
    angular: AngularLaw
    multiplicity: float

    @property
    def flavor(self):
        return self.radial.flavor


def _radial(d, phi, flavor):
    if flavor == DISCRETE:
        return RadialLaw(d=d, phi=phi or CONSTANT)
    return RadialLaw.continuous(d, phi)


def lemma1_check(d: float, n: int, case: int = 1, phi: Shape | None = None,
                 theta0: float | None = None, flavor: str = DISCRETE, **ladder_kw) -> AsymptoticFit:
    """Single-integral mixture of a fixed-angle root group near its singular frequency.

    ``case`` 1: frequency 0; 2: frequency pi; 3: a conjugate pair at ``theta0``.
    For ``flavor='continuous'`` case 1 is the real root at 0 and case 3 the pair
    at ``tau0 = theta0``.
    """
    if not -1.0 < d < n - 1:
        raise PreconditionViolated(f"need -1 < d < n - 1, got d={d}, n={n}")
    law = _radial(d, phi, flavor)
    if case == 1:
        kind, t0 = REAL, 0.0
    elif case == 2:
        if flavor == CONTINUOUS:
            raise PreconditionViolated("continuous flavor has no pi case")
        kind, t0 = REAL, math.pi
    elif case == 3:
        if theta0 is None or theta0 <= 0 or (flavor == DISCRETE and theta0 >= math.pi):
            raise PreconditionViolated("case 3 needs theta0 away from 0 and pi")
        kind, t0 = COMPLEX, float(theta0)
    else:
        raise PreconditionViolated("case must be 1, 2 or 3")
    grp = _CheckGroup(kind, law, AngularLaw(1.0, t0, flavor=flavor), n / 2.0)
    scale = law.norm

    def f(lam):
        return scale * group_average(grp, np.abs(lam), F)

    const = law.phi_at_singular() * radial_constant(d, n)
    if case == 3:
        const *= (2.0 * math.sin(t0)) ** (-n) if flavor == DISCRETE else (2.0 * t0) ** (-n)
    sides = (-1.0,) if case == 2 else (-1.0, 1.0)
    return fit_singularity(f, t0, predicted_exponent=n - 1 - d, predicted_constant=const,
                           sides=sides, **ladder_kw)


def lemma2_check(d: float, n: int, alpha: float, case: int = 1, phi: Shape | None = None,
                 psi: Shape | None = None, theta0: float | None = None,
                 flavor: str = DISCRETE, **ladder_kw) -> AsymptoticFit:
    """Double-integral mixture of a pair with a diffuse angular law ``psi |t - t0|^-alpha``.

    Cases 1 and 2 put ``t0`` at 0 and pi; case 3 away from both. In case 2 the
    angular law lives on ``[0, pi]`` so only one side of ``t0`` carries mass and
    the oracle constant is halved accordingly.
    """
    if not alpha < 1.0:
        raise PreconditionViolated("alpha must be < 1")
    if case in (1, 2):
        if not n - 1 < d < 2 * n - 2 + alpha:
            raise PreconditionViolated(f"need n-1 < d < 2n-2+alpha, got d={d}")
        predicted = 2 * n - 2 - d + alpha
    elif case == 3:
        if not n - 2 < d < n - 2 + alpha:
            raise PreconditionViolated(f"need n-2 < d < n-2+alpha, got d={d}")
        predicted = n - 2 - d + alpha
        if theta0 is None or theta0 <= 0 or (flavor == DISCRETE and theta0 >= math.pi):
            raise PreconditionViolated("case 3 needs theta0 away from 0 and pi")
    else:
        raise PreconditionViolated("case must be 1, 2 or 3")
    if case == 2 and flavor == CONTINUOUS:
        raise PreconditionViolated("continuous flavor has no pi case")
    law = _radial(d, phi, flavor)
    psi = psi or CONSTANT
    t0 = {1: 0.0, 2: math.pi}.get(case, theta0)
    support = (0.0, math.pi) if case == 2 else None
    ang = AngularLaw(alpha, t0, psi, flavor, support)
    grp = _CheckGroup(COMPLEX, law, ang, n / 2.0)
    scale = law.norm * ang.norm

    def f(lam):
        return scale * group_average(grp, np.abs(lam), F)

    lead = law.phi_at_singular() * psi.value(ang._nudge(t0))
    if case in (1, 2):
        const = lead * pair_constant(d, n, alpha) * (0.5 if case == 2 else 1.0)
    else:
        factor = (2.0 * math.sin(t0)) ** (-n) if flavor == DISCRETE else (2.0 * t0) ** (-n)
        const = lead * factor * offset_constant(d, n, alpha) * radial_constant(d, n)
    sides = (-1.0,) if case == 2 else (-1.0, 1.0)
    return fit_singularity(f, t0, predicted_exponent=predicted, predicted_constant=const,
                           sides=sides, **ladder_kw)


# ---------------------------------------------------------------------------
# disappearance of long memory


@dataclass
class SweepRow:
    d: float
    beta: float
    region: int
    alpha: float | None
    fitted: float | None = None


def angular_support(theta0: float, width: float | None = None):
    """Support of the diffuse angular law used in sweeps.

    Away from 0 and pi the closed support stays clear of both; at 0 or pi it
    is a symmetric window around ``theta0``.
    """
    if 0.0 < theta0 < math.pi:
        w = width or 0.5 * min(theta0, math.pi - theta0)
        return theta0 - w, theta0 + w
    w = width or 0.5 * math.pi
    return (-w, w) if theta0 == 0.0 else (math.pi - w, math.pi)


def sweep_model(d: float, beta: float, theta0: float):
    lo, hi = angular_support(theta0)
    return complex_pair_model(d, beta, theta0, psi=indicator(lo - 1.0, hi + 1.0), support=(lo, hi))


def slope_at(d: float, beta: float, theta0: float, **ladder_kw) -> AsymptoticFit:
    model = sweep_model(d, beta, theta0)
    sides = (-1.0,) if theta0 == math.pi else (-1.0, 1.0)
    return fit_singularity(lambda lam: spectrum_values(model, lam, F), theta0, sides=sides,
                           **ladder_kw)


def disappearance_sweep(d_values, beta_values, theta0: float = math.pi / 4, fit_points=(),
                        regime: str = REGIME_INDEPENDENT):
    """Classifier regions on a ``(d, beta)`` grid plus slope fits at chosen LM points.

    Slope fits use the mixture ``F``, so they are only meaningful in the
    independent regime.
    """
    rows = [SweepRow(p.d, p.beta, p.region, p.alpha)
            for p in phase_diagram(d_values, beta_values, theta0, regime)]
    index = {(r.d, r.beta): r for r in rows}
    for d, b in fit_points:
        r = index.get((float(d), float(b)))
        if r is None:
            p = phase_region(float(d), float(b), theta0, regime)
            r = SweepRow(p.d, p.beta, p.region, p.alpha)
            rows.append(r)
        if r.region == REGION_LM:
            r.fitted = slope_at(float(d), float(b), theta0).fitted_exponent
    return rows
