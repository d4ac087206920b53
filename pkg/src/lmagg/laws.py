"""Radial and angular mixture laws for the random poles.

Radial laws put density proportional to ``|1 - rho|^d phi(rho)`` on ``[0, 1]``
(discrete flavor) or ``r^d phi(r)`` on ``[0, inf)`` (continuous flavor).
Angular laws put density proportional to ``psi(theta) |theta - theta0|^-beta``;
``beta == 1`` is the Dirac mass at ``theta0``.

Internally a radial law is handled in its *singular coordinate* ``s``
(``s = 1 - rho`` discrete, ``s = r`` continuous) so that the singular point is
always ``s = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import DiracDensityQuery, InvalidLaw, InvalidMixture, OutOfSupport
from .shapes import CONSTANT, Shape, exp_decay

DISCRETE = "discrete"
CONTINUOUS = "continuous"

CDF_NODES = 4096
CLUSTER_DISTANCE = 1e-6
CONTINUOUS_WINDOW = 5.0  # half-width of the default tau window for non-decaying psi

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _quad(f, a, b, **kw):
    kw.setdefault("limit", 200)
    kw.setdefault("epsabs", 0.0)
    kw.setdefault("epsrel", 1e-12)
    val, _err, *_ = integrate.quad(f, a, b, full_output=1, **kw)
    return val


def _power_end_integral(f, length, expo):
    """Integral of ``t^expo * f(t)`` over ``(0, length]`` for smooth f.

    Uses ``t = exp(x)``; the region below ``1e-14 * length`` is added
    analytically from ``f`` evaluated there.
    """
    if length <= 0:
        return 0.0
    a = expo + 1.0
    x_hi = math.log(length)
    x_lo = x_hi - 32.0 - 30.0 / a
    body = _quad(lambda x: math.exp(a * x) * f(math.exp(x)), x_lo, x_hi)
    tail = f(math.exp(x_lo)) * math.exp(a * x_lo) / a
    return body + tail


class _Tabulated:
    """Inverse-CDF table for a density ``c |x - s0|^e * regular(x)`` near ``s0``.

    ``s0`` is the single singular point (may sit on the support boundary).
    Nodes are geometric in the distance to ``s0``; the innermost interval on each
    side is inverted with the local power law, which keeps quantiles accurate
    even when almost all mass sits within ``1e-6`` of ``s0``.
    """

    def __init__(self, density, lo, hi, s0, expo, nodes=CDF_NODES):
        self.lo, self.hi, self.s0, self.expo = lo, hi, s0, expo
        a = expo + 1.0
        self.a = a
        width = hi - lo
        sides = []
        for sign, length in ((-1.0, s0 - lo), (1.0, hi - s0)):
            if length > 0:
                sides.append((sign, length))
        per_side = max(64, nodes // max(1, len(sides)))
        pieces = []  # list of (x_nodes ascending, masses of intervals)
        inner = {}
        for sign, length in sides:
            tmin = min(CLUSTER_DISTANCE * max(width, 1.0), 0.5 * length)
            dist = np.geomspace(tmin, length, per_side)
            # mass of the innermost interval from the power law with the regular
            # part frozen at tmin (relative error O(tmin))
            reg = density(s0 + sign * tmin) / tmin ** expo
            m0 = reg * tmin ** a / a
            inner[sign] = (tmin, m0)
            lo_d, hi_d = dist[:-1], dist[1:]
            half = 0.5 * (hi_d - lo_d)
            mid = 0.5 * (hi_d + lo_d)
            pts = mid[:, None] + half[:, None] * _GL_X[None, :]
            vals = np.vectorize(density, otypes=[float])(s0 + sign * pts)
            masses = (vals * _GL_W[None, :]).sum(axis=1) * half
            pieces.append((sign, dist, masses, m0))
        # assemble ascending x with cumulative masses
        xs = []
        cum = []
        total = 0.0
        left = [p for p in pieces if p[0] < 0]
        right = [p for p in pieces if p[0] > 0]
        if left:
            _, dist, masses, m0 = left[0]
            # ascending x: from lo (dist[-1]) towards s0 - tmin (dist[0])
            xs.append(self.s0 - dist[::-1])
            cm = np.concatenate([[0.0], np.cumsum(masses[::-1])])
            cum.append(cm)
            total = cm[-1] + m0
            self._left_inner = (dist[0], m0, cm[-1])
        else:
            self._left_inner = None
        if right:
            _, dist, masses, m0 = right[0]
            base = total + m0
            self._right_inner = (dist[0], m0, total)
            xs.append(self.s0 + dist)
            cum.append(base + np.concatenate([[0.0], np.cumsum(masses)]))
            total = cum[-1][-1]
        else:
            self._right_inner = None
        self.x = np.concatenate(xs)
        self.c = np.concatenate(cum) / total
        self.mass = total
        # drop flat stretches (psi may vanish) before building the inverse
        keep = np.concatenate([[True], np.diff(self.c) > 1e-15])
        self._inv = PchipInterpolator(self.c[keep], self.x[keep])
        self._cdf = PchipInterpolator(self.x, self.c)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        flat = x.ravel()
        res = out.ravel()
        for i, xi in enumerate(flat):
            res[i] = self._cdf_scalar(xi)
        return out if out.ndim else float(out)

    def _cdf_scalar(self, xi):
        if xi <= self.lo:
            return 0.0
        if xi >= self.hi:
            return 1.0
        t = xi - self.s0
        if self._left_inner and -self._left_inner[0] < t <= 0:
            tmin, m0, before = self._left_inner
            return (before + m0 * (1.0 - (-t / tmin) ** self.a)) / self.mass
        if self._right_inner and 0 <= t < self._right_inner[0]:
            tmin, m0, before = self._right_inner
            return (before + m0 * (t / tmin) ** self.a) / self.mass
        return float(self._cdf(xi))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        x = np.asarray(self._inv(u), dtype=float)
        if self._left_inner:
            tmin, m0, before = self._left_inner
            lo_u, hi_u = before / self.mass, (before + m0) / self.mass
            sel = (u > lo_u) & (u <= hi_u)
            if np.any(sel):
                frac = np.clip((hi_u - u[sel]) / (hi_u - lo_u), 0.0, 1.0)
                x[sel] = self.s0 - tmin * frac ** (1.0 / self.a)
        if self._right_inner:
            tmin, m0, before = self._right_inner
            lo_u, hi_u = before / self.mass, (before + m0) / self.mass
            sel = (u >= lo_u) & (u < hi_u)
            if np.any(sel):
                frac = np.clip((u[sel] - lo_u) / (hi_u - lo_u), 0.0, 1.0)
                x[sel] = self.s0 + tmin * frac ** (1.0 / self.a)
        return np.clip(x, self.lo, self.hi)


@dataclass
class RadialLaw:
    """Radial law of a pole group.

    ``atom`` turns the law into a point mass (used for degenerate checks); ``d``
    and ``phi`` are then ignored.
    """

    d: float = 0.0
    phi: Shape = CONSTANT
    flavor: str = DISCRETE
    atom: float | None = None
    _z: float = field(init=False, repr=False, default=float("nan"))
    _upper: float = field(init=False, repr=False, default=1.0)
    _table: _Tabulated | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.flavor not in (DISCRETE, CONTINUOUS):
            raise InvalidLaw(f"unknown flavor {self.flavor!r}")
        if self.atom is not None:
            a = float(self.atom)
            if self.flavor == DISCRETE and not 0.0 < a < 1.0:
                raise InvalidLaw("discrete radial atom must lie in (0, 1)")
            if self.flavor == CONTINUOUS and not a > 0.0:
                raise InvalidLaw("continuous radial atom must be positive")
            return
        if not self.d > -1.0:
            raise InvalidLaw(f"radial exponent d={self.d} must exceed -1")
        if self.phi_at_singular() <= 0:
            raise InvalidLaw("phi must be positive at the singular point")
        self._upper = self._support_length()
        self._z = _power_end_integral(self._phi_s, self._upper, self.d)
        if not (math.isfinite(self._z) and self._z > 0):
            raise InvalidLaw("radial law is not normalizable")

    @classmethod
    def continuous(cls, d: float, phi: Shape | None = None) -> "RadialLaw":
        return cls(d=d, phi=phi if phi is not None else exp_decay(1.0), flavor=CONTINUOUS)

    @classmethod
    def point(cls, value: float, flavor: str = DISCRETE) -> "RadialLaw":
        return cls(flavor=flavor, atom=float(value))

    @property
    def is_atom(self) -> bool:
        return self.atom is not None

    # coordinate helpers -------------------------------------------------
    def to_s(self, x):
        return 1.0 - x if self.flavor == DISCRETE else x

    def from_s(self, s):
        return 1.0 - s if self.flavor == DISCRETE else s

    def _phi_s(self, s: float) -> float:
        return self.phi.value(1.0 - s if self.flavor == DISCRETE else s)

    def phi_at_singular(self) -> float:
        return self._phi_s(1e-13)

    def _support_length(self) -> float:
        """Extent of the law in the singular coordinate."""
        sup = self.phi.support()
        if self.flavor == DISCRETE:
            lo = 0.0 if sup is None else max(0.0, sup[0])
            return 1.0 - lo
        if sup is not None:
            return float(sup[1])
        if not self.phi.decays():
            raise InvalidLaw("continuous radial law needs a decaying or bounded phi")
        # truncate the tail where the remaining mass is negligible
        d = self.d
        tail = lambda r: r ** d * self.phi.value(r)
        total = _quad(tail, 1.0, math.inf, epsrel=1e-10) + 1.0
        r = 2.0
        while _quad(tail, r, math.inf, epsrel=1e-8) > 1e-15 * total and r < 1e8:
            r *= 1.5
        return r

    @property
    def upper(self) -> float:
        return self._upper

    @property
    def norm(self) -> float:
        return self._z

    def weight_s(self, s: float) -> float:
        """Normalized density in the singular coordinate (scalar, no checks)."""
        return s ** self.d * self._phi_s(s) / self._z

    def weights_s(self, s):
        """Vectorized normalized density in the singular coordinate."""
        s = np.asarray(s, dtype=float)
        return s ** self.d * self.phi(self.from_s(s)) / self._z

    def kinks_s(self):
        """Non-smooth points of phi, in the singular coordinate, inside the support."""
        out = [float(self.to_s(k)) for k in self.phi.kinks()]
        return sorted(k for k in out if 0.0 < k < self._upper)

    def density(self, x):
        """Normalized density at ``x`` (rho for discrete, r for continuous)."""
        if self.is_atom:
            raise DiracDensityQuery("point-mass radial law has no density")
        x = np.asarray(x, dtype=float)
        s = self.to_s(x)
        if np.any((s < 0) | (s > self._upper)):
            raise OutOfSupport(f"{x} outside radial support")
        with np.errstate(divide="ignore"):
            vals = np.where(s > 0, np.abs(s) ** self.d, np.inf if self.d < 0 else 0.0)
        out = vals * self.phi(self.from_s(s)) / self._z
        return out if out.ndim else float(out)

    def table(self) -> _Tabulated:
        if self._table is None:
            self._table = _Tabulated(lambda s: s ** self.d * self._phi_s(s),
                                     0.0, self._upper, 0.0, self.d)
        return self._table

    def cdf(self, x):
        """CDF in the natural coordinate."""
        s = self.to_s(np.asarray(x, dtype=float))
        c = self.table().cdf(s)
        return 1.0 - c if self.flavor == DISCRETE else c

    def sample_s(self, rng, size=None):
        """Draws in the singular coordinate (keeps full precision near s = 0)."""
        if self.is_atom:
            s = float(self.to_s(self.atom))
            return s if size is None else np.full(size, s)
        s = self.table().ppf(rng.random(size))
        s = np.maximum(s, np.finfo(float).tiny)
        return float(s) if size is None else s

    def sample(self, rng, size=None):
        if self.is_atom:
            return self.atom if size is None else np.full(size, float(self.atom))
        u = rng.random(size)
        s = self.table().ppf(u)
        if self.flavor == DISCRETE:
            # rho = 1 - s must stay strictly inside (0, 1) in floating point
            s = np.clip(s, np.finfo(float).eps, 1.0 - np.finfo(float).eps)
        x = self.from_s(s)
        return float(x) if size is None else x

    def mean(self) -> float:
        if self.is_atom:
            return float(self.atom)
        if self.flavor == DISCRETE:
            return 1.0 - _power_end_integral(lambda s: s * self._phi_s(s), self._upper, self.d) / self._z
        return _power_end_integral(lambda s: s * self._phi_s(s), self._upper, self.d) / self._z

    def to_dict(self) -> dict:
        if self.is_atom:
            return {"atom": self.atom}
        return {"d": self.d, "phi": self.phi.to_dict()}


@dataclass
class AngularLaw:
    """Angular law ``psi(theta) |theta - theta0|^-beta``; Dirac at beta == 1."""

    beta: float = 1.0
    theta0: float = 0.0
    psi: Shape = CONSTANT
    flavor: str = DISCRETE
    support: tuple | None = None
    _z: float = field(init=False, repr=False, default=float("nan"))
    _table: _Tabulated | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.beta > 1.0:
            raise InvalidLaw(f"beta={self.beta} must be <= 1")
        self.theta0 = float(self.theta0)
        if self.is_dirac:
            self.support = (self.theta0, self.theta0)
            return
        self.support = self._resolve_support()
        lo, hi = self.support
        if not lo < hi:
            raise InvalidLaw("empty angular support")
        if lo <= self.theta0 <= hi and self.psi.value(self._nudge(self.theta0)) <= 0:
            raise InvalidLaw("psi must be positive at theta0")
        self._z = self._integrate_unnormalized(lambda t: 1.0)
        if not (math.isfinite(self._z) and self._z > 0):
            raise InvalidLaw("angular law is not normalizable")

    @property
    def is_dirac(self) -> bool:
        return self.beta == 1.0

    def _nudge(self, t):
        lo, hi = self.support
        return min(max(t, lo + 1e-12), hi - 1e-12)

    def _resolve_support(self):
        sup = self.psi.support()
        if self.support is not None:
            lo, hi = map(float, self.support)
        elif self.flavor == DISCRETE:
            lo, hi = -math.pi, math.pi
        elif self.psi.decays() and self.beta < 1.0:
            lo, hi = -math.inf, math.inf
        else:
            lo, hi = self.theta0 - CONTINUOUS_WINDOW, self.theta0 + CONTINUOUS_WINDOW
        if sup is not None:
            lo, hi = max(lo, sup[0]), min(hi, sup[1])
        if self.flavor == DISCRETE:
            lo, hi = max(lo, -math.pi), min(hi, math.pi)
        if math.isinf(lo) or math.isinf(hi):
            lo, hi = self._truncate_tails(lo, hi)
        return lo, hi

    def _truncate_tails(self, lo, hi):
        f = self.unnormalized
        total = _quad(f, self.theta0 + 1.0, math.inf, epsrel=1e-8) + _quad(
            f, -math.inf, self.theta0 - 1.0, epsrel=1e-8) + 1.0
        for side in (1.0, -1.0):
            w = 2.0
            while w < 1e8:
                # in the log variable a power tail becomes an exponential one
                tail = _quad(lambda y: f(self.theta0 + side * math.exp(y)) * math.exp(y),
                             math.log(w), 700.0, epsrel=1e-6)
                if tail < 1e-13 * total:
                    break
                w *= 1.5
            if side > 0:
                hi = min(hi, self.theta0 + w)
            else:
                lo = max(lo, self.theta0 - w)
        return lo, hi

    def unnormalized(self, t: float) -> float:
        dt = abs(t - self.theta0)
        if dt == 0.0:
            return math.inf if self.beta > 0 else (1.0 if self.beta == 0 else 0.0)
        return self.psi.value(t) * dt ** (-self.beta)

    def _integrate_unnormalized(self, g):
        """Integral of ``g(t) * unnormalized(t)`` over the support."""
        lo, hi = self.support
        t0 = self.theta0
        if lo < t0 < hi:
            right = _power_end_integral(lambda u: g(t0 + u) * self.psi.value(t0 + u), hi - t0, -self.beta)
            left = _power_end_integral(lambda u: g(t0 - u) * self.psi.value(t0 - u), t0 - lo, -self.beta)
            return left + right
        if t0 == lo:
            return _power_end_integral(lambda u: g(t0 + u) * self.psi.value(t0 + u), hi - lo, -self.beta)
        if t0 == hi:
            return _power_end_integral(lambda u: g(t0 - u) * self.psi.value(t0 - u), hi - lo, -self.beta)
        return _quad(lambda t: g(t) * self.unnormalized(t), lo, hi)

    @property
    def norm(self) -> float:
        return self._z

    def weight(self, t: float) -> float:
        """Normalized density at ``t`` (scalar, no checks)."""
        return self.unnormalized(t) / self._z

    def weights(self, t, dist):
        """Vectorized density given nodes ``t`` and their exact distances to theta0."""
        t = np.asarray(t, dtype=float)
        inside = (t >= self.support[0]) & (t <= self.support[1])
        return np.where(inside, self.psi(t) * np.asarray(dist, dtype=float) ** (-self.beta), 0.0) / self._z

    def density(self, t):
        if self.is_dirac:
            raise DiracDensityQuery("beta = 1 encodes a Dirac mass; it has no density")
        t = np.asarray(t, dtype=float)
        lo, hi = self.support
        if np.any((t < lo) | (t > hi)):
            raise OutOfSupport(f"{t} outside angular support {self.support}")
        out = np.vectorize(self.unnormalized, otypes=[float])(t) / self._z
        return out if out.ndim else float(out)

    def table(self) -> _Tabulated:
        if self._table is None:
            lo, hi = self.support
            s0 = min(max(self.theta0, lo), hi)
            expo = -self.beta if lo <= self.theta0 <= hi else 0.0
            self._table = _Tabulated(self.unnormalized, lo, hi, s0, expo)
        return self._table

    def cdf(self, t):
        return self.table().cdf(t)

    def sample(self, rng, size=None):
        if self.is_dirac:
            return self.theta0 if size is None else np.full(size, self.theta0)
        x = self.table().ppf(rng.random(size))
        return float(x) if size is None else x

    def components(self):
        return [(1.0, self)]

    def singular_points(self):
        return [self.theta0]

    def edge_contacts(self, tol: float = 1e-12):
        """Edge angles (0, and pi when discrete) other than theta0 where the density is positive.

        A conjugate pair whose angle can approach an edge behaves there like a
        pair located at the edge with a locally flat angular law.
        """
        if self.is_dirac:
            return []
        lo, hi = self.support
        edges = (0.0, math.pi, -math.pi) if self.flavor == DISCRETE else (0.0,)
        out = set()
        for e in edges:
            if abs(self.theta0 - e) <= tol or not lo <= e <= hi:
                continue
            if self.psi.value(min(max(e, lo + 1e-9), hi - 1e-9)) > 0:
                out.add(abs(e))
        return sorted(out)

    def to_dict(self) -> dict:
        out = {"beta": self.beta, "theta0": self.theta0, "psi": self.psi.to_dict()}
        if not self.is_dirac:
            out["support"] = list(self.support)
        return out


@dataclass
class MixedAngularLaw:
    """Atoms plus diffuse singular pieces, e.g. ``sum p_j delta_j + Psi(tau) dtau``.

    Each diffuse piece is an :class:`AngularLaw` with ``beta < 1`` whose
    ``theta0`` is the piece's singular point. Weights are normalized to 1.
    """

    atoms: list
    diffuse: list

    def __post_init__(self):
        weights = [float(w) for w, _ in self.atoms] + [float(w) for w, _ in self.diffuse]
        if any(w < 0 for w in weights):
            raise InvalidMixture("mixture weights must be nonnegative")
        total = sum(weights)
        if not total > 0:
            raise InvalidMixture("mixture has zero total mass")
        for _, law in self.diffuse:
            if law.is_dirac:
                raise InvalidMixture("diffuse pieces must have beta < 1; use atoms for Dirac masses")
        self._parts = [(float(w) / total, AngularLaw(beta=1.0, theta0=float(loc), flavor=self._flavor()))
                       for w, loc in self.atoms]
        self._parts += [(float(w) / total, law) for w, law in self.diffuse]
        self._parts = [(w, law) for w, law in self._parts if w > 0]

    def _flavor(self):
        return self.diffuse[0][1].flavor if self.diffuse else DISCRETE

    @property
    def is_dirac(self) -> bool:
        return len(self._parts) == 1 and self._parts[0][1].is_dirac

    @property
    def beta(self) -> float:
        return max(law.beta for _, law in self._parts)

    @property
    def theta0(self) -> float:
        return max(self._parts, key=lambda p: (p[1].beta, p[0]))[1].theta0

    def components(self):
        return list(self._parts)

    def singular_points(self):
        return [law.theta0 for _, law in self._parts]

    def density(self, t):
        """Density of the diffuse part only (atoms carry no density)."""
        if not self.diffuse:
            raise DiracDensityQuery("purely atomic law has no density")
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for w, law in self._parts:
            if law.is_dirac:
                continue
            lo, hi = law.support
            inside = (t >= lo) & (t <= hi)
            vals = np.zeros_like(t)
            if np.any(inside):
                vals[inside] = law.density(t[inside])
            out = out + w * vals
        return out if out.ndim else float(out)

    def sample(self, rng, size=None):
        n = 1 if size is None else int(np.prod(size))
        weights = np.array([w for w, _ in self._parts])
        which = rng.choice(len(self._parts), size=n, p=weights / weights.sum())
        out = np.empty(n)
        for k, (_, law) in enumerate(self._parts):
            sel = which == k
            cnt = int(sel.sum())
            if cnt:
                out[sel] = law.sample(rng, cnt)
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def to_dict(self) -> dict:
        return {"atoms": [[w, loc] for w, loc in self.atoms],
                "diffuse": [[w, law.to_dict()] for w, law in self.diffuse]}


def mixed_angular_law(atoms, diffuse_parts=()) -> MixedAngularLaw:
    """Build a mixed atomic/diffuse angular law (see :class:`MixedAngularLaw`)."""
    return MixedAngularLaw(list(atoms), list(diffuse_parts))


def density(law, x):
    return law.density(x)


def sample(law, rng, size=None):
    return law.sample(rng, size)
