"""Grouped random poles and the polynomial / MA / impulse-response forms.

Discrete flavor: ``A(s) = prod (1 - y_k s)^{m_k}`` with ``y_k = rho_k e^{i theta_k}``.
Continuous flavor: ``A(s) = prod (s + y_k)^{m_k}`` with ``y_k = r_k +- i tau_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import factorial

from .errors import DegeneratePoles, InvalidLaw, NonRealCoefficient
from .laws import CONTINUOUS, DISCRETE, AngularLaw, MixedAngularLaw, RadialLaw

REAL = "real"
COMPLEX = "complex"

IMAG_TOL = 1e-10  # relative
COINCIDENT_TOL = 1e-9  # absolute
MA_TARGET = 1e-12


@dataclass
class PoleGroupSpec:
    """One root group: real root or conjugate pair, multiplicity and laws.

    Real discrete groups carry ``sign``: ``-1`` gives the factor ``(1 - rho s)``
    (singularity at frequency 0), ``+1`` gives ``(1 + rho s)`` (at pi).
    Real continuous groups sit at ``tau = 0``.
    """

    kind: str
    radial: RadialLaw
    angular: AngularLaw | MixedAngularLaw | None = None
    multiplicity: int = 1
    sign: int = -1

    def __post_init__(self):
        if self.kind not in (REAL, COMPLEX):
            raise InvalidLaw(f"unknown group kind {self.kind!r}")
        if int(self.multiplicity) < 1:
            raise InvalidLaw("multiplicity must be >= 1")
        self.multiplicity = int(self.multiplicity)
        flavor = self.radial.flavor
        if self.kind == REAL:
            if flavor == DISCRETE:
                if self.sign not in (-1, 1):
                    raise InvalidLaw("real discrete group sign must be -1 or +1")
                theta0 = 0.0 if self.sign == -1 else math.pi
            else:
                theta0 = 0.0
            if self.angular is not None and not (self.angular.is_dirac and self.angular.theta0 == theta0):
                raise InvalidLaw(f"real groups carry a Dirac angular law at {theta0}")
            self.angular = AngularLaw(beta=1.0, theta0=theta0, flavor=flavor)
        elif self.angular is None:
            raise InvalidLaw("complex groups need an angular law")

    @property
    def flavor(self) -> str:
        return self.radial.flavor

    @property
    def theta0(self) -> float:
        return self.angular.theta0

    @property
    def beta(self) -> float:
        return self.angular.beta

    @property
    def degree(self) -> int:
        return self.multiplicity * (1 if self.kind == REAL else 2)

    def draw(self, rng) -> "GroupDraw":
        radius = float(self.radial.sample(rng))
        angle = float(self.angular.sample(rng))
        return GroupDraw(self.kind, self.multiplicity, radius, angle)


@dataclass(frozen=True)
class GroupDraw:
    kind: str
    multiplicity: int
    radius: float
    angle: float


@dataclass(frozen=True)
class PoleSample:
    """Sampled radii/angles, one entry per group."""

    groups: tuple
    flavor: str = DISCRETE

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(
            g if isinstance(g, GroupDraw) else GroupDraw(*g) for g in self.groups))
        for g in self.groups:
            if self.flavor == DISCRETE and not 0.0 < g.radius < 1.0:
                raise InvalidLaw(f"discrete radius {g.radius} outside (0, 1)")
            if self.flavor == CONTINUOUS and not g.radius > 0.0:
                raise InvalidLaw(f"continuous radius {g.radius} must be positive")

    @property
    def order(self) -> int:
        return sum(g.multiplicity * (1 if g.kind == REAL else 2) for g in self.groups)

    def max_modulus(self) -> float:
        """Largest |y_k| (discrete) - governs MA decay and burn-in."""
        return max(g.radius for g in self.groups)

    def roots(self):
        """List of (root, multiplicity) with conjugate pairs expanded."""
        out = []
        for g in self.groups:
            if self.flavor == DISCRETE:
                y = g.radius * complex(math.cos(g.angle), math.sin(g.angle))
                out.append((y, g.multiplicity))
                if g.kind == COMPLEX:
                    out.append((y.conjugate(), g.multiplicity))
            else:
                if g.kind == REAL:
                    out.append((complex(g.radius, g.angle), g.multiplicity))
                else:
                    out.append((complex(g.radius, g.angle), g.multiplicity))
                    out.append((complex(g.radius, -g.angle), g.multiplicity))
        return out


@dataclass
class ArCoefficients:
    a: np.ndarray
    sigma: float = 1.0
    poles: PoleSample | None = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return len(self.a)

    def polynomial(self) -> np.ndarray:
        """``[1, a_1, ..., a_p]``."""
        return np.concatenate([[1.0], self.a])


def expand_polynomial(sample: PoleSample, sigma: float = 1.0) -> ArCoefficients:
    """Real coefficients of ``prod (1 - y_k s)^{m_k}`` (discrete flavor)."""
    if sample.flavor != DISCRETE:
        raise InvalidLaw("expand_polynomial needs a discrete-flavor sample")
    poly = np.array([1.0 + 0j])
    for g in sample.groups:
        y = g.radius * complex(math.cos(g.angle), math.sin(g.angle))
        if g.kind == COMPLEX:
            # conjugate pairing enforced structurally
            factor = np.array([1.0, -2.0 * g.radius * math.cos(g.angle), g.radius ** 2], dtype=complex)
        else:
            factor = np.array([1.0, -y])
        for _ in range(g.multiplicity):
            poly = np.convolve(poly, factor)
    scale = max(1.0, float(np.max(np.abs(poly))))
    if np.max(np.abs(poly.imag)) > IMAG_TOL * scale:
        raise NonRealCoefficient(
            f"imaginary residue {np.max(np.abs(poly.imag)):.3g}; real groups must sit at angle 0 or pi")
    return ArCoefficients(poly.real[1:].copy(), float(sigma), sample)


def ma_coefficients(coeffs: ArCoefficients, count: int) -> np.ndarray:
    """``c_0..c_{count-1}`` of ``1 / A(s)`` by power-series inversion."""
    a = np.asarray(coeffs.a, dtype=float)
    p = len(a)
    c = np.zeros(count)
    if count == 0:
        return c
    c[0] = 1.0
    for j in range(1, count):
        q = min(j, p)
        c[j] = -np.dot(a[:q], c[j - 1::-1][:q])
    return c


def suggest_ma_count(sample: PoleSample, target: float = MA_TARGET) -> int:
    """Truncation length with ``max|y_k|^count < target``."""
    rho = sample.max_modulus()
    return int(math.ceil(math.log(target) / math.log(rho))) + 1


def _distinct_roots(sample: PoleSample):
    """Roots ``z`` of ``prod (s + y_k)`` as poles ``-y_k``, merged within groups."""
    poles = []
    for g in sample.groups:
        m = g.multiplicity
        if g.kind == COMPLEX and abs(g.angle) <= COINCIDENT_TOL:
            group_poles = [(complex(-g.radius, 0.0), 2 * m)]
        elif g.kind == COMPLEX:
            group_poles = [(complex(-g.radius, -g.angle), m), (complex(-g.radius, g.angle), m)]
        else:
            group_poles = [(complex(-g.radius, 0.0), m)]
        for z, mult in group_poles:
            for z2, _ in poles:
                if abs(z - z2) <= COINCIDENT_TOL:
                    raise DegeneratePoles(f"groups sample coincident roots near {z}")
        poles.extend(group_poles)
    return poles


def continuous_impulse_response(sample: PoleSample, t):
    """Inverse Laplace transform of ``prod (s + y_k)^{-m_k}`` at time(s) ``t``.

    Partial fractions: for a pole ``z`` of multiplicity ``M`` the residue terms
    are ``A_l t^{l-1} e^{z t} / (l-1)!`` with ``A_l`` the Taylor coefficients of
    ``G(s) = prod_{other} (s - z_k)^{-M_k}`` at ``z``.
    """
    if sample.flavor != CONTINUOUS:
        raise InvalidLaw("continuous_impulse_response needs a continuous-flavor sample")
    poles = _distinct_roots(sample)
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros(t_arr.shape, dtype=complex)
    for j, (z, M) in enumerate(poles):
        others = [(zk, Mk) for k, (zk, Mk) in enumerate(poles) if k != j]
        derivs = _g_derivatives(z, others, M - 1)
        for l in range(1, M + 1):
            # A_l = G^{(M-l)}(z) / (M-l)!
            A = derivs[M - l] / factorial(M - l)
            out = out + A * t_arr ** (l - 1) * np.exp(z * t_arr) / factorial(l - 1)
    res = out.real
    return float(res) if res.ndim == 0 else res


def _g_derivatives(z, others, order):
    """``G, G', ..., G^{(order)}`` at z for ``G(s) = prod (s - z_k)^{-M_k}``."""
    g0 = 1.0 + 0j
    for zk, Mk in others:
        g0 *= (z - zk) ** (-Mk)

    def log_deriv(q):
        # q-th derivative of G'/G = sum -M_k / (s - z_k)
        return sum(-Mk * (-1) ** q * math.factorial(q) / (z - zk) ** (q + 1) for zk, Mk in others)

    ld = [log_deriv(q) for q in range(order)]
    g = [g0]
    for n in range(1, order + 1):
        g.append(sum(math.comb(n - 1, i) * g[i] * ld[n - 1 - i] for i in range(n)))
    return g


def companion_polynomial(sample: PoleSample) -> np.ndarray:
    """Monic coefficients ``[1, b_1, ..., b_p]`` of ``prod (s + y_k)^{m_k}``."""
    poly = np.array([1.0])
    for g in sample.groups:
        if g.kind == COMPLEX:
            factor = np.array([1.0, 2.0 * g.radius, g.radius ** 2 + g.angle ** 2])
        else:
            factor = np.array([1.0, g.radius])
        for _ in range(g.multiplicity):
            poly = np.convolve(poly, factor)
    return poly


def companion_matrix(sample: PoleSample) -> np.ndarray:
    """State matrix of ``x = (Z, Z', ..., Z^{(p-1)})`` for the continuous flavor."""
    b = companion_polynomial(sample)
    p = len(b) - 1
    A = np.zeros((p, p))
    A[:-1, 1:] = np.eye(p - 1)
    A[-1, :] = -b[1:][::-1]
    return A
