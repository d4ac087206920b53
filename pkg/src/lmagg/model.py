"""Model description shared by the spectral, classifier and simulation code."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import InvalidLaw, NotPSD
from .laws import CONTINUOUS, DISCRETE
from .poles import COMPLEX, REAL, PoleGroupSpec, PoleSample

MAX_ORDER = 8

INDEPENDENT = "independent"
COMMON = "common"
INTERACTIVE = "interactive"

# regimes used by the classifier
REGIME_INDEPENDENT = "independent"
REGIME_COMMON = "common"
REGIME_WEAK = "interactive_weak"
REGIME_STRONG = "interactive_strong"
REGIMES = (REGIME_INDEPENDENT, REGIME_COMMON, REGIME_WEAK, REGIME_STRONG)

CHI_PRESETS = ("geometric", "log_decay", "power", "explicit")


@dataclass
class InnovationScheme:
    """Cross-sectional structure of the innovations.

    ``chi`` presets for the interactive scheme:

    * ``geometric``: ``chi(j) = rate^j`` (summable, weak interaction)
    * ``log_decay``: ``chi(j) = 1 / ((j + 1) log^2(j + 2))`` scaled so ``chi(0) = 1``
      (summable slow decay, weak)
    * ``power``: ``chi(j) = (1 + j)^-gamma`` with ``gamma <= 1`` (non-summable, strong)
    * ``explicit``: ``values`` list, zero beyond it (weak)
    """

    kind: str = INDEPENDENT
    chi: str | None = None
    params: dict = field(default_factory=dict)
    normalization: float | None = None  # user-supplied B_N for interactive runs

    def __post_init__(self):
        if self.kind not in (INDEPENDENT, COMMON, INTERACTIVE):
            raise InvalidLaw(f"unknown innovation scheme {self.kind!r}")
        if self.kind == INTERACTIVE:
            if self.chi not in CHI_PRESETS:
                raise InvalidLaw(f"interactive scheme needs chi in {CHI_PRESETS}")

    def chi_values(self, n: int) -> np.ndarray:
        """``chi(0..n-1)``."""
        j = np.arange(n, dtype=float)
        p = self.params
        if self.chi == "geometric":
            out = float(p.get("rate", 0.5)) ** j
        elif self.chi == "log_decay":
            raw = 1.0 / ((j + 1.0) * np.log(j + 2.0) ** 2)
            out = raw / raw[0]
        elif self.chi == "power":
            out = (1.0 + j) ** (-float(p.get("gamma", 0.5)))
        elif self.chi == "explicit":
            vals = [1.0] + [float(v) for v in p.get("values", [])][: max(0, n - 1)]
            out = np.zeros(n)
            out[: len(vals)] = vals[:n]
        else:
            out = np.zeros(n)
            out[0] = 1.0
        return out

    def correlation_matrix(self, n: int) -> np.ndarray:
        if self.kind == INDEPENDENT:
            return np.eye(n)
        if self.kind == COMMON:
            return np.ones((n, n))
        return toeplitz(self.chi_values(n))

    def check_psd(self, n: int, tol: float = 1e-10) -> None:
        if self.kind != INTERACTIVE:
            return
        w = np.linalg.eigvalsh(self.correlation_matrix(n))
        if w[0] < -tol:
            raise NotPSD(f"Toeplitz(chi) has eigenvalue {w[0]:.3g} at N={n}")

    def regime(self) -> str:
        if self.kind == INDEPENDENT:
            return REGIME_INDEPENDENT
        if self.kind == COMMON:
            return REGIME_COMMON
        if self.chi == "power" and float(self.params.get("gamma", 0.5)) <= 1.0:
            return REGIME_STRONG
        return REGIME_WEAK

    def default_normalization(self, n: int) -> float:
        if self.kind == INDEPENDENT:
            return math.sqrt(n)
        if self.kind == COMMON:
            return float(n)
        if self.normalization is not None:
            return float(self.normalization)
        # variance matching: sqrt(sum_{|i-j|<N} chi(i - j)) over the N x N panel
        chi = self.chi_values(n)
        k = np.arange(1, n)
        return math.sqrt(n * chi[0] + 2.0 * float(np.sum((n - k) * chi[1:])))

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.chi:
            out["chi"] = self.chi
            out["params"] = dict(self.params)
        if self.normalization is not None:
            out["normalization"] = self.normalization
        return out


@dataclass
class ModelSpec:
    flavor: str
    groups: list
    sigma: float = 1.0
    innovation: InnovationScheme = field(default_factory=InnovationScheme)
    max_order: int = MAX_ORDER

    def __post_init__(self):
        if self.flavor not in (DISCRETE, CONTINUOUS):
            raise InvalidLaw(f"unknown flavor {self.flavor!r}")
        if not self.groups:
            raise InvalidLaw("model needs at least one pole group")
        for g in self.groups:
            if not isinstance(g, PoleGroupSpec):
                raise InvalidLaw("groups must be PoleGroupSpec instances")
            if g.flavor != self.flavor:
                raise InvalidLaw("group flavor does not match model flavor")
        if self.order > self.max_order:
            raise InvalidLaw(f"order {self.order} exceeds maximum {self.max_order}")
        if not self.sigma > 0:
            raise InvalidLaw("sigma must be positive")

    @property
    def order(self) -> int:
        return sum(g.degree for g in self.groups)

    def draw(self, rng) -> PoleSample:
        return PoleSample(tuple(g.draw(rng) for g in self.groups), self.flavor)

    def singular_frequencies(self) -> list:
        """Frequencies where the mixtures may blow up (nonnegative and mirrored)."""
        out = set()
        for g in self.groups:
            for _, law in g.angular.components():
                t = law.theta0
                if g.kind == REAL:
                    out.add(t)
                else:
                    out.add(t)
                    out.add(-t)
                    out.update(law.edge_contacts())
        if self.flavor == DISCRETE:
            # pi and -pi are the same frequency; keep pi
            out = {math.pi if abs(t + math.pi) < 1e-15 else t for t in out}
        return sorted(out)

    @property
    def is_real_coefficient(self) -> bool:
        return True


def ar1_model(d: float, sign: int = -1, phi=None, sigma: float = 1.0,
              innovation: InnovationScheme | None = None) -> ModelSpec:
    """Shorthand for the AR(1) random-pole model."""
    from .laws import RadialLaw
    from .shapes import CONSTANT
    radial = RadialLaw(d=d, phi=phi or CONSTANT)
    return ModelSpec(DISCRETE, [PoleGroupSpec(REAL, radial, sign=sign)], sigma,
                     innovation or InnovationScheme())


def complex_pair_model(d: float, beta: float, theta0: float, psi=None, support=None,
                       multiplicity: int = 1, sigma: float = 1.0,
                       innovation: InnovationScheme | None = None) -> ModelSpec:
    from .laws import AngularLaw, RadialLaw
    from .shapes import CONSTANT
    angular = AngularLaw(beta=beta, theta0=theta0, psi=psi or CONSTANT, support=support)
    return ModelSpec(DISCRETE, [PoleGroupSpec(COMPLEX, RadialLaw(d=d), angular, multiplicity)],
                     sigma, innovation or InnovationScheme())
