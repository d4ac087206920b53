"""Closed-form existence and long-memory verdicts for aggregated AR(p)/OU(p) panels.

Every verdict is derived from one exponent engine:

* each group contributes a blow-up exponent ``e`` of its mixture factor at each
  of its singular frequencies (``F`` level for independent innovations, ``|H|``
  level for a common innovation, where ``n = 2m`` and ``n = m`` respectively);
* factors sharing a frequency multiply, so their positive exponents add;
* the spectral exponent is ``alpha = e`` (independent / weak interaction) or
  ``alpha = 2 e`` (common / strong interaction);
* the aggregate exists iff every ``alpha < 1``; it has long memory iff it exists
  and some ``alpha > 0``.

Group exponents (``beta = 1`` means a fixed angle):

=================================  =======================
real root at 0 or pi                ``n - 1 - d``
conjugate pair located at 0 or pi   ``2n - 2 + beta - d``
conjugate pair elsewhere            ``n - 2 + beta - d``
=================================  =======================
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidLaw
from .laws import CONTINUOUS, DISCRETE
from .model import (REGIME_COMMON, REGIME_INDEPENDENT, REGIME_STRONG, REGIME_WEAK, REGIMES,
                    ModelSpec)
from .poles import COMPLEX, REAL

EDGE_TOL = 1e-12  # angles this close to 0 or pi count as located there

REGION_NONE = 0
REGION_EXISTS = 1
REGION_LM = 2


class InnovationRegime:
    """Names of the four innovation regimes."""

    INDEPENDENT = REGIME_INDEPENDENT
    COMMON = REGIME_COMMON
    WEAK = REGIME_WEAK
    STRONG = REGIME_STRONG
    ALL = REGIMES

    @staticmethod
    def check(regime: str) -> str:
        if regime not in REGIMES:
            raise InvalidLaw(f"unknown regime {regime!r}; expected one of {REGIMES}")
        return regime

    @staticmethod
    def uses_transfer(regime: str) -> bool:
        """True when the limit spectrum is ``|H|^2`` rather than ``F``."""
        return regime in (REGIME_COMMON, REGIME_STRONG)


@dataclass
class GroupParams:
    """Exponent-relevant summary of one pole group."""

    d: float
    beta: float = 1.0
    theta0: float = 0.0
    m: int = 1
    kind: str | None = None  # inferred: fixed angle at 0/pi means a real root
    weight: float = 1.0  # component weight when the angular law is a mixture
    atom: bool = False  # point-mass radial law: no singularity

    def __post_init__(self):
        if self.beta > 1.0:
            raise InvalidLaw("beta must be <= 1")
        if not self.atom and not self.d > -1.0:
            raise InvalidLaw("d must exceed -1")
        if self.kind is None:
            self.kind = REAL if (self.beta == 1.0 and self.at_edge_discrete()) else COMPLEX

    def at_edge_discrete(self) -> bool:
        t = abs(self.theta0)
        return t <= EDGE_TOL or abs(t - math.pi) <= EDGE_TOL


@dataclass
class Singularity:
    frequency: float
    alpha: float
    groups: list

    def to_dict(self):
        return {"frequency": self.frequency, "alpha": self.alpha, "groups": list(self.groups)}


@dataclass
class LMReport:
    exists: bool
    exists_condition: str
    long_memory: bool
    singularities: list
    regime: str
    regime_inputs: list
    flavor: str = DISCRETE
    exists_source: str = "closed-form"  # or "numeric" when no closed form applies
    notes: list = field(default_factory=list)
    needs_numeric_check: bool = False

    def alphas(self) -> dict:
        return {s.frequency: s.alpha for s in self.singularities}

    def summary_line(self) -> str:
        parts = [f"exists={str(self.exists).lower()}", f"lm={str(self.long_memory).lower()}"]
        for s in sorted(self.singularities, key=lambda s: (abs(s.frequency), s.frequency)):
            if s.alpha > 0:
                parts.append(f"alpha={_short(s.alpha)}@{_short(s.frequency)}")
        return " ".join(parts)

    def to_dict(self) -> dict:
        return {"exists": self.exists, "exists_condition": self.exists_condition,
                "exists_source": self.exists_source, "long_memory": self.long_memory,
                "singularities": [s.to_dict() for s in self.singularities],
                "regime": self.regime, "flavor": self.flavor,
                "regime_inputs": self.regime_inputs, "notes": list(self.notes),
                "needs_numeric_check": self.needs_numeric_check}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def table(self) -> str:
        """Fixed-width text rendering."""
        lines = [f"{'exists':<12}{str(self.exists).lower()}",
                 f"{'condition':<12}{self.exists_condition}",
                 f"{'long memory':<12}{str(self.long_memory).lower()}",
                 f"{'regime':<12}{self.regime}",
                 "", f"{'frequency':>14}  {'alpha':>10}  groups"]
        for s in self.singularities:
            lines.append(f"{s.frequency:>14.8g}  {s.alpha:>10.6g}  {','.join(map(str, s.groups))}")
        for n in self.notes:
            lines.append(f"note: {n}")
        return "\n".join(lines)


def _short(x: float) -> str:
    return format(round(float(x), 12), ".10g")


def effective_multiplicity(m: int, regime: str) -> int:
    return m if InnovationRegime.uses_transfer(regime) else 2 * m


def _group_terms(g: GroupParams, n: int, flavor: str):
    """``[(frequency, exponent, finite_lower_bound)]`` for one group (F or |H| level)."""
    if g.atom:
        return []
    t = abs(g.theta0)
    if flavor == DISCRETE:
        if t <= EDGE_TOL:
            t = 0.0
        elif abs(t - math.pi) <= EDGE_TOL:
            t = math.pi
        edge = t in (0.0, math.pi)
    else:
        if t <= EDGE_TOL:
            t = 0.0
        edge = t == 0.0
    if g.kind == REAL:
        if not edge:
            raise InvalidLaw("real roots must sit at angle 0 or pi")
        return [(t, n - 1 - g.d, -1.0)]
    if edge:
        lower = n - 1 if g.beta < 1 else -1.0
        return [(t, 2 * n - 2 + g.beta - g.d, lower)]
    lower = n - 2 if g.beta < 1 else -1.0
    e = n - 2 + g.beta - g.d
    return [(t, e, lower), (-t, e, lower)]


def _canonical(freq: float, flavor: str) -> float:
    if flavor == DISCRETE and abs(abs(freq) - math.pi) <= EDGE_TOL:
        return math.pi
    return 0.0 if freq == 0 else float(freq)


def classify_groups(groups, regime: str, flavor: str = DISCRETE) -> LMReport:
    """Core engine shared by every ``classify_*`` entry point."""
    InnovationRegime.check(regime)
    transfer = InnovationRegime.uses_transfer(regime)
    factor = 2.0 if transfer else 1.0
    groups = [g if isinstance(g, (GroupParams, list)) else GroupParams(*g) for g in groups]
    # a group may be a list of GroupParams (mixed angular law components)
    per_freq = {}
    notes = []
    needs_check = False
    inputs = []
    for idx, g in enumerate(groups):
        comps = g if isinstance(g, list) else [g]
        best = {}
        for comp in comps:
            n = effective_multiplicity(comp.m, regime)
            inputs.append({"group": idx, "d": comp.d, "beta": comp.beta, "theta0": comp.theta0,
                           "m": comp.m, "n": n, "kind": comp.kind, "weight": comp.weight})
            for freq, e, lower in _group_terms(comp, n, flavor):
                freq = _canonical(freq, flavor)
                if e > best.get(freq, (-math.inf, 0.0))[0]:
                    best[freq] = (e, comp.d)
                if comp.beta < 1 and comp.d <= lower:
                    needs_check = True
                    msg = (f"group {idx}: d={comp.d:g} <= {lower:g}; the mixture is infinite on the "
                           "support of the angular law, the closed-form verdict needs a numeric check")
                    if msg not in notes:
                        notes.append(msg)
        for freq, (e, d) in best.items():
            slot = per_freq.setdefault(freq, [0.0, [], []])
            slot[0] += max(e, 0.0)
            slot[1].append(idx)
            slot[2].append((e, d))
    sings = []
    for freq in sorted(per_freq):
        total, idxs, _ = per_freq[freq]
        alpha = _clean(factor * total)
        if alpha > 0:
            sings.append(Singularity(freq, alpha, idxs))
    worst = max(sings, key=lambda s: s.alpha) if sings else None
    exists = all(s.alpha < 1.0 for s in sings)
    if worst is None:
        cond = "no singular frequency: mixture is bounded"
    elif exists:
        cond = f"every alpha < 1 (largest alpha={_short(worst.alpha)} at {_short(worst.frequency)})"
    else:
        cond = f"alpha={_short(worst.alpha)} >= 1 at frequency {_short(worst.frequency)}"
        terms = per_freq[worst.frequency][2]
        if len(terms) == 1:
            # the exponent is linear in d, so the existence frontier is a bound on d
            e, d = terms[0]
            cond += f"; group {worst.groups[0]} needs d > {_short(_clean(d + e - 1.0 / factor))}"
    lm = exists and any(s.alpha > 0 for s in sings)
    if regime == REGIME_WEAK:
        notes.append("weak interaction: |H|^2 does not produce long memory; verdict follows F")
    if regime == REGIME_STRONG:
        notes.append("strong interaction: verdict follows |H|^2 as for a common innovation")
    return LMReport(exists, cond, lm, sings, regime, inputs, flavor, "closed-form", notes, needs_check)


def _clean(x: float) -> float:
    r = round(x, 12)
    return r if abs(r - x) < 1e-12 else x


# ---------------------------------------------------------------------------
# named entry points


def classify_ar1(d: float, theta0: float = 0.0, regime: str = REGIME_INDEPENDENT) -> LMReport:
    """AR(1) with a real random pole at angle 0 or pi."""
    if abs(theta0) > EDGE_TOL and abs(abs(theta0) - math.pi) > EDGE_TOL:
        raise InvalidLaw("AR(1) poles sit at 0 or pi")
    return classify_groups([GroupParams(d, 1.0, theta0, 1, REAL)], regime)


@dataclass
class RealPoles:
    d1: float
    d2: float
    theta1: float = 0.0
    theta2: float = 0.0


@dataclass
class ComplexPair:
    d: float
    beta: float
    theta0: float


def classify_ar2(case, regime: str = REGIME_INDEPENDENT) -> LMReport:
    if isinstance(case, RealPoles):
        groups = [GroupParams(case.d1, 1.0, case.theta1, 1, REAL),
                  GroupParams(case.d2, 1.0, case.theta2, 1, REAL)]
    elif isinstance(case, ComplexPair):
        groups = [GroupParams(case.d, case.beta, case.theta0, 1, COMPLEX)]
    else:
        raise InvalidLaw("case must be RealPoles or ComplexPair")
    return classify_groups(groups, regime)


def classify_arp(groups, regime: str = REGIME_INDEPENDENT) -> LMReport:
    """``groups``: GroupParams or tuples ``(d, beta, theta0, m[, kind])``."""
    return classify_groups([g if isinstance(g, GroupParams) else GroupParams(*g) for g in groups],
                           regime, DISCRETE)


def classify_oup(groups, regime: str = REGIME_INDEPENDENT) -> LMReport:
    """OU(p) panels; ``theta0`` plays the role of ``tau0``.

    With every angle fixed the verdict is closed-form. Otherwise the long-memory
    verdict is closed-form but existence is left to the numeric integral.
    """
    gs = [g if isinstance(g, GroupParams) else GroupParams(*g) for g in groups]
    for g in gs:
        if g.kind is None or (g.kind == REAL and abs(g.theta0) > EDGE_TOL):
            g.kind = COMPLEX
    report = classify_groups(gs, regime, CONTINUOUS)
    if all(g.beta == 1.0 for g in gs):
        n = [effective_multiplicity(g.m, regime) for g in gs]
        real = [(g, k) for g, k in zip(gs, n) if abs(g.theta0) <= EDGE_TOL]
        cplx = [(g, k) for g, k in zip(gs, n) if abs(g.theta0) > EDGE_TOL]
        strict = (all(-1 < g.d < k - 1 for g, k in real)
                  and all(k - 2 < g.d < k - 1 for g, k in cplx)
                  and sum(k - g.d for g, k in real) < len(real) + 1)
        report.notes.append(
            "fixed angles: every group singular with alpha in (0, 1) and summed alpha at 0 below 1: "
            + str(strict).lower())
    else:
        report.exists_source = "numeric"
        report.needs_numeric_check = True
        report.notes.append("random angles: existence has no closed form; use the numeric integral")
    return report


def group_params(model: ModelSpec):
    """Exponent summaries of a model's groups (mixed angular laws give lists)."""
    out = []
    for g in model.groups:
        comps = []
        d = g.radial.d if not g.radial.is_atom else 0.0
        for w, law in g.angular.components():
            comps.append(GroupParams(d, law.beta, law.theta0, g.multiplicity, g.kind, w,
                                     g.radial.is_atom))
            if g.kind == COMPLEX:
                for e in law.edge_contacts(EDGE_TOL):
                    comps.append(GroupParams(d, 0.0, e, g.multiplicity, COMPLEX, w, g.radial.is_atom))
        out.append(comps if len(comps) > 1 else comps[0])
    return out


def classify_model(model: ModelSpec, regime: str | None = None) -> LMReport:
    regime = regime or model.innovation.regime()
    params = group_params(model)
    if model.flavor == CONTINUOUS:
        if all(not isinstance(g, list) for g in params):
            return classify_oup(params, regime)
        flat = [p for g in params for p in (g if isinstance(g, list) else [g])]
        report = classify_groups(params, regime, CONTINUOUS)
        if any(p.beta < 1 for p in flat):
            report.exists_source = "numeric"
            report.needs_numeric_check = True
        return report
    return classify_groups(params, regime, DISCRETE)


# ---------------------------------------------------------------------------
# phase diagrams


@dataclass
class PhasePoint:
    d: float
    beta: float
    region: int
    alpha: float | None


def phase_region(d: float, beta: float, theta0: float, regime: str = REGIME_INDEPENDENT) -> PhasePoint:
    if d <= -1.0:
        # the radial law is not normalizable, so there is no aggregate at all
        return PhasePoint(d, beta, REGION_NONE, None)
    rep = classify_ar2(ComplexPair(d, beta, theta0), regime)
    if not rep.exists:
        return PhasePoint(d, beta, REGION_NONE, None)
    if not rep.long_memory:
        return PhasePoint(d, beta, REGION_EXISTS, None)
    return PhasePoint(d, beta, REGION_LM, max(s.alpha for s in rep.singularities))


def phase_diagram(d_values, beta_values, theta0: float = math.pi / 4,
                  regime: str = REGIME_INDEPENDENT) -> list:
    return [phase_region(float(d), float(b), theta0, regime)
            for b in beta_values for d in d_values]


def phase_grid(lo_d=-1.0, hi_d=2.0, lo_b=-1.0, hi_b=1.0, n=41):
    return np.linspace(lo_d, hi_d, n), np.linspace(lo_b, hi_b, n)


def report_from_dict(doc: dict) -> LMReport:
    sings = [Singularity(s["frequency"], s["alpha"], s["groups"]) for s in doc["singularities"]]
    return LMReport(doc["exists"], doc["exists_condition"], doc["long_memory"], sings,
                    doc["regime"], doc["regime_inputs"], doc.get("flavor", DISCRETE),
                    doc.get("exists_source", "closed-form"), doc.get("notes", []),
                    doc.get("needs_numeric_check", False))


__all__ = ["LMReport", "Singularity", "GroupParams", "InnovationRegime", "RealPoles", "ComplexPair",
           "classify_ar1", "classify_ar2", "classify_arp", "classify_oup", "classify_groups",
           "classify_model", "phase_diagram", "phase_region", "phase_grid", "PhasePoint",
           "REGION_NONE", "REGION_EXISTS", "REGION_LM"]
