"""Named shape-function presets for the regular parts phi and psi of the laws.

Configs refer to shapes by name plus parameters, never by code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidLaw

KINDS = ("constant", "indicator", "exp_decay", "polynomial", "power_tail")


@dataclass(frozen=True)
class Shape:
    kind: str = "constant"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidLaw(f"unknown shape kind {self.kind!r}; expected one of {KINDS}")
        p = self.params
        if self.kind == "indicator":
            if not (float(p["a"]) < float(p["b"])):
                raise InvalidLaw("indicator shape needs a < b")
        if self.kind == "exp_decay" and float(p.get("rate", 1.0)) <= 0:
            raise InvalidLaw("exp_decay rate must be positive")
        if self.kind == "power_tail" and float(p.get("exponent", 1.0)) <= 0:
            raise InvalidLaw("power_tail exponent must be positive")

    # scalar path: called from inside quadrature loops, so plain math
    def value(self, x: float) -> float:
        p = self.params
        k = self.kind
        if k == "constant":
            return float(p.get("value", 1.0))
        if k == "indicator":
            return 1.0 if p["a"] < x < p["b"] else 0.0
        if k == "exp_decay":
            return math.exp(-float(p.get("rate", 1.0)) * x)
        if k == "polynomial":
            acc = 0.0
            for c in reversed(p["coeffs"]):
                acc = acc * x + c
            return acc
        # power_tail: flat core, |x/scale|^-exponent beyond the scale
        scale = float(p.get("scale", 1.0))
        ax = abs(x - float(p.get("center", 0.0))) / scale
        return 1.0 if ax <= 1.0 else ax ** (-float(p.get("exponent", 1.0)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        k = self.kind
        if k == "constant":
            out = np.full_like(x, float(p.get("value", 1.0)))
        elif k == "indicator":
            out = ((x > p["a"]) & (x < p["b"])).astype(float)
        elif k == "exp_decay":
            out = np.exp(-float(p.get("rate", 1.0)) * x)
        elif k == "polynomial":
            out = np.polyval(list(reversed(p["coeffs"])), x)
        else:
            ax = np.abs(x - float(p.get("center", 0.0))) / float(p.get("scale", 1.0))
            with np.errstate(divide="ignore"):
                out = np.where(ax <= 1.0, 1.0, ax ** (-float(p.get("exponent", 1.0))))
        return out if out.ndim else float(out)

    def kinks(self):
        """Points where the shape is not smooth."""
        p = self.params
        if self.kind == "indicator":
            return [float(p["a"]), float(p["b"])]
        if self.kind == "power_tail":
            c, sc = float(p.get("center", 0.0)), float(p.get("scale", 1.0))
            return [c - sc, c + sc]
        return []

    def support(self):
        """Bounded support (lo, hi) imposed by the shape, or None."""
        if self.kind == "indicator":
            return float(self.params["a"]), float(self.params["b"])
        return None

    def decays(self) -> bool:
        return self.kind in ("exp_decay", "power_tail")

    def to_dict(self) -> dict:
        return {"kind": self.kind, **{k: v for k, v in self.params.items()}}

    @classmethod
    def from_dict(cls, d) -> "Shape":
        if d is None:
            return cls()
        if isinstance(d, str):
            return cls(d)
        d = dict(d)
        kind = d.pop("kind", "constant")
        if kind == "polynomial":
            d["coeffs"] = [float(c) for c in d["coeffs"]]
        else:
            d = {k: float(v) for k, v in d.items()}
        return cls(kind, d)


CONSTANT = Shape()


def indicator(a: float, b: float) -> Shape:
    return Shape("indicator", {"a": float(a), "b": float(b)})


def exp_decay(rate: float = 1.0) -> Shape:
    return Shape("exp_decay", {"rate": float(rate)})


def polynomial(*coeffs: float) -> Shape:
    return Shape("polynomial", {"coeffs": [float(c) for c in coeffs]})


def power_tail(exponent: float, scale: float = 1.0, center: float = 0.0) -> Shape:
    return Shape("power_tail", {"exponent": float(exponent), "scale": float(scale),
                                "center": float(center)})
