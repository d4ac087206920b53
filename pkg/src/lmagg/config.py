"""Experiment configuration: YAML schema, named presets and model (de)serialization.

A config names a task, an optional preset, a model description and task
options. Parsing normalizes everything to explicit values, so
``parse(dump(parse(text))) == parse(text)``.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import yaml

from .errors import ConfigInvalid, LMAggError
from .laws import CONTINUOUS, DISCRETE, AngularLaw, RadialLaw, mixed_angular_law
from .model import CHI_PRESETS, COMMON, INDEPENDENT, INTERACTIVE, REGIMES, InnovationScheme, ModelSpec
from .poles import COMPLEX, REAL, PoleGroupSpec
from .shapes import Shape

SCHEMA_VERSION = 1
TASKS = ("classify", "spectra", "simulate", "lemma-check", "phase-diagram")
MODEL_TASKS = ("classify", "spectra", "simulate")

OPTION_DEFAULTS = {
    "classify": {"regime": None},
    "spectra": {"which": ["F", "H"], "nodes": 4096, "method": "quadrature", "samples": 100000,
                "grid": None},
    "simulate": {"N": 200, "T": 4096, "step": None, "keep_members": False, "normalization": None,
                 "span": 64},
    "lemma-check": {"angle": "fixed", "d": 0.5, "n": 2, "case": 1, "alpha": None, "theta0": None,
                    "flavor": DISCRETE},
    "phase-diagram": {"d": [-1.0, 2.0, 41], "beta": [-1.0, 1.0, 41], "theta0": math.pi / 4,
                      "regime": INDEPENDENT, "fit_points": []},
}
TOLERANCE_DEFAULTS = {"refine": 1}


# ---------------------------------------------------------------------------
# model <-> dict


def _shape(doc, path):
    try:
        return Shape.from_dict(doc)
    except (KeyError, TypeError, ValueError, LMAggError) as exc:
        raise ConfigInvalid(f"bad shape: {exc}", path) from None


def _number(doc, key, path, default=None, kind=float):
    if key not in doc:
        if default is None:
            raise ConfigInvalid(f"missing field {key!r}", path)
        return default
    try:
        return kind(doc[key])
    except (TypeError, ValueError):
        raise ConfigInvalid(f"{key} must be a number", f"{path}.{key}") from None


def _radial_from(doc, flavor, path):
    if not isinstance(doc, dict):
        raise ConfigInvalid("radial law must be a mapping", path)
    try:
        if "atom" in doc:
            return RadialLaw.point(_number(doc, "atom", path), flavor)
        d = _number(doc, "d", path)
        phi = _shape(doc.get("phi"), f"{path}.phi") if "phi" in doc else None
        if flavor == CONTINUOUS:
            return RadialLaw.continuous(d, phi)
        return RadialLaw(d=d, phi=phi or Shape())
    except ConfigInvalid:
        raise
    except LMAggError as exc:
        raise ConfigInvalid(str(exc), path) from None


def _angular_from(doc, flavor, path):
    if not isinstance(doc, dict):
        raise ConfigInvalid("angular law must be a mapping", path)
    try:
        if "atoms" in doc or "diffuse" in doc:
            atoms = [(float(w), float(loc)) for w, loc in doc.get("atoms", [])]
            diffuse = [(float(w), _angular_from(law, flavor, f"{path}.diffuse[{i}]"))
                       for i, (w, law) in enumerate(doc.get("diffuse", []))]
            return mixed_angular_law(atoms, diffuse)
        support = doc.get("support")
        return AngularLaw(beta=_number(doc, "beta", path, 1.0), theta0=_number(doc, "theta0", path),
                          psi=_shape(doc.get("psi"), f"{path}.psi"), flavor=flavor,
                          support=tuple(map(float, support)) if support is not None else None)
    except ConfigInvalid:
        raise
    except (LMAggError, TypeError, ValueError) as exc:
        raise ConfigInvalid(str(exc), path) from None


def _innovation_from(doc, path):
    if doc is None:
        return InnovationScheme()
    if isinstance(doc, str):
        doc = {"kind": doc}
    kind = doc.get("kind", INDEPENDENT)
    if kind not in (INDEPENDENT, COMMON, INTERACTIVE):
        raise ConfigInvalid(f"unknown innovation kind {kind!r}", f"{path}.kind")
    chi = doc.get("chi")
    if kind == INTERACTIVE and chi not in CHI_PRESETS:
        raise ConfigInvalid(f"chi must be one of {CHI_PRESETS}", f"{path}.chi")
    norm = doc.get("normalization")
    return InnovationScheme(kind, chi, dict(doc.get("params", {})),
                            float(norm) if norm is not None else None)


def model_from_dict(doc, path="model") -> ModelSpec:
    if not isinstance(doc, dict):
        raise ConfigInvalid("model must be a mapping", path)
    flavor = doc.get("flavor", DISCRETE)
    if flavor not in (DISCRETE, CONTINUOUS):
        raise ConfigInvalid(f"unknown flavor {flavor!r}", f"{path}.flavor")
    groups_doc = doc.get("groups")
    if not isinstance(groups_doc, list) or not groups_doc:
        raise ConfigInvalid("model needs a non-empty list of groups", f"{path}.groups")
    groups = []
    for i, g in enumerate(groups_doc):
        gp = f"{path}.groups[{i}]"
        if not isinstance(g, dict):
            raise ConfigInvalid("group must be a mapping", gp)
        kind = g.get("kind", REAL)
        if kind not in (REAL, COMPLEX):
            raise ConfigInvalid(f"unknown group kind {kind!r}", f"{gp}.kind")
        radial = _radial_from(g.get("radial"), flavor, f"{gp}.radial")
        if kind == COMPLEX and "angular" not in g:
            raise ConfigInvalid("complex groups need an angular law", f"{gp}.angular")
        angular = _angular_from(g["angular"], flavor, f"{gp}.angular") if kind == COMPLEX else None
        try:
            groups.append(PoleGroupSpec(kind, radial, angular,
                                        _number(g, "multiplicity", gp, 1, int),
                                        _number(g, "sign", gp, -1, int)))
        except ConfigInvalid:
            raise
        except LMAggError as exc:
            raise ConfigInvalid(str(exc), gp) from None
    try:
        return ModelSpec(flavor, groups, _number(doc, "sigma", path, 1.0),
                         _innovation_from(doc.get("innovation"), f"{path}.innovation"))
    except ConfigInvalid:
        raise
    except LMAggError as exc:
        raise ConfigInvalid(str(exc), path) from None


def model_to_dict(model: ModelSpec) -> dict:
    groups = []
    for g in model.groups:
        doc = {"kind": g.kind, "multiplicity": g.multiplicity, "radial": g.radial.to_dict()}
        if g.kind == REAL:
            doc["sign"] = g.sign
        else:
            doc["angular"] = g.angular.to_dict()
        groups.append(doc)
    return {"flavor": model.flavor, "sigma": model.sigma, "innovation": model.innovation.to_dict(),
            "groups": groups}


# ---------------------------------------------------------------------------
# presets


def _ar1(d):
    return {"flavor": DISCRETE, "groups": [{"kind": REAL, "radial": {"d": d}}]}


PRESETS = {
    "ar1-independent": {"task": "classify", "model": _ar1(0.5)},
    "ar2-complex-pair": {"task": "classify", "model": {
        "flavor": DISCRETE,
        "groups": [{"kind": COMPLEX, "radial": {"d": 0.5},
                    "angular": {"beta": 1.0, "theta0": math.pi / 3}}]}},
    "ou-corollary1": {"task": "classify", "model": {
        "flavor": CONTINUOUS,
        "groups": [{"kind": REAL, "radial": {"d": 0.5}},
                   {"kind": COMPLEX, "radial": {"d": 0.5}, "angular": {"beta": 1.0, "theta0": 3.0}}]}},
    "ou2-two-exponent": {"task": "classify", "model": {
        "flavor": CONTINUOUS,
        "groups": [{"kind": COMPLEX, "radial": {"d": 1.7},
                    "angular": {"beta": 0.5, "theta0": 0.0,
                                "psi": {"kind": "power_tail", "exponent": 1.0}}}]}},
    "disappearance-figure1": {"task": "phase-diagram",
                              "options": {"theta0": math.pi / 4, "d": [-1.0, 2.0, 41],
                                          "beta": [-1.0, 1.0, 41]}},
    "figure2": {"task": "phase-diagram",
                "options": {"theta0": 0.0, "d": [-1.0, 4.0, 41], "beta": [-1.0, 1.0, 41]}},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


# ---------------------------------------------------------------------------
# config


@dataclass
class ExperimentConfig:
    task: str
    model: dict | None = None
    seed: int | None = None
    output: str | None = None
    options: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    preset: str | None = None
    svg: bool = False
    version: int = SCHEMA_VERSION

    def build_model(self) -> ModelSpec:
        if self.model is None:
            raise ConfigInvalid("task needs a model", "model")
        return model_from_dict(self.model)

    def to_dict(self) -> dict:
        out = {"version": self.version, "task": self.task, "seed": self.seed, "output": self.output,
               "options": copy.deepcopy(self.options), "tolerances": dict(self.tolerances),
               "svg": self.svg}
        if self.preset is not None:
            out["preset"] = self.preset
        if self.model is not None:
            out["model"] = copy.deepcopy(self.model)
        return out

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc, task: str | None = None) -> "ExperimentConfig":
        if doc is None:
            doc = {}
        if not isinstance(doc, dict):
            raise ConfigInvalid("config must be a mapping", "")
        unknown = set(doc) - {"version", "task", "seed", "output", "options", "tolerances",
                              "preset", "model", "svg"}
        if unknown:
            raise ConfigInvalid(f"unknown field(s) {sorted(unknown)}", sorted(unknown)[0])
        version = doc.get("version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigInvalid(f"unsupported schema version {version}", "version")
        explicit_task = doc.get("task")
        preset = doc.get("preset")
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigInvalid(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}",
                                    "preset")
            doc = _merge(PRESETS[preset], {k: v for k, v in doc.items() if k != "preset"})
        cfg_task = doc.get("task")
        if task is not None:
            if explicit_task is not None and explicit_task != task:
                raise ConfigInvalid(f"config task {explicit_task!r} does not match verb {task!r}",
                                    "task")
            cfg_task = task
        if cfg_task not in TASKS:
            raise ConfigInvalid(f"task must be one of {TASKS}", "task")
        seed = doc.get("seed")
        if seed is not None:
            if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
                raise ConfigInvalid("seed must be a nonnegative integer", "seed")
        if cfg_task == "simulate" and seed is None:
            raise ConfigInvalid("simulate tasks need a seed", "seed")
        options = _options(cfg_task, doc.get("options") or {})
        tolerances = dict(TOLERANCE_DEFAULTS)
        for k, v in (doc.get("tolerances") or {}).items():
            if k not in TOLERANCE_DEFAULTS:
                raise ConfigInvalid(f"unknown tolerance {k!r}", f"tolerances.{k}")
            tolerances[k] = type(TOLERANCE_DEFAULTS[k])(v)
        model = None
        if doc.get("model") is not None:
            model = model_to_dict(model_from_dict(doc["model"]))
        elif cfg_task in MODEL_TASKS:
            raise ConfigInvalid(f"{cfg_task} tasks need a model", "model")
        output = doc.get("output")
        return cls(cfg_task, model, seed, str(output) if output is not None else None, options,
                   tolerances, preset, bool(doc.get("svg", False)), SCHEMA_VERSION)

    @classmethod
    def parse(cls, text: str, task: str | None = None) -> "ExperimentConfig":
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigInvalid(f"not valid YAML: {exc}", "") from None
        return cls.from_dict(doc, task)

    @classmethod
    def load(cls, path, task: str | None = None) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.parse(fh.read(), task)


def _options(task, given):
    if not isinstance(given, dict):
        raise ConfigInvalid("options must be a mapping", "options")
    defaults = OPTION_DEFAULTS[task]
    unknown = set(given) - set(defaults)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigInvalid(f"unknown option {key!r} for task {task}", f"options.{key}")
    out = _merge(defaults, given)
    if task == "spectra":
        for w in out["which"]:
            if w not in ("F", "H", "H2"):
                raise ConfigInvalid("which entries must be F, H or H2", "options.which")
        if out["method"] not in ("quadrature", "monte-carlo"):
            raise ConfigInvalid("method must be quadrature or monte-carlo", "options.method")
    if task == "simulate":
        for key in ("N", "T"):
            if not isinstance(out[key], int) or out[key] < 1:
                raise ConfigInvalid(f"{key} must be a positive integer", f"options.{key}")
    if task == "lemma-check":
        if out["angle"] not in ("fixed", "diffuse"):
            raise ConfigInvalid("angle must be fixed or diffuse", "options.angle")
        if out["case"] not in (1, 2, 3):
            raise ConfigInvalid("case must be 1, 2 or 3", "options.case")
        if out["angle"] == "diffuse" and out["alpha"] is None:
            raise ConfigInvalid("diffuse checks need alpha", "options.alpha")
    if task == "phase-diagram":
        for key in ("d", "beta"):
            r = out[key]
            if not (isinstance(r, list) and len(r) == 3 and int(r[2]) >= 2 and r[0] < r[1]):
                raise ConfigInvalid(f"{key} must be [low, high, count]", f"options.{key}")
        if out["regime"] not in REGIMES:
            raise ConfigInvalid(f"regime must be one of {REGIMES}", "options.regime")
    if task == "classify" and out["regime"] is not None and out["regime"] not in REGIMES:
        raise ConfigInvalid(f"regime must be one of {REGIMES}", "options.regime")
    return out
