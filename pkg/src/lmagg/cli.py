"""Command-line front end: ``lmagg <verb> --config file.yaml --out dir``.

Every run writes its task outputs, a copy of the normalized config, a plain
text ``summary.txt`` and ``manifest.json`` listing each file with its SHA-256.
Failures write ``error.json`` and exit nonzero:

* 2: invalid config
* 3: refused because the aggregate does not exist (override with ``--force``)
* 4: the task failed inside a compute module
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time

import numpy as np
import yaml

from . import __version__
from .asymptotics import disappearance_sweep, lemma1_check, lemma2_check
from .classify import classify_model
from .config import TASKS, ExperimentConfig
from .errors import ConfigInvalid, ExistenceRefused, LMAggError, TaskFailed
from .periodogram import periodogram
from .spectral import default_grid, fmt, mixture_F, mixture_H

OUT_ENV = "LMAGG_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_REFUSED, EXIT_FAILED = 0, 2, 3, 4


def default_out(task: str) -> str:
    return os.path.join(os.environ.get(OUT_ENV, "lmagg-out"), task)


class _Writer:
    """Collects output files (serially) for the manifest."""

    def __init__(self, out: str):
        self.out = out
        self.files = []
        os.makedirs(out, exist_ok=True)

    def path(self, name: str) -> str:
        p = os.path.join(self.out, name)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        self.files.append(name)
        return p

    def text(self, name: str, text: str):
        with open(self.path(name), "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")

    def table(self, name: str, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    def adopt(self, paths):
        for p in paths:
            self.files.append(os.path.relpath(p, self.out))

    def manifest(self, config: ExperimentConfig, timings: dict, status: str):
        entries = []
        for name in sorted(set(self.files)):
            with open(os.path.join(self.out, name), "rb") as fh:
                data = fh.read()
            entries.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        doc = {"tool": "lmagg", "version": __version__, "task": config.task, "status": status,
               "config": config.to_dict(), "timings": timings, "files": entries}
        with open(os.path.join(self.out, "manifest.json"), "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)


def _fmt_cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt(v)


# ---------------------------------------------------------------------------
# tasks


def _task_classify(cfg, w, force, jobs):
    model = cfg.build_model()
    report = classify_model(model, cfg.options["regime"])
    w.text("report.json", report.to_json())
    w.text("report.txt", report.table())
    return report.summary_line()


def _require_existence(model, force):
    report = classify_model(model)
    if not report.exists and not force:
        raise ExistenceRefused(f"aggregate does not exist under the {report.regime} regime: "
                               f"{report.exists_condition}")
    return report


def _task_spectra(cfg, w, force, jobs):
    model = cfg.build_model()
    report = _require_existence(model, force)
    opt = cfg.options
    grid = np.asarray(opt["grid"], float) if opt["grid"] is not None else default_grid(model, opt["nodes"])
    method = opt["method"]
    rng = np.random.default_rng(cfg.seed if cfg.seed is not None else 0)
    kw = dict(method=method, n=int(opt["samples"]), rng=rng, refine=cfg.tolerances["refine"])
    curves = {}
    if "F" in opt["which"]:
        curves["F"] = mixture_F(model, grid, **kw)
    if "H" in opt["which"] or "H2" in opt["which"]:
        h = mixture_H(model, grid, **kw)
        if "H" in opt["which"]:
            curves["H"] = h
        if "H2" in opt["which"]:
            curves["H2"] = h.abs2()
    for name, c in curves.items():
        c.to_csv(w.path(f"{name}.csv"))
    if cfg.svg:
        from .svg import line_plot
        series = [(c.grid, np.abs(c.values) if name != "H" else np.abs(c.values) ** 2,
                   name if name != "H" else "|H|^2") for name, c in curves.items()]
        line_plot(series, w.path("spectra.svg"), title="mixture spectra")
    return f"curves={','.join(curves)} nodes={grid.size} {report.summary_line()}"


def _task_simulate(cfg, w, force, jobs):
    from .panel import aggregate
    model = cfg.build_model()
    opt = cfg.options
    run = aggregate(model, opt["N"], opt["T"], cfg.seed, step=opt["step"], force=force,
                    keep_members=opt["keep_members"], jobs=jobs, normalization=opt["normalization"])
    w.adopt(run.save(os.path.join(w.out, "panel"), cfg.model, opt["keep_members"]))
    summary = (f"N={run.N} T={run.T} seed={run.seed} B_N={fmt(run.normalization)} "
               f"var={fmt(np.var(run.aggregate))}")
    if run.T >= 256:
        pg = periodogram(run.aggregate, span=opt["span"], step=opt["step"])
        pg.to_csv(w.path("periodogram.csv"))
        if cfg.svg:
            from .svg import line_plot
            line_plot([(pg.grid, pg.values, "periodogram")], w.path("periodogram.svg"),
                      title="smoothed periodogram")
    return summary


def _task_asymptotic_check(cfg, w, force, jobs):
    opt = cfg.options
    if opt["angle"] == "fixed":
        fit = lemma1_check(opt["d"], opt["n"], opt["case"], theta0=opt["theta0"], flavor=opt["flavor"])
    else:
        fit = lemma2_check(opt["d"], opt["n"], opt["alpha"], opt["case"], theta0=opt["theta0"],
                           flavor=opt["flavor"])
    w.text("fit.json", fit.to_json())
    trace = fit.constant_trace + [None]
    w.table("fit.csv", ["offset", "value", "constant_estimate"],
            [[fmt(o), fmt(v), _fmt_cell(c)] for (o, v), c in zip(fit.rows(), trace)])
    return (f"exponent fitted={fmt(fit.fitted_exponent)} predicted={fmt(fit.predicted_exponent)} "
            f"constant_ratio={_fmt_cell(fit.constant_ratio)} power_law={str(fit.power_law).lower()}")


def _task_phase(cfg, w, force, jobs):
    opt = cfg.options
    d = np.linspace(opt["d"][0], opt["d"][1], int(opt["d"][2]))
    b = np.linspace(opt["beta"][0], opt["beta"][1], int(opt["beta"][2]))
    rows = disappearance_sweep(d, b, opt["theta0"], [tuple(p) for p in opt["fit_points"]], opt["regime"])
    w.table("phase.csv", ["d", "beta", "region", "alpha", "fitted_alpha"],
            [[fmt(r.d), fmt(r.beta), r.region, _fmt_cell(r.alpha), _fmt_cell(r.fitted)] for r in rows])
    if cfg.svg:
        from .svg import heatmap
        grid = [[r.region for r in rows[j * d.size:(j + 1) * d.size]] for j in range(b.size)]
        heatmap(d, b, grid, w.path("phase.svg"), title="long-memory regions")
    counts = [sum(r.region == k for r in rows[:d.size * b.size]) for k in range(3)]
    fitted = sum(r.fitted is not None for r in rows)
    return f"none={counts[0]} exists={counts[1]} lm={counts[2]} fitted={fitted}"


HANDLERS = {"classify": _task_classify, "spectra": _task_spectra, "simulate": _task_simulate,
            "lemma-check": _task_asymptotic_check, "phase-diagram": _task_phase}


def run(config: ExperimentConfig, out: str | None = None, *, force: bool = False, jobs: int = 1) -> int:
    """Execute one experiment; returns the process exit status."""
    out = out or config.output or default_out(config.task)
    w = _Writer(out)
    w.text("config.yaml", config.dump())
    t0 = time.perf_counter()
    status, code = "ok", EXIT_OK
    try:
        summary = HANDLERS[config.task](config, w, force, jobs)
    except ExistenceRefused as exc:
        status, code = "refused", EXIT_REFUSED
        summary = f"refused: {exc}"
        _error(w, exc)
    except LMAggError as exc:
        wrapped = exc if isinstance(exc, TaskFailed) else TaskFailed(f"{type(exc).__name__}: {exc}")
        status, code = "failed", EXIT_FAILED
        summary = f"failed: {wrapped}"
        _error(w, wrapped, cause=exc)
    w.text("summary.txt", summary)
    w.manifest(config, {"task_seconds": round(time.perf_counter() - t0, 3)}, status)
    print(summary)
    return code


def _error(w, exc, cause=None):
    doc = {"error": type(exc).__name__, "message": str(exc)}
    if cause is not None:
        doc["cause"] = type(cause).__name__
    if isinstance(exc, ConfigInvalid):
        doc["path"] = exc.path
    w.text("error.json", json.dumps(doc, indent=1, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lmagg", description="Long memory of aggregated random-coefficient processes")
    p.add_argument("--version", action="version", version=f"lmagg {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb in TASKS:
        s = sub.add_parser(verb)
        src = s.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="YAML experiment file")
        src.add_argument("--preset", help="named preset (used without a config file)")
        s.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<verb> or ./lmagg-out/<verb>)")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--force", action="store_true", help="run even when the aggregate does not exist")
        s.add_argument("--jobs", type=int, default=1, help="worker processes for panel simulation")
        s.add_argument("--svg", action="store_true", help="also render SVG plots")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            with open(args.config) as fh:
                doc = yaml.safe_load(fh) or {}
        else:
            doc = {"preset": args.preset}
        if not isinstance(doc, dict):
            raise ConfigInvalid("config must be a mapping", "")
        if args.seed is not None:
            doc["seed"] = args.seed
        if args.svg:
            doc["svg"] = True
        config = ExperimentConfig.from_dict(doc, args.verb)
    except ConfigInvalid as exc:
        out = args.out or default_out(args.verb)
        os.makedirs(out, exist_ok=True)
        doc = {"error": "ConfigInvalid", "message": exc.message, "path": exc.path}
        with open(os.path.join(out, "error.json"), "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
        print(f"invalid config at {exc.path or '<root>'}: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, yaml.YAMLError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config, args.out, force=args.force, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
