"""End-to-end acceptance checks, one test per criterion.

Each test records a ``C<k> PASS|FAIL`` line that is printed in the terminal
summary, then asserts the criterion at its stated tolerance.
"""

import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES
from scipy import integrate

from lmagg.asymptotics import disappearance_sweep, fit_singularity, lemma1_check, lemma2_check
from lmagg.classify import (REGION_EXISTS, REGION_LM, REGION_NONE, ComplexPair, GroupParams,
                            RealPoles, classify_ar1, classify_ar2, classify_arp)
from lmagg.config import ExperimentConfig
from lmagg.model import (COMMON, INDEPENDENT, REGIME_COMMON, REGIME_INDEPENDENT, InnovationScheme,
                         ar1_model, complex_pair_model)
from lmagg.panel import aggregate
from lmagg.periodogram import periodogram, shape_l1, smoothed_l1
from lmagg.poles import (COMPLEX, REAL, PoleSample, expand_polynomial, ma_coefficients)
from lmagg.shapes import indicator
from lmagg.spectral import F, H2, existence_integral, pointwise_g, pointwise_h, spectrum_values

pytestmark = pytest.mark.acceptance


def record(k, ok, detail):
    line = f"C{k} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def spread(values):
    return f"[{min(values):.4g}, {max(values):.4g}]"


class TestAcceptance:
    def test_c1_existence_frontier(self):
        t0 = time.perf_counter()
        mismatches = []
        for d in (-0.4, -0.25, -0.05, 0.05, 0.5, 0.95, 1.5):
            model = ar1_model(d)
            f = existence_integral(model, F, cross_check=False).converges
            h = existence_integral(model, H2, cross_check=False).converges
            if f != (d > 0) or h != (d > -0.5):
                mismatches.append((d, f, h))
        elapsed = time.perf_counter() - t0
        ok = not mismatches and elapsed < 60
        record(1, ok, f"existence verdicts, mismatches={mismatches} runtime={elapsed:.1f}s (limit 60s)")
        assert ok

    def test_c2_alpha_slopes(self):
        errors = []
        for d in (0.2, 0.5, 0.8):
            m = ar1_model(d)
            fit = fit_singularity(lambda lam: spectrum_values(m, lam, F), 0.0, sides=(1.0,))
            errors.append(abs(fit.fitted_exponent - (1 - d)))
        for d in (-0.4, -0.2):
            m = ar1_model(d)
            fit = fit_singularity(lambda lam: spectrum_values(m, lam, H2), 0.0, sides=(1.0,))
            errors.append(abs(fit.fitted_exponent - (-2 * d)))
        ok = max(errors) <= 0.02
        record(2, ok, f"max slope error {max(errors):.2e} over 5 fits (tolerance 0.02)")
        assert ok

    def test_c3_fixed_angle_constants(self):
        rng = np.random.default_rng(20240611)
        ratios = []
        for _ in range(10):
            n = int(rng.integers(1, 5))
            d = float(rng.uniform(-0.9, n - 1.1))
            oracle = integrate.quad(lambda u: u ** d * (1 + u * u) ** (-n / 2), 0, np.inf,
                                    epsabs=0, epsrel=1e-10, limit=400)[0]
            fit = lemma1_check(d, n)
            ratios.append(fit.fitted_constant / oracle)
        for t0 in (math.pi / 4, math.pi / 2, 3 * math.pi / 4):
            base = lemma1_check(0.3, 2).fitted_constant
            fit = lemma1_check(0.3, 2, case=3, theta0=t0)
            ratios.append(fit.fitted_constant / (base * (2 * math.sin(t0)) ** -2))
        worst = max(abs(r - 1) for r in ratios)
        ok = worst <= 0.05
        record(3, ok, f"max |constant ratio - 1| {worst:.2e} over 13 checks (tolerance 5%)")
        assert ok

    def test_c4_diffuse_angle_exponents(self):
        rng = np.random.default_rng(7)
        errors = []
        for k in range(10):
            n = int(rng.integers(1, 4))
            alpha = float(rng.uniform(0.1, 0.9))
            if k % 2 == 0:
                lo, hi = n - 1, 2 * n - 2 + alpha
                case, theta0 = 1, None
            else:
                lo, hi = max(n - 2, -1), n - 2 + alpha
                case, theta0 = 3, float(rng.uniform(0.5, 2.6))
            margin = 0.1 * (hi - lo)
            d = float(rng.uniform(lo + margin, hi - margin))
            fit = lemma2_check(d, n, alpha, case, theta0=theta0)
            errors.append(abs(fit.fitted_exponent - fit.predicted_exponent))
        ok = max(errors) <= 0.03
        record(4, ok, f"max exponent error {max(errors):.2e} over 10 triples (tolerance 0.03)")
        assert ok

    def test_c5_phase_diagrams(self):
        t0 = time.perf_counter()
        beta = np.linspace(-1, 1, 41)
        figures = [
            # (theta0, d range, existence frontier offset, LM frontier offset, fit points)
            (math.pi / 4, np.linspace(-1, 2, 41), -1.0, 0.0,
             [(0.1, 0.5), (0.3, 0.9), (0.2, 0.4), (0.5, 0.8), (0.05, 0.3), (0.4, 0.6)]),
            (0.0, np.linspace(-1, 4, 41), 1.0, 2.0,
             [(1.5, 0.0), (2.0, 0.5), (1.7, 0.5), (1.1, -0.5), (2.4, 0.9), (1.3, -0.2)]),
        ]
        # fit points sit where the asymptotic expansions apply (d > 0 off the edges, d > 1 at 0)
        wrong, slope_err = 0, []
        for theta0, d, exist_at, lm_at, points in figures:
            rows = disappearance_sweep(d, beta, theta0, points)
            for r in rows[:d.size * beta.size]:
                dd, bb = round(r.d, 9), round(r.beta, 9)
                if dd <= -1 or dd <= round(bb + exist_at, 9):
                    expected = REGION_NONE
                elif dd < round(bb + lm_at, 9):
                    expected = REGION_LM
                else:
                    expected = REGION_EXISTS
                wrong += r.region != expected
            for r in rows:
                if r.fitted is not None:
                    slope_err.append(abs(r.fitted - r.alpha))
        elapsed = time.perf_counter() - t0
        ok = wrong == 0 and len(slope_err) == 12 and max(slope_err) <= 0.05 and elapsed < 600
        record(5, ok, f"region mismatches={wrong} of {2 * 41 * 41}; max slope error "
                      f"{max(slope_err):.2e} at {len(slope_err)} points (tolerance 0.05); "
                      f"runtime={elapsed:.0f}s (limit 600s)")
        assert ok

    def test_c6_aggregation_convergence(self):
        distances, longest = {}, 0.0
        for kind, which in ((INDEPENDENT, F), (COMMON, H2)):
            model = ar1_model(0.5, innovation=InnovationScheme(kind))
            values = []
            for seed in range(5):
                t0 = time.perf_counter()
                run = aggregate(model, 2000, 2 ** 16, seed)
                pg = periodogram(run.aggregate)
                ref = spectrum_values(model, pg.grid, which) / (2 * math.pi)
                values.append(smoothed_l1(pg, ref, (0.05, 3.0)))
                longest = max(longest, time.perf_counter() - t0)
            distances[kind] = float(np.median(values))
        ok = max(distances.values()) <= 0.15 and longest < 300
        record(6, ok, f"median smoothed L1 independent={distances[INDEPENDENT]:.3f} "
                      f"common={distances[COMMON]:.3f} (limit 0.15); slowest run {longest:.0f}s")
        assert ok

    def test_c7_interactive_convex_combination(self):
        support = (0.1, math.pi - 0.1)
        psi = indicator(support[0] - 1.0, support[1] + 1.0)
        grid = np.linspace(0.01, 3.14, 300)
        base = complex_pair_model(0.3, -0.5, math.pi / 2, psi=psi, support=support)
        curve_f = spectrum_values(base, grid, F)
        curve_h = spectrum_values(base, grid, H2)
        ratios = {}
        for chi, params, band in (("geometric", {"rate": 0.5}, (0.1, 3.0)),
                                  ("power", {"gamma": 0.5}, (0.05, 0.5))):
            model = complex_pair_model(0.3, -0.5, math.pi / 2, psi=psi, support=support,
                                       innovation=InnovationScheme("interactive", chi, params))
            values = []
            for seed in range(10):
                run = aggregate(model, 1000, 2 ** 14, seed)
                pg = periodogram(run.aggregate, span=128)
                to_f = shape_l1(pg, np.interp(pg.grid, grid, curve_f), band)
                to_h = shape_l1(pg, np.interp(pg.grid, grid, curve_h), band)
                values.append(to_f / to_h if chi == "geometric" else to_h / to_f)
            ratios[chi] = float(np.median(values))
        ok = max(ratios.values()) <= 0.5
        record(7, ok, f"median distance ratio matching/other: weak={ratios['geometric']:.2f} "
                      f"strong={ratios['power']:.2f} (limit 0.5)")
        assert ok

    def test_c8_ou_corollary(self):
        model = ExperimentConfig.from_dict({"preset": "ou-corollary1"}, "classify").build_model()
        from lmagg.classify import classify_model
        report = classify_model(model, REGIME_INDEPENDENT)
        alphas = {round(k, 9): v for k, v in report.alphas().items() if v > 0}
        verdict = (report.exists and report.long_memory and set(alphas) == {0.0, 3.0, -3.0}
                   and all(abs(a - 0.5) < 1e-12 for a in alphas.values()))
        errors = []
        for target in (0.0, 3.0):
            fit = fit_singularity(lambda lam: spectrum_values(model, lam, F), target)
            errors.append(abs(fit.fitted_exponent - 0.5))
        ok = verdict and max(errors) <= 0.03
        record(8, ok, f"classifier {report.summary_line()}; slope errors at 0 and 3: "
                      f"{errors[0]:.2e}, {errors[1]:.2e} (tolerance 0.03)")
        assert ok

    def test_c9_property_grids(self):
        failures = []
        radii = np.linspace(0.1, 0.95, 6)
        angles = np.linspace(0.2, 2.9, 6)
        lam = np.linspace(-math.pi, math.pi, 41)
        for rho in radii:
            for theta in angles:
                sample = PoleSample([(REAL, 1, rho, 0.0), (COMPLEX, 1, rho, theta),
                                     (REAL, 1, 0.5 * rho, math.pi)])
                coeffs = expand_polynomial(sample)
                poly = np.concatenate([[1.0], coeffs.a])
                roots = np.sort_complex(1 / np.roots(poly[::-1]))
                expected = np.sort_complex(np.array([rho, rho * np.exp(1j * theta),
                                                     rho * np.exp(-1j * theta), -0.5 * rho]))
                if not np.allclose(1 / roots, 1 / expected, rtol=1e-8):
                    failures.append(("round trip", rho, theta))
                psi = ma_coefficients(coeffs, 200)
                conv = np.convolve(poly, psi)[:200]
                if np.max(np.abs(conv - np.eye(1, 200).ravel())) > 1e-10:
                    failures.append(("ma convolution", rho, theta))
                if not np.allclose(np.abs(pointwise_h(sample, lam)) ** 2, pointwise_g(sample, lam),
                                   rtol=1e-10):
                    failures.append(("|h|^2 = g", rho, theta))
        freqs = np.linspace(0.05, 3.0, 20)
        for d in (0.2, 0.6):
            for beta in (-0.5, 0.3):
                m = complex_pair_model(d, beta, math.pi / 3)
                f_pos, f_neg = spectrum_values(m, freqs, F), spectrum_values(m, -freqs, F)
                if not np.allclose(f_pos, f_neg, rtol=1e-9):
                    failures.append(("symmetry", d, beta))
                if np.any(spectrum_values(m, freqs, H2) > f_pos * (1 + 1e-9)):
                    failures.append(("jensen", d, beta))
        for d in np.linspace(-0.95, 1.95, 10):
            for beta in np.linspace(-0.9, 1.0, 10):
                for regime in (REGIME_INDEPENDENT, REGIME_COMMON):
                    if beta == 1.0:
                        a = classify_ar1(d, 0.0, regime)
                        b = classify_arp([GroupParams(d, 1.0, 0.0, 1, REAL)], regime)
                    else:
                        a = classify_ar2(ComplexPair(d, beta, 1.0), regime)
                        b = classify_arp([(d, beta, 1.0, 1)], regime)
                    if (a.exists, a.long_memory, a.alphas()) != (b.exists, b.long_memory, b.alphas()):
                        failures.append(("reduction", d, beta, regime))
                r2 = classify_ar2(RealPoles(d, 0.5), REGIME_INDEPENDENT)
                rp = classify_arp([(d, 1.0, 0.0, 1, REAL), (0.5, 1.0, 0.0, 1, REAL)])
                if r2.alphas() != rp.alphas():
                    failures.append(("reduction real", d))
        ok = not failures
        record(9, ok, f"property grid failures={failures[:3]}{'...' if len(failures) > 3 else ''}")
        assert ok
