import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from lmagg.asymptotics import (AsymptoticFit, disappearance_sweep, fit_singularity, ladder,
                               lemma1_check, lemma2_check, offset_constant, pair_constant,
                               radial_constant)
from lmagg.classify import REGION_EXISTS, REGION_LM, REGION_NONE
from lmagg.errors import PreconditionViolated
from lmagg.model import ar1_model
from lmagg.spectral import F, spectrum_values


def u_integral(d, n):
    return integrate.quad(lambda u: u ** d * (1 + u * u) ** (-n / 2), 0, np.inf,
                          epsabs=0, epsrel=1e-11, limit=400)[0]


class TestFitter:
    def test_ladder_covers_five_decades(self):
        delta = ladder()
        assert delta[0] == pytest.approx(0.1) and delta[-1] == pytest.approx(1e-6)

    def test_short_ladder_rejected(self):
        with pytest.raises(PreconditionViolated):
            ladder(1, 3)

    def test_pure_power_law(self):
        fit = fit_singularity(lambda lam: 3.0 * np.abs(lam - 1.0) ** -0.4 + 2.0, 1.0,
                              predicted_exponent=0.4, predicted_constant=3.0)
        assert fit.fitted_exponent == pytest.approx(0.4, abs=1e-9)
        assert fit.constant_ratio == pytest.approx(1.0, abs=1e-9)
        assert fit.power_law

    def test_bounded_function_has_no_blow_up(self):
        fit = fit_singularity(lambda lam: 1.0 + np.abs(lam), 0.0)
        assert abs(fit.raw_slope) < 1e-5

    def test_json(self):
        fit = fit_singularity(lambda lam: np.abs(lam) ** -0.5, 0.0, predicted_exponent=0.5)
        doc = json.loads(fit.to_json())
        assert doc["predicted_exponent"] == 0.5
        assert len(fit.rows()) == len(fit.offsets)


class TestFixedAngle:
    def test_constant_oracle(self):
        # integral of u^{1/2} / (1 + u^2) over (0, inf) is pi / sqrt(2)
        assert radial_constant(0.5, 2) == pytest.approx(math.pi / math.sqrt(2), rel=1e-9)
        assert radial_constant(0.5, 2) == pytest.approx(u_integral(0.5, 2), rel=1e-8)

    def test_first_example(self):
        fit = lemma1_check(0.5, 2, 1)
        assert fit.predicted_exponent == 0.5
        assert fit.predicted_constant == pytest.approx(u_integral(0.5, 2), rel=1e-8)
        assert fit.fitted_exponent == pytest.approx(0.5, abs=0.02)
        assert fit.constant_ratio == pytest.approx(1.0, abs=0.05)
        assert fit.drift < 0.01

    def test_quarter_turn_scales_constant(self):
        base = lemma1_check(0.5, 2, 1)
        pair = lemma1_check(0.5, 2, 3, theta0=math.pi / 2)
        assert pair.predicted_constant / base.predicted_constant == pytest.approx(0.25, rel=1e-12)
        assert pair.constant_ratio == pytest.approx(1.0, abs=0.05)

    @pytest.mark.parametrize("theta0", [math.pi / 4, 3 * math.pi / 4])
    def test_pair_scaling(self, theta0):
        fit = lemma1_check(0.5, 2, 3, theta0=theta0)
        expected = u_integral(0.5, 2) * (2 * math.sin(theta0)) ** -2
        assert fit.predicted_constant == pytest.approx(expected, rel=1e-8)
        assert fit.constant_ratio == pytest.approx(1.0, abs=0.05)

    def test_frequency_pi(self):
        fit = lemma1_check(0.5, 2, 2)
        assert fit.fitted_exponent == pytest.approx(0.5, abs=0.02)
        assert fit.constant_ratio == pytest.approx(1.0, abs=0.05)

    @pytest.mark.parametrize("case,theta0", [(1, None), (3, 1.0)])
    def test_continuous_twin(self, case, theta0):
        fit = lemma1_check(0.5, 2, case, theta0=theta0, flavor="continuous")
        assert fit.fitted_exponent == pytest.approx(0.5, abs=0.02)
        assert fit.constant_ratio == pytest.approx(1.0, abs=0.05)

    @settings(max_examples=12, deadline=None)
    @given(st.integers(1, 4), st.floats(0.05, 0.95))
    def test_random_in_range(self, n, frac):
        d = -0.9 + frac * (n - 1 - 0.1 + 0.9)
        fit = lemma1_check(d, n, 1)
        assert abs(fit.exponent_error) < 0.02
        assert fit.constant_ratio == pytest.approx(1.0, abs=0.05)

    def test_local_slopes_approach_prediction(self):
        fit = lemma1_check(1.5, 3, 1)
        gaps = np.abs(np.array(fit.local_slopes) - fit.predicted_exponent)
        assert (np.diff(gaps) < 0).all()
        assert gaps[-1] < 0.02

    @pytest.mark.parametrize("d,n", [(-1.0, 2), (1.0, 2), (0.2, 1)])
    def test_precondition(self, d, n):
        with pytest.raises(PreconditionViolated):
            lemma1_check(d, n, 1)

    def test_bad_case(self):
        with pytest.raises(PreconditionViolated):
            lemma1_check(0.5, 2, 4)
        with pytest.raises(PreconditionViolated):
            lemma1_check(0.5, 2, 3, theta0=math.pi)

    def test_out_of_range_singularity_vanishes(self):
        # d above n - 1: the mixture stays bounded at 0 and the local slope tends to 0
        model = ar1_model(1.5)
        fit = fit_singularity(lambda lam: spectrum_values(model, lam, F), 0.0, sides=(1.0,))
        slopes = np.abs(fit.local_slopes)
        assert (np.diff(slopes) < 0).all()
        assert slopes[-1] < 0.01
        assert np.isfinite(spectrum_values(model, np.array([1e-9]), F)).all()


class TestDiffuseAngle:
    @pytest.mark.parametrize("case,theta0", [(1, None), (2, None)])
    def test_edge_example(self, case, theta0):
        fit = lemma2_check(1.2, 2, 0.5, case, theta0=theta0)
        assert fit.predicted_exponent == pytest.approx(1.3)
        assert fit.fitted_exponent == pytest.approx(1.3, abs=0.02)
        assert fit.constant_ratio == pytest.approx(1.0, abs=0.05)

    def test_interior_example(self):
        fit = lemma2_check(0.3, 2, 0.5, 3, theta0=math.pi / 3)
        assert fit.predicted_exponent == pytest.approx(0.2)
        assert fit.fitted_exponent == pytest.approx(0.2, abs=0.02)
        assert fit.constant_ratio == pytest.approx(1.0, abs=0.05)
        assert fit.drift < 0.01

    def test_pair_constant_closed_form(self):
        # with a flat angular law the t-integral is a Cauchy convolution: pi / (2 u (1 + u^2))
        d = 1.2
        expected = math.pi ** 2 / (4 * math.sin(math.pi * d / 2))
        assert pair_constant(d, 2, 0.0) == pytest.approx(expected, rel=1e-7)

    @pytest.mark.parametrize("d,alpha", [(0.2, 0.5), (0.1, 0.7), (0.3, 0.9)])
    def test_offset_constant_beta_identity(self, d, alpha):
        # int |t|^(a-1) |1-t|^(b-1) dt = B(a, b) + B(a, 1-a-b) + B(b, 1-a-b)
        a, b = 1 - alpha, 1 - (2 - 1 - d)
        c = 1 - a - b
        expected = special.beta(a, b) + special.beta(a, c) + special.beta(b, c)
        assert offset_constant(d, 2, alpha) == pytest.approx(expected, rel=1e-7)

    @pytest.mark.parametrize("case,theta0", [(1, None), (3, 1.0)])
    def test_continuous_twin(self, case, theta0):
        d = 1.2 if case == 1 else 0.3
        fit = lemma2_check(d, 2, 0.5, case, theta0=theta0, flavor="continuous")
        assert abs(fit.exponent_error) < 0.02
        assert fit.constant_ratio == pytest.approx(1.0, abs=0.05)

    def test_boundary_continuity(self):
        dirac = lemma1_check(0.5, 2, 3, theta0=math.pi / 3)
        near = lemma2_check(0.5, 2, 0.95, 3, theta0=math.pi / 3)
        closer = lemma2_check(0.5, 2, 0.99, 3, theta0=math.pi / 3)
        gap = dirac.fitted_exponent - near.fitted_exponent
        assert gap < 0.05
        # the gap is 1 - alpha and closes as alpha approaches 1
        assert gap == pytest.approx(0.05, abs=1e-3)
        assert dirac.fitted_exponent - closer.fitted_exponent == pytest.approx(0.01, abs=1e-3)

    @pytest.mark.parametrize("d,alpha,case", [(0.9, 0.5, 1), (2.6, 0.5, 1), (0.6, 0.5, 3),
                                              (-0.1, 0.5, 3), (1.2, 1.0, 1)])
    def test_precondition(self, d, alpha, case):
        with pytest.raises(PreconditionViolated):
            lemma2_check(d, 2, alpha, case, theta0=1.0)


class TestDisappearance:
    def test_examples(self):
        rows = disappearance_sweep([0.5, -0.9], [0.0, 0.9, 0.5], math.pi / 4)
        by = {(r.d, r.beta): r for r in rows}
        assert by[(0.5, 0.0)].region == REGION_EXISTS
        assert by[(0.5, 0.9)].region == REGION_LM and by[(0.5, 0.9)].alpha == pytest.approx(0.4)
        assert by[(-0.9, 0.5)].region == REGION_NONE

    def test_fit_points_match_alpha(self):
        rows = disappearance_sweep([0.5], [0.9], math.pi / 4, fit_points=[(0.5, 0.9), (0.3, 0.5)])
        fitted = {(r.d, r.beta): r.fitted for r in rows}
        assert fitted[(0.5, 0.9)] == pytest.approx(0.4, abs=0.02)
        assert fitted[(0.3, 0.5)] == pytest.approx(0.2, abs=0.02)

    def test_translate_at_zero(self):
        rows = disappearance_sweep([2.5, 1.0, 2.9], [0.9], 0.0)
        by = {r.d: r.region for r in rows}
        assert by == {2.5: REGION_LM, 1.0: REGION_NONE, 2.9: REGION_EXISTS}

    def test_fit_skipped_outside_lm(self):
        rows = disappearance_sweep([0.5], [0.0], math.pi / 4, fit_points=[(0.5, 0.0)])
        assert rows[0].fitted is None


def test_fit_type_exported():
    assert AsymptoticFit.__dataclass_fields__["fitted_exponent"]
