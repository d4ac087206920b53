import math

import numpy as np
import pytest

from lmagg.errors import ExistenceRefused, InvalidLaw, NotPSD, StepTooCoarse
from lmagg.laws import CONTINUOUS
from lmagg.model import COMMON, INDEPENDENT, INTERACTIVE, InnovationScheme, ar1_model
from lmagg.panel import (BURN_CAP, aggregate, capped_burn_in, generate_innovations,
                         simulate_ar_member, simulate_ou_member, suggested_burn_in, toeplitz_factor)
from lmagg.periodogram import peak_frequency, periodogram, raw_periodogram, smoothed_l1
from lmagg.poles import COMPLEX, REAL, ArCoefficients, PoleSample, expand_polynomial
from lmagg.spectral import H2, pointwise_g, spectrum_values


def acf(x, lag):
    x = x - x.mean()
    return float(np.dot(x[:-lag], x[lag:]) / np.dot(x, x))


class TestArMember:
    def test_ar1_variance(self):
        e = np.random.default_rng(1).standard_normal(10 ** 6)
        y = simulate_ar_member(ArCoefficients(np.array([-0.5])), e, 100)
        assert y.var() == pytest.approx(1 / (1 - 0.25), rel=0.02)

    def test_ar1_autocorrelation(self):
        e = np.random.default_rng(2).standard_normal(10 ** 6)
        y = simulate_ar_member(ArCoefficients(np.array([-0.5])), e, 100)
        assert acf(y, 1) == pytest.approx(0.5, abs=0.01)

    def test_pair_peak_at_quarter_turn(self):
        e = np.random.default_rng(3).standard_normal(2 ** 16)
        y = simulate_ar_member(ArCoefficients(np.array([0.0, 0.64])), e, 200)
        pg = periodogram(y, span=256)
        sample = PoleSample([(COMPLEX, 1, 0.8, math.pi / 2)])
        grid = np.linspace(0.01, math.pi, 2000)
        oracle = grid[np.argmax(pointwise_g(sample, grid))]
        assert oracle == pytest.approx(math.pi / 2, abs=2e-3)
        # the half-power width of this peak is about 0.45 rad; allow a quarter of it
        assert peak_frequency(pg) == pytest.approx(oracle, abs=0.1)

    def test_burn_in_length(self):
        s = PoleSample([(REAL, 1, 0.5, 0.0)])
        b = suggested_burn_in(s)
        assert 0.5 ** b <= 1e-8 < 0.5 ** (b - 1)
        near_unit = PoleSample([(REAL, 1, 1 - 1e-9, 0.0)])
        assert capped_burn_in(near_unit) == (BURN_CAP, True)

    def test_burn_in_removes_transient(self):
        e = np.zeros(50)
        e[0] = 1.0
        y = simulate_ar_member(ArCoefficients(np.array([-0.5])), e, 10)
        np.testing.assert_allclose(y, 0.5 ** np.arange(10, 50))


class TestOuMember:
    def test_variance(self):
        s = PoleSample([(REAL, 1, 1.0, 0.0)], CONTINUOUS)
        y = simulate_ou_member(s, 0.05, 20_000.0, np.random.default_rng(4))
        assert y.var() == pytest.approx(0.5, rel=0.02)

    def test_autocorrelation(self):
        s = PoleSample([(REAL, 1, 1.0, 0.0)], CONTINUOUS)
        y = simulate_ou_member(s, 0.05, 20_000.0, np.random.default_rng(5))
        assert acf(y, 20) == pytest.approx(math.exp(-1.0), abs=0.02)

    def test_pair_peak(self):
        s = PoleSample([(COMPLEX, 1, 0.5, 2.0)], CONTINUOUS)
        step = 0.04
        y = simulate_ou_member(s, step, 8000.0, np.random.default_rng(6))
        pg = periodogram(y, step=step, span=16)
        grid = np.linspace(0.5, 4.0, 3501)
        oracle = grid[np.argmax(pointwise_g(s, grid))]
        assert oracle == pytest.approx(2.0, abs=0.1)
        assert peak_frequency(pg, (0.5, 4.0)) == pytest.approx(oracle, abs=0.1)

    def test_coarse_step_refused(self):
        s = PoleSample([(COMPLEX, 1, 0.5, 2.0)], CONTINUOUS)
        with pytest.raises(StepTooCoarse):
            simulate_ou_member(s, 0.1, 10.0, np.random.default_rng(0))

    def test_discrete_sample_refused(self):
        with pytest.raises(InvalidLaw):
            simulate_ou_member(PoleSample([(REAL, 1, 0.5, 0.0)]), 0.01, 1.0, np.random.default_rng(0))


class TestInnovations:
    def test_common_rows_identical(self):
        e = generate_innovations(InnovationScheme(COMMON), 3, 100, np.random.default_rng(0))
        assert (e == e[0]).all()

    def test_independent_rows_uncorrelated(self):
        e = generate_innovations(InnovationScheme(INDEPENDENT), 100, 10 ** 4, np.random.default_rng(0))
        c = np.corrcoef(e)
        off = c[~np.eye(100, dtype=bool)]
        assert abs(off.mean()) < 0.01

    def test_interactive_neighbour_correlation(self):
        scheme = InnovationScheme(INTERACTIVE, "geometric", {"rate": 0.5})
        e = generate_innovations(scheme, 50, 10 ** 4, np.random.default_rng(0))
        c = np.corrcoef(e)
        assert np.mean(np.diag(c, 1)) == pytest.approx(0.5, abs=0.02)

    def test_toeplitz_factor_reproduces_target(self):
        scheme = InnovationScheme(INTERACTIVE, "geometric", {"rate": 0.5})
        L = toeplitz_factor(scheme, 50)
        np.testing.assert_allclose(L @ L.T, scheme.correlation_matrix(50), atol=1e-10)

    def test_not_psd(self):
        scheme = InnovationScheme(INTERACTIVE, "explicit", {"values": [0.9, -0.9]})
        with pytest.raises(NotPSD):
            generate_innovations(scheme, 10, 10, np.random.default_rng(0))


class TestAggregate:
    def test_single_member_is_the_member(self):
        run = aggregate(ar1_model(0.5), 1, 500, 11, keep_members=True)
        assert run.normalization == 1.0
        np.testing.assert_array_equal(run.aggregate, run.members[0])

    @pytest.mark.parametrize("kind,expected", [(INDEPENDENT, math.sqrt(16)), (COMMON, 16.0)])
    def test_normalization(self, kind, expected):
        run = aggregate(ar1_model(0.5, innovation=InnovationScheme(kind)), 16, 300, 0)
        assert run.normalization == expected

    def test_interactive_user_normalization(self):
        scheme = InnovationScheme(INTERACTIVE, "geometric", {"rate": 0.5}, normalization=7.0)
        assert aggregate(ar1_model(0.5, innovation=scheme), 16, 300, 0).normalization == 7.0

    @pytest.mark.parametrize("scheme", [InnovationScheme(INDEPENDENT), InnovationScheme(COMMON),
                                        InnovationScheme(INTERACTIVE, "geometric", {"rate": 0.5})])
    def test_reproducible(self, scheme):
        model = ar1_model(0.5, innovation=scheme)
        a = aggregate(model, 130, 1000, 42)
        b = aggregate(model, 130, 1000, 42)
        assert a.aggregate.tobytes() == b.aggregate.tobytes()
        assert a.samples == b.samples

    def test_worker_count_does_not_change_result(self):
        model = ar1_model(0.5)
        a = aggregate(model, 150, 800, 3)
        b = aggregate(model, 150, 800, 3, jobs=2)
        assert a.aggregate.tobytes() == b.aggregate.tobytes()

    def test_existence_refused(self):
        with pytest.raises(ExistenceRefused):
            aggregate(ar1_model(-0.25), 10, 300, 0)
        run = aggregate(ar1_model(-0.25), 10, 300, 0, force=True)
        assert run.aggregate.shape == (300,)

    def test_continuous_needs_step(self):
        from lmagg.config import ExperimentConfig
        model = ExperimentConfig.from_dict({"preset": "ou-corollary1"}, "classify").build_model()
        with pytest.raises(InvalidLaw):
            aggregate(model, 2, 100, 0)

    def test_members_sum_to_aggregate(self):
        run = aggregate(ar1_model(0.5, innovation=InnovationScheme(COMMON)), 20, 400, 5,
                        keep_members=True)
        np.testing.assert_allclose(run.members.sum(axis=0) / 20.0, run.aggregate, rtol=1e-12)

    def test_conditional_spectrum(self):
        # for fixed poles, the mean periodogram of independent members is the average of g
        model = ar1_model(0.5)
        samples = [model.draw(np.random.default_rng([9, i])) for i in range(20)]
        samples = [s for s in samples if s.max_modulus() < 0.99]
        coeffs = [expand_polynomial(s) for s in samples]
        rng = np.random.default_rng(10)
        T = 2048
        raws = []
        for _ in range(50):
            x = sum(simulate_ar_member(c, rng.standard_normal(T + 3000), 3000) for c in coeffs)
            freqs, power = raw_periodogram(x / math.sqrt(len(coeffs)))
            raws.append(power)
        raws = np.array(raws)
        mean = raws.mean(axis=0)
        err = raws.std(axis=0) / math.sqrt(len(raws))
        target = np.mean([pointwise_g(s, freqs) for s in samples], axis=0) / (2 * math.pi)
        band = (freqs > 0.1) & (freqs < 3.0)
        z = (mean[band] - target[band]) / err[band]
        assert np.mean(np.abs(z) < 3) > 0.95
        # band-level bias within three standard errors (frequencies nearly independent)
        bias = (mean[band].sum() - target[band].sum()) / math.sqrt(np.sum(err[band] ** 2))
        assert abs(bias) < 3

    def test_common_distance_shrinks_with_n(self):
        model = ar1_model(-0.25, innovation=InnovationScheme(COMMON))
        distances = []
        for N in (10, 100, 1000):
            values = []
            for seed in range(20):
                run = aggregate(model, N, 2048, seed)
                pg = periodogram(run.aggregate, span=32)
                ref = spectrum_values(model, pg.grid, H2) / (2 * math.pi)
                values.append(smoothed_l1(pg, ref, (0.05, 3.0)))
            distances.append(float(np.median(values)))
        assert distances[0] > distances[1] > distances[2]

    def test_common_matches_squared_transfer(self):
        model = ar1_model(-0.25, innovation=InnovationScheme(COMMON))
        values = []
        for seed in range(3):
            run = aggregate(model, 2000, 2 ** 14, seed)
            pg = periodogram(run.aggregate)
            ref = spectrum_values(model, pg.grid, H2) / (2 * math.pi)
            values.append(smoothed_l1(pg, ref, (0.05, 3.0)))
        assert np.median(values) < 0.15

    def test_continuous_panel_reproducible(self):
        from lmagg.config import ExperimentConfig
        model = ExperimentConfig.from_dict({"preset": "ou-corollary1"}, "classify").build_model()
        a = aggregate(model, 4, 300, 8, step=0.005)
        b = aggregate(model, 4, 300, 8, step=0.005)
        assert a.aggregate.shape == (300,) and np.isfinite(a.aggregate).all()
        assert a.aggregate.tobytes() == b.aggregate.tobytes()
