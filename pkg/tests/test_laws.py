import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from lmagg.errors import DiracDensityQuery, InvalidLaw, InvalidMixture, OutOfSupport
from lmagg.laws import CONTINUOUS, AngularLaw, RadialLaw, density, mixed_angular_law, sample
from lmagg.shapes import exp_decay, indicator, polynomial, power_tail


def _piece(f, a, b, sing):
    """Integral over [a, b]; a piece touching ``sing`` is done in the variable log|x - sing|."""
    kw = dict(limit=200, epsabs=0, epsrel=1e-11)
    if sing is not None and a == sing:
        return integrate.quad(lambda u: f(sing + math.exp(u)) * math.exp(u), -np.inf, math.log(b - a), **kw)[0]
    if sing is not None and b == sing:
        return integrate.quad(lambda u: f(sing - math.exp(u)) * math.exp(u), -np.inf, math.log(b - a), **kw)[0]
    return integrate.quad(f, a, b, **kw)[0]


def offset_total(w, length, cuts=()):
    """Integral of ``w(u)`` over ``0 < u < length`` in the variable ``log u``."""
    logs = sorted(math.log(c) for c in set(cuts) if 0 < c < length)
    edges = [math.log(1e-300), *logs, math.log(length)]
    return sum(integrate.quad(lambda v: w(math.exp(v)) * math.exp(v), a, b, limit=400, epsabs=0,
                              epsrel=1e-11)[0] for a, b in zip(edges[:-1], edges[1:]))


def quad_total(f, lo, hi, points=(), sing=None):
    edges = [lo, *sorted(p for p in set(points) if lo < p < hi), hi]
    return sum(_piece(f, a, b, sing) for a, b in zip(edges[:-1], edges[1:]))


class TestDensity:
    def test_uniform_radial(self):
        assert density(RadialLaw(d=0.0), 0.3) == pytest.approx(1.0, rel=1e-10)

    def test_linear_radial(self):
        assert density(RadialLaw(d=1.0), 0.5) == pytest.approx(1.0, rel=1e-10)

    def test_angular_square_root_singularity(self):
        law = AngularLaw(beta=0.5, theta0=0.0)
        expected = 0.25 ** -0.5 / (4 * math.sqrt(math.pi))
        assert density(law, 0.25) == pytest.approx(expected, rel=1e-9)

    def test_dirac_has_no_density(self):
        with pytest.raises(DiracDensityQuery):
            density(AngularLaw(beta=1.0, theta0=1.0), 1.0)

    def test_out_of_support(self):
        with pytest.raises(OutOfSupport):
            density(RadialLaw(d=0.5), 1.5)
        with pytest.raises(OutOfSupport):
            density(AngularLaw(beta=0.3, theta0=0.0, support=(-1.0, 1.0)), 2.0)

    def test_invalid_parameters(self):
        with pytest.raises(InvalidLaw):
            RadialLaw(d=-1.0)
        with pytest.raises(InvalidLaw):
            AngularLaw(beta=1.2, theta0=0.0)

    def test_continuous_default_phi_is_exponential(self):
        law = RadialLaw.continuous(0.5)
        expected = 0.7 ** 0.5 * math.exp(-0.7) / math.gamma(1.5)
        assert density(law, 0.7) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("law", [
        RadialLaw(d=-0.7),
        RadialLaw(d=2.5, phi=polynomial(1.0, 0.5)),
        RadialLaw.continuous(-0.5, exp_decay(2.0)),
        AngularLaw(beta=0.9, theta0=0.4),
        AngularLaw(beta=-0.5, theta0=1.0, psi=indicator(0.5, 2.5)),
        AngularLaw(beta=0.5, theta0=3.0, flavor=CONTINUOUS, psi=power_tail(2.0, 1.0, 3.0)),
    ])
    def test_integrates_to_one(self, law):
        # integrate in the distance to the singular point, since floating point
        # cannot resolve x near a nonzero singular point finely enough for beta near 1
        if isinstance(law, RadialLaw):
            length = 1.0 if law.flavor != CONTINUOUS else law.upper
            total = offset_total(law.weight_s, length, law.kinks_s())
        else:
            lo, hi = law.support
            t0 = law.theta0
            kinks = law.psi.kinks()
            total = 0.0
            for sgn, length in ((1, hi - t0), (-1, t0 - lo)):
                if length > 0:
                    cuts = [sgn * (k - t0) for k in kinks]
                    total += offset_total(lambda u: law.weights(t0 + sgn * u, u).item(), length, cuts)
        assert total == pytest.approx(1.0, abs=1e-8)


class TestSampling:
    def test_dirac(self):
        rng = np.random.default_rng(0)
        assert sample(AngularLaw(beta=1.0, theta0=math.pi / 3), rng) == math.pi / 3

    def test_uniform_mean(self):
        x = sample(RadialLaw(d=0.0), np.random.default_rng(1), 100_000)
        assert abs(x.mean() - 0.5) < 0.005

    def test_linear_mean(self):
        x = sample(RadialLaw(d=1.0), np.random.default_rng(2), 100_000)
        assert abs(x.mean() - 1 / 3) < 0.005

    @pytest.mark.parametrize("law", [
        RadialLaw(d=-0.6),
        RadialLaw(d=0.8),
        RadialLaw.continuous(0.3),
        AngularLaw(beta=0.7, theta0=0.5),
        AngularLaw(beta=-0.4, theta0=math.pi / 4, psi=indicator(0.2, 1.4)),
    ])
    def test_kolmogorov_smirnov(self, law):
        x = law.sample(np.random.default_rng(3), 100_000)
        res = stats.kstest(x, law.cdf)
        crit = 1.628 / math.sqrt(x.size)  # 0.01-level asymptotic critical value
        assert res.statistic < crit

    @pytest.mark.parametrize("law,lo,sing", [
        (RadialLaw(d=-0.6), 0.0, 1.0),
        (AngularLaw(beta=0.7, theta0=0.5), -math.pi, 0.5),
    ])
    def test_inverse_cdf_accuracy(self, law, lo, sing):
        for u in np.linspace(0.001, 0.999, 15):
            q = float(law.table().ppf(u))
            if isinstance(law, RadialLaw):
                # table coordinate is s = 1 - rho; the CDF of s is u
                exact = offset_total(law.weight_s, q)
            else:
                left = lambda u: law.weights(sing - u, u).item()
                right = lambda u: law.weights(sing + u, u).item()
                below = offset_total(left, sing - lo)
                if q < sing:
                    exact = below - offset_total(left, sing - q)
                else:
                    exact = below + offset_total(right, q - sing)
            assert abs(exact - u) < 1e-6

    def test_sampling_reproducible(self):
        law = AngularLaw(beta=0.3, theta0=0.2)
        a = law.sample(np.random.default_rng(9), 50)
        b = law.sample(np.random.default_rng(9), 50)
        np.testing.assert_array_equal(a, b)


class TestMixedAngularLaw:
    def test_pure_atom(self):
        law = mixed_angular_law([(1.0, 2.0)])
        x = law.sample(np.random.default_rng(0), 100)
        assert np.all(x == 2.0)

    def test_atom_frequency(self):
        diffuse = AngularLaw(beta=0.0, theta0=1.5, flavor=CONTINUOUS, psi=indicator(1.0, 2.0),
                             support=(1.0, 2.0))
        law = mixed_angular_law([(0.5, 0.0)], [(0.5, diffuse)])
        x = law.sample(np.random.default_rng(1), 10_000)
        assert abs(np.mean(x == 0.0) - 0.5) < 0.01

    def test_zero_mass(self):
        with pytest.raises(InvalidMixture):
            mixed_angular_law([(0.0, 1.0)])

    def test_two_singular_pieces_chi_square(self):
        pieces = [(1.0, AngularLaw(beta=0.5, theta0=s, flavor=CONTINUOUS, psi=indicator(-2.0, 2.0),
                                   support=(-2.0, 2.0))) for s in (-1.0, 1.0)]
        law = mixed_angular_law([], pieces)
        x = law.sample(np.random.default_rng(2), 100_000)
        edges = np.linspace(-2.0, 2.0, 41)
        observed, _ = np.histogram(x, edges)
        probs = np.array([quad_total(lambda t: law.density(t), a, b, [-1.0, 1.0])
                          for a, b in zip(edges[:-1], edges[1:])])
        assert probs.sum() == pytest.approx(1.0, abs=1e-8)
        res = stats.chisquare(observed, probs * x.size)
        assert res.pvalue > 0.01

    def test_atom_density_query(self):
        with pytest.raises(DiracDensityQuery):
            mixed_angular_law([(1.0, 0.0)]).density(0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.9, 3.0), st.floats(0.05, 0.95))
def test_radial_cdf_monotone_and_bounded(d, x):
    law = RadialLaw(d=d)
    c = law.cdf(np.array([0.0, x, 1.0]))
    assert c[0] == pytest.approx(0.0, abs=1e-12)
    assert c[2] == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= c[1] <= 1.0
