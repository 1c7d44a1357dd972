import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from reflimits.model import (
    AdditiveFunctional,
    ConstantDrift,
    ConstantSq,
    DiffusionModel,
    TwoBarrier,
    ZeroCost,
)
from reflimits.poisson import compute_alpha_two_barrier
from reflimits.rate import (
    SlopeRangeError,
    legendre,
    rate_curve,
    tail_exponent,
)
from reflimits.spectral import PsiCurve, psi_curve

ZHANG = AdditiveFunctional(ZeroCost(), 0.0, 1.0)


def rbm_model():
    return DiffusionModel(ConstantDrift(1.0), ConstantSq(1.0), TwoBarrier(1.0))


@pytest.fixture(scope="module")
def zhang_curve():
    return psi_curve(rbm_model(), ZHANG, np.linspace(-3.0, 3.0, 61))


@pytest.fixture(scope="module")
def zhang_alpha():
    return compute_alpha_two_barrier(rbm_model(), ZHANG)


def linear_curve():
    # psi(theta) = theta: deterministic A(t) = t
    thetas = np.linspace(-2.0, 2.0, 21)
    return PsiCurve(thetas=thetas, psis=thetas.copy(), alpha_check=1.0,
                    convexity_violations=0)


class TestLegendre:
    def test_vanishes_at_mean(self, zhang_curve, zhang_alpha):
        res = legendre(zhang_curve, zhang_alpha)
        assert res.value <= 1e-8
        assert res.value >= -1e-12
        assert abs(res.arg_theta) < 1e-2
        assert not res.boundary_flag

    def test_linear_psi_degenerate(self):
        curve = linear_curve()
        res = legendre(curve, 1.0)
        assert res.value == pytest.approx(0.0, abs=1e-12)
        # any other level: maximizer escapes to an endpoint, flagged
        for y in (0.5, 1.5):
            res = legendre(curve, y)
            assert res.boundary_flag

    def test_brute_force_oracle(self, zhang_curve, zhang_alpha):
        # dense-grid supremum over the same interpolant
        spline = CubicSpline(zhang_curve.thetas, zhang_curve.psis)
        dense = np.linspace(-3.0, 3.0, 1_000_000)
        ps = spline(dense)
        rng = np.random.RandomState(7)
        for y in zhang_alpha * (1.0 + 0.4 * rng.rand(10) - 0.1):
            res = legendre(zhang_curve, float(y))
            brute = float(np.max(dense * y - ps))
            assert abs(res.value - brute) <= 1e-6

    def test_monotone_away_from_mean(self, zhang_curve, zhang_alpha):
        ys = np.linspace(0.6 * zhang_alpha, 1.8 * zhang_alpha, 25)
        vals = np.array([legendre(zhang_curve, float(y)).value for y in ys])
        below = ys < zhang_alpha
        assert np.all(np.diff(vals[below]) <= 1e-10)
        assert np.all(np.diff(vals[~below]) >= -1e-10)

    def test_rejects_nonconvex_curve(self, zhang_curve):
        bad = PsiCurve(thetas=zhang_curve.thetas, psis=zhang_curve.psis,
                       alpha_check=0.0, convexity_violations=3)
        with pytest.raises(ValueError, match="convexity"):
            legendre(bad, 1.0)

    def test_youngs_inequality(self, zhang_curve):
        spline = CubicSpline(zhang_curve.thetas, zhang_curve.psis)
        rng = np.random.RandomState(11)
        secants = np.diff(zhang_curve.psis) / np.diff(zhang_curve.thetas)
        ys = np.linspace(secants.min() + 0.05, secants.max() - 0.05, 7)
        for y in ys:
            iy = legendre(zhang_curve, float(y)).value
            for theta in rng.uniform(-3.0, 3.0, 5):
                assert theta * y <= iy + float(spline(theta)) + 1e-8


class TestTailExponent:
    def test_zero_at_mean(self, zhang_curve, zhang_alpha):
        res = tail_exponent(zhang_curve, zhang_alpha)
        assert abs(res.exponent) <= 1e-8
        assert abs(res.theta_z) < 1e-2

    def test_above_mean_positive(self, zhang_curve, zhang_alpha):
        res = tail_exponent(zhang_curve, 1.2 * zhang_alpha)
        assert res.exponent > 0.0
        assert res.theta_z > 0.0

    def test_matches_legendre_interior(self, zhang_curve, zhang_alpha):
        for frac in (0.8, 0.95, 1.1, 1.3):
            z = frac * zhang_alpha
            te = tail_exponent(zhang_curve, z)
            le = legendre(zhang_curve, z)
            assert abs(te.exponent - le.value) <= 1e-8

    def test_out_of_range_reported(self, zhang_curve):
        secants = np.diff(zhang_curve.psis) / np.diff(zhang_curve.thetas)
        with pytest.raises(SlopeRangeError):
            tail_exponent(zhang_curve, secants.min() - 0.1)
        with pytest.raises(SlopeRangeError):
            tail_exponent(zhang_curve, secants.max() + 0.1)


class TestRateCurve:
    def test_bundle_properties(self, zhang_curve, zhang_alpha):
        secants = np.diff(zhang_curve.psis) / np.diff(zhang_curve.thetas)
        ys = np.linspace(secants.min() + 0.05, secants.max() - 0.05, 41)
        rf = rate_curve(zhang_curve, ys)
        assert np.all(rf.values >= -1e-12)
        # discrete convexity
        d2 = np.diff(rf.values, 2)
        assert np.min(d2) >= -1e-8 * max(1.0, np.max(np.abs(rf.values)))
        # maximizers nondecreasing in the level
        assert np.all(np.diff(rf.arg_thetas) >= -1e-9)
        # interior levels not flagged
        assert not rf.domain_flags.any()
        # I(alpha) = 0 at the strong-law mean
        k = int(np.argmin(np.abs(rf.ys - zhang_alpha)))
        assert rf.values[k] <= 5e-4  # coarse sampling overhead only

    def test_requires_ascending(self, zhang_curve):
        with pytest.raises(ValueError):
            rate_curve(zhang_curve, np.array([1.0, 0.5]))
