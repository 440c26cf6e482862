import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fadecap.capacity import optimize_capacity
from fadecap.constellations import RadialDistribution, amqam, gaussian_radial, psk, uniform_disk
from fadecap.errors import ConvergenceError, DomainError
from fadecap.exact_mi import (
    FAST_BUDGET,
    MiContext,
    QuadratureBudget,
    certify,
    fit_multipliers,
    information_density,
    log_f_kernel,
    mi_radial,
    optimality_residual,
)

from oracles import log_f_reference, mi_radial_reference

ONOFF = RadialDistribution([0.0, math.sqrt(2.0)], [0.5, 0.5])


class TestKernel:
    def test_equal_radii_no_csi(self):
        ctx = MiContext(3, 0.4, 0.7)
        x, y = np.array([0.3, 2.0, 9.0]), np.array([1.0, 0.0, 4.0])
        np.testing.assert_allclose(log_f_kernel(x, y, 1.3, 1.3, ctx), -(x + y) / 2, atol=1e-15)

    def test_hand_case(self):
        ctx = MiContext(2, 0.5, 1.0, 1.0)
        assert log_f_kernel(1, 1, 1, 2, ctx) == pytest.approx(
            log_f_reference(1, 1, 1, 2, 2, 0.5, 1.0, 1.0), abs=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 50), st.floats(0, 50), st.floats(0, 4), st.floats(0, 4),
           st.integers(1, 6), st.floats(0, 1), st.floats(0.01, 5), st.floats(0, 5))
    def test_against_reference(self, x, y, r, rho, L, beta, sigma2, u):
        got = log_f_kernel(x, y, r, rho, MiContext(L, beta, sigma2, u))
        assert got == pytest.approx(log_f_reference(x, y, r, rho, L, beta, sigma2, u),
                                    rel=1e-12, abs=1e-12)

    def test_context_validation(self):
        with pytest.raises(DomainError):
            MiContext(0, 0.5, 1.0)
        with pytest.raises(DomainError):
            MiContext(1, 0.5, -1.0)
        with pytest.raises(DomainError):
            MiContext(1, 0.5, 1.0, -0.1)
        with pytest.raises(DomainError):
            QuadratureBudget(1, 10)


class TestMutualInformation:
    @pytest.mark.parametrize("L", [1, 2, 5])
    @pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
    def test_point_mass_without_csi_is_zero(self, L, beta):
        ctx = MiContext(L, beta, 0.5)
        assert abs(mi_radial(RadialDistribution([1.0], [1.0]), ctx)) <= 1e-7

    def test_point_mass_with_csi_carries_phase_information(self):
        # a fixed radius still conveys its phase once alpha_hat != 0
        got = mi_radial(RadialDistribution([1.0], [1.0]), MiContext(1, 0.5, 0.5, 1.0))
        ref = mi_radial_reference([1.0], [1.0], 1, 0.5, 0.5, 1.0)
        assert got > 0.1
        assert got == pytest.approx(ref, abs=1e-7)

    @pytest.mark.parametrize("radii,probs,L,beta,sigma2,u", [
        ([0.0, math.sqrt(2.0)], [0.5, 0.5], 1, 1.0, 1.0, 0.0),
        ([1.0], [1.0], 1, 0.0, 1.0, 1.0),
        ([0.3, 1.1, 1.6], [0.3, 0.5, 0.2], 1, 0.3, 0.2, 0.7),
        ([0.0, 1.2], [1 - 1 / 1.44, 1 / 1.44], 1, 0.5, 0.5, 0.5),
    ])
    def test_against_scipy_reference(self, radii, probs, L, beta, sigma2, u):
        got = mi_radial(RadialDistribution(radii, probs), MiContext(L, beta, sigma2, u))
        assert got == pytest.approx(mi_radial_reference(radii, probs, L, beta, sigma2, u), abs=1e-7)

    def test_against_scipy_reference_two_paths(self):
        rd = amqam(2)
        got = mi_radial(rd, MiContext(2, 0.5, 0.5, 0.5))
        assert got == pytest.approx(mi_radial_reference(rd.radii, rd.probs, 2, 0.5, 0.5, 0.5), abs=1e-6)

    def test_frozen_values(self):
        # frozen after agreement with the scipy reference and the Monte Carlo oracle
        assert mi_radial(ONOFF, MiContext(1, 1.0, 1.0)) == pytest.approx(0.119759105, abs=1e-8)
        assert mi_radial(amqam(2), MiContext(2, 1.0, 0.5)) == pytest.approx(0.046188516, abs=1e-8)
        assert mi_radial(amqam(2), MiContext(2, 0.0, 0.5, 1.0)) == pytest.approx(1.063326182, abs=1e-8)
        assert mi_radial(psk(), MiContext(1, 0.0, 1.0, 1.0)) == pytest.approx(0.679902887, abs=1e-8)

    @pytest.mark.parametrize("u,sigma2", [(1.0, 1.0), (0.5, 0.2), (2.0, 0.1)])
    def test_coherent_gaussian_limit(self, u, sigma2):
        got = mi_radial(gaussian_radial(256), MiContext(1, 0.0, sigma2, u))
        assert got == pytest.approx(math.log1p(u / sigma2), abs=5e-3)
        assert got <= math.log1p(u / sigma2) + 1e-6

    def test_merge_and_drop_invariance(self):
        ctx = MiContext(2, 0.6, 0.4, 0.3)
        base = RadialDistribution([0.5, 1.2], [0.4, 0.6])
        split = RadialDistribution.from_points([0.5, 1.2, 1.2, 3.0], [0.4, 0.35, 0.25, 0.0],
                                               drop_below=0.0)
        assert mi_radial(split, ctx) == mi_radial(base, ctx)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(0.0, 3.0), min_size=1, max_size=4, unique=True),
           st.integers(1, 3), st.floats(0, 1), st.floats(0.05, 3), st.floats(0, 3))
    def test_nonnegative(self, radii, L, beta, sigma2, u):
        radii = sorted(radii)
        if len(radii) > 1 and min(np.diff(radii)) < 1e-6:
            return
        rd = RadialDistribution(radii, np.full(len(radii), 1.0 / len(radii)))
        assert mi_radial(rd, MiContext(L, beta, sigma2, u, FAST_BUDGET)) >= -1e-8

    @pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
    def test_concave_in_distribution(self, t):
        ctx = MiContext(1, 0.7, 0.3, 0.4)
        mu1, mu2 = uniform_disk(3), ONOFF
        mix = RadialDistribution.from_points(np.r_[mu1.radii, mu2.radii],
                                             np.r_[t * mu1.probs, (1 - t) * mu2.probs])
        lhs = mi_radial(mix, ctx)
        assert lhs >= t * mi_radial(mu1, ctx) + (1 - t) * mi_radial(mu2, ctx) - 1e-6

    def test_tol_detects_starved_budget(self):
        ctx = MiContext(1, 0.2, 0.01, 2.0, QuadratureBudget(4, 4, 9.0))
        with pytest.raises(ConvergenceError):
            mi_radial(uniform_disk(4), ctx, tol=1e-9)

    def test_tol_passes_default_budget(self):
        mi_radial(ONOFF, MiContext(1, 1.0, 1.0), tol=1e-8)


@pytest.fixture(scope="module")
def low_snr_optimum():
    return optimize_capacity(0.0, 1.0, 10.0)


class TestResidual:
    def test_optimum_certified_at_low_snr(self, low_snr_optimum):
        res = low_snr_optimum
        assert len(res.argmax) == 2 and res.argmax.includes_zero
        rep = certify(res.argmax, MiContext(1, 1.0, 10.0))
        assert rep.passed and rep.certificate
        assert rep.max_violation <= 1e-3

    def test_perturbed_point_fails(self, low_snr_optimum):
        res = low_snr_optimum
        ctx = MiContext(1, 1.0, 10.0)
        lam1, lam2 = fit_multipliers(res.argmax, ctx)
        moved = RadialDistribution(res.argmax.radii * np.array([1.0, 1.1]), res.argmax.probs)
        rep = optimality_residual(moved, lam1, lam2, ctx)
        assert rep.max_support_abs > 1e-3
        assert not rep.passed

    def test_gaussian_smoke(self):
        rep = certify(gaussian_radial(32), MiContext(1, 0.0, 1.0, 1.0))
        assert np.all(np.isfinite(rep.g))
        assert rep.to_dict()["certificate"] is True

    def test_multiplier_fit_exact_on_support(self, low_snr_optimum):
        rd = low_snr_optimum.argmax
        ctx = MiContext(1, 1.0, 10.0)
        dens = information_density(rd.radii, rd, ctx)
        lam1, lam2 = fit_multipliers(rd, None, density=dens)
        assert lam2 > 0
        np.testing.assert_allclose(lam1 + lam2 * rd.radii**2, dens, atol=1e-12)

    def test_multiplier_fit_clamps_negative_slope(self):
        # on-off at 0 dB is not optimal: i(0) > i(sqrt 2), so lambda2 is clamped at zero
        lam1, lam2 = fit_multipliers(ONOFF, MiContext(1, 1.0, 1.0))
        assert lam2 == 0.0
        assert lam1 == pytest.approx(0.119759105, abs=1e-8)

    def test_negative_multiplier_rejected(self):
        with pytest.raises(DomainError):
            optimality_residual(ONOFF, -1.0, 0.0, MiContext(1, 1.0, 1.0))
