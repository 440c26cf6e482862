import math

import numpy as np
import pytest

from fadecap.bounds import (
    BoundReport,
    asymptotic_onoff_bound,
    best_lemma3_bound,
    fourth_moment_vanishing_bound,
    gaussian_entropy,
    lower_bound_cor2,
    lower_bound_cor2_stats,
    lower_bound_lemma2,
    lower_bound_lemma3,
    lower_bound_lemma3_simplified,
    upper_bound_cor1,
    upper_bound_lemma1,
)
from fadecap.channel import ChannelParams, conditional_moments, make_rng
from fadecap.constellations import (
    Constellation,
    RadialDistribution,
    amqam,
    amqam_lift,
    lift_radial,
    product_constellation,
    psk,
)
from fadecap.errors import DomainError, LinearAlgebraError, PreconditionError
from fadecap.validation import random_sandwich_case

from oracles import lemma3_reference


def dense_lemma1(c, params):
    """ln|Cov(y)| - E ln|B_x| from per-symbol dense covariances."""
    means, covs = zip(*(conditional_moments(x, params) for x in c.symbols))
    p = c.probabilities
    mu = sum(pi * m for pi, m in zip(p, means))
    cov = sum(pi * (B + np.outer(m - mu, (m - mu).conj())) for pi, m, B in zip(p, means, covs))
    return (np.linalg.slogdet(cov)[1]
            - sum(pi * np.linalg.slogdet(B)[1] for pi, B in zip(p, covs)))


def random_isotropic(rng, K):
    """Zero-mean constellation with covariance I/K."""
    n = int(rng.integers(1, 4))
    radii = np.sort(rng.uniform(0.3, 2.0, n))
    probs = rng.dirichlet(np.ones(n))
    radii = radii / math.sqrt(float(np.dot(probs, radii**2)))
    base = lift_radial(RadialDistribution(radii, probs), int(rng.integers(3, 7)))
    return base if K == 1 else product_constellation(base, K)


def random_params(rng, K):
    L = int(rng.integers(1, 4))
    a = rng.normal(size=L) + 1j * rng.normal(size=L)
    return ChannelParams(K, L, float(rng.uniform()), float(10 ** rng.uniform(-1, 0.5)),
                         a * rng.uniform(0, 1))


class TestBoundReport:
    def test_rejects_nonfinite(self):
        with pytest.raises(LinearAlgebraError):
            BoundReport(math.nan, "upper-C1")

    def test_rejects_unknown_kind(self):
        with pytest.raises(DomainError):
            BoundReport(1.0, "sideways")

    def test_serializes(self):
        r = BoundReport(np.float64(0.5), "upper-C1", {"unit_energy": True})
        assert r.to_dict() == {"kind": "upper-C1", "value": 0.5,
                               "assumptions_met": {"unit_energy": True}, "error_estimate": 0.0}


class TestUpperBounds:
    def test_coherent_simplified_is_ln2(self):
        params = ChannelParams(1, 1, 0.0, 1.0, [1.0])
        pair = upper_bound_lemma1(lift_radial(psk(), 4), params)
        assert pair.simplified.value == pytest.approx(math.log(2.0), abs=1e-15)

    def test_deterministic_input_is_zero(self):
        c = Constellation(np.array([[0.6 + 0.8j]]), [1.0])
        params = ChannelParams(1, 3, 0.7, 0.4)
        assert upper_bound_lemma1(c, params).matrix.value == pytest.approx(0.0, abs=1e-12)

    def test_matrix_form_against_dense_determinants(self):
        params = ChannelParams(1, 2, 0.5, 1.0, [0.5, 0.5])
        c = lift_radial(amqam(2), 4)
        assert upper_bound_lemma1(c, params).matrix.value == pytest.approx(dense_lemma1(c, params), abs=1e-8)

    def test_matrix_form_k2_dense(self):
        rng = make_rng(7)
        c = random_isotropic(rng, 2)
        params = random_params(rng, 2)
        assert upper_bound_lemma1(c, params).matrix.value == pytest.approx(dense_lemma1(c, params), abs=1e-8)

    def test_cor1_noncoherent_arithmetic(self):
        params = ChannelParams(1, 4, 1.0, 1.0)
        assert upper_bound_cor1(lift_radial(psk(), 4), params).value == pytest.approx(0.125)

    def test_cor1_coherent_reduction(self):
        params = ChannelParams(2, 2, 0.0, 0.5, [1.0, 1j])
        c = product_constellation(lift_radial(psk(), 4), 2)
        assert upper_bound_cor1(c, params).value == pytest.approx(2 * math.log1p(2.0 / (2 * 0.5)))

    def test_ordering_on_random_unit_energy_cases(self):
        rng = make_rng(11)
        for _ in range(50):
            _, c, params = random_sandwich_case(rng)
            pair = upper_bound_lemma1(c, params)
            cor1 = upper_bound_cor1(c, params).value
            assert pair.matrix.value <= pair.simplified.value + 1e-9
            assert pair.simplified.value <= cor1 + 1e-9


class TestMinimumDistanceBounds:
    def test_coherent_gaussian_continuous(self):
        params = ChannelParams(1, 1, 0.0, 0.3, [1.2])
        c = lift_radial(psk(), 8)  # covariance 1, mean 0
        v = lower_bound_lemma2(c, params, "continuous", entropy=gaussian_entropy(1)).value
        assert v == pytest.approx(math.log1p(1.44 / 0.3), abs=1e-12)

    def test_noncoherent_continuous_nonpositive(self):
        params = ChannelParams(1, 1, 1.0, 1.0)
        c = lift_radial(psk(), 8)
        v = lower_bound_cor2(c, params, "continuous", entropy=gaussian_entropy(1)).value
        assert v == pytest.approx(0.0, abs=1e-14)

    def test_cor2_matches_lemma2(self):
        rng = make_rng(12)
        for i in range(20):
            K = 1 + i % 2
            c, params = random_isotropic(rng, K), random_params(rng, K)
            for variant, kw in (("discrete", {}), ("continuous", {"entropy": gaussian_entropy(K)})):
                a = lower_bound_lemma2(c, params, variant, **kw).value
                b = lower_bound_cor2(c, params, variant, **kw).value
                assert a == pytest.approx(b, abs=1e-9)

    def test_cor2_stats_path(self):
        c = amqam_lift(3)
        params = ChannelParams(1, 2, 0.3, 0.2, [0.4, 0.3j])
        assert lower_bound_cor2(c, params).value == pytest.approx(
            lower_bound_cor2_stats(c.entropy(), c.min_distance, params).value, abs=1e-12)

    def test_preconditions(self):
        params = ChannelParams(1, 1, 0.5, 1.0)
        with pytest.raises(PreconditionError):
            lower_bound_lemma2(Constellation(np.array([[1.0]]), [1.0]), params)
        with pytest.raises(PreconditionError):
            lower_bound_cor2(lift_radial(RadialDistribution([0.0, 2.0], [0.75, 0.25]), 1), params)
        with pytest.raises(PreconditionError):
            lower_bound_lemma2(lift_radial(psk(), 4), params, "continuous")


class TestOnOffBound:
    @pytest.mark.parametrize("K,m,L,beta,sigma2,u", [
        (1, 1.0, 2, 1.0, 1.0, 0.0),
        (2, 1.5, 3, 0.5, 0.5, 0.4),
        (5, 2.0, 2, 0.3, 1.0, 0.8),
        (16, 1.0, 10, 1.0, 1.0, 0.0),
        (40, 3.0, 4, 0.8, 0.3, 0.2),
    ])
    def test_against_scipy_reference(self, K, m, L, beta, sigma2, u):
        got = lower_bound_lemma3(K, m, L, beta, sigma2, u).value
        assert got == pytest.approx(lemma3_reference(K, m, L, beta, sigma2, u), abs=2e-7)

    @pytest.mark.parametrize("K,m,L,beta,sigma2,u", [
        (1, 1.0, 2, 1.0, 1.0, 0.0), (16, 1.0, 10, 1.0, 1.0, 0.0), (200, 4.0, 6, 0.4, 0.5, 0.3),
    ])
    def test_simplified_below_integral_and_ceiling(self, K, m, L, beta, sigma2, u):
        full = lower_bound_lemma3(K, m, L, beta, sigma2, u).value
        simp = lower_bound_lemma3_simplified(K, m, L, beta, sigma2, u).value
        E = 2 * m * L * sigma2
        assert simp <= full + 1e-9
        assert full <= math.log(K * E) / E + 1e-12

    def test_k1_has_no_second_term(self):
        # K = 1: (1/E)[ln E - E_Z softplus(ln c - 2mL beta - 2 Z m beta sqrt(L))]
        m, L, beta, sigma2 = 2.0, 3, 0.5, 1.0
        E = 2 * m * L * sigma2
        log_c = math.log(E - 1) + L * math.log1p(2 * m * beta)
        z, w = np.polynomial.hermite_e.hermegauss(80)
        t1 = np.dot(w, np.logaddexp(0, log_c - 2 * m * L * beta - 2 * z * m * beta * math.sqrt(L)))
        t1 /= math.sqrt(2 * math.pi)
        ref = (math.log(E) - t1) / E
        assert lower_bound_lemma3(1, m, L, beta, sigma2).value == pytest.approx(ref, abs=1e-9)

    def test_huge_k_via_log(self):
        v = lower_bound_lemma3(1, 50, 1000, 1.0, 1.0, log_k=1e5).value
        assert v == pytest.approx(0.8501975, abs=1e-6)
        s = lower_bound_lemma3_simplified(1, 50, 1000, 1.0, 1.0, log_k=1e5).value
        assert s == pytest.approx(0.80121, abs=1e-5)
        assert s <= v

    def test_requires_energy_above_one(self):
        with pytest.raises(PreconditionError):
            lower_bound_lemma3(4, 0.25, 1, 1.0, 1.0)

    def test_best_dominates_grid(self):
        rep, m = best_lemma3_bound(8, 4, 0.5, 0.5, 0.3)
        for mm in (0.5, 1.0, 2.0, 5.0, 20.0):
            assert rep.value >= lower_bound_lemma3(8, mm, 4, 0.5, 0.5, 0.3).value - 1e-7
        assert m > 1.0 / (2 * 4 * 0.5)


class TestAsymptotics:
    def test_frozen_values(self):
        # 1 - ln 9/8 - (2/9)*2/e - 1/sqrt(200 pi)
        ref = 1 - math.log(9) / 8 - (2 / 9) * 2 / math.e - 1 / math.sqrt(200 * math.pi)
        assert asymptotic_onoff_bound(4, 100, 1.0) == pytest.approx(ref, abs=1e-14)
        assert asymptotic_onoff_bound(4, 100, 1.0) == pytest.approx(0.52, abs=5e-3)

    def test_monotone_toward_ceiling(self):
        v = [asymptotic_onoff_bound(m, L, 1.0) for m, L in ((4, 100), (10, 400), (50, 1000))]
        assert v[0] < v[1] < v[2] < 1.0
        assert v[2] > 0.85

    def test_sigma2_scaling(self):
        assert asymptotic_onoff_bound(10, 400, 0.25) == pytest.approx(
            asymptotic_onoff_bound(10, 400, 1.0) / 0.25, rel=1e-14)

    def test_vanishing_bound(self):
        v = fourth_moment_vanishing_bound(1.0, [4, 8, 16, 10**6], 1.0)
        assert v[0] == 0.125
        assert v[1] == v[0] / 2 and v[2] == v[1] / 2
        assert v[3] < 1e-6

    def test_vanishing_bound_matches_cor1(self):
        c = lift_radial(amqam(3), 4)
        params = ChannelParams(1, 5, 1.0, 0.7)
        assert fourth_moment_vanishing_bound(c, [5], 0.7)[0] == pytest.approx(
            upper_bound_cor1(c, params).value, rel=1e-14)
