import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from fadecap import capacity as cap
from fadecap.capacity import (
    QUICK_SETTINGS,
    amqam_selection_profile,
    capacity_r,
    capacity_tr,
    capacity_tr_details,
    coherent_cdma_capacity,
    csi_rule,
    estimated_capacity,
    mi_fixed_family,
    optimize_capacity,
    spacetime_capacity,
)
from fadecap.constellations import RadialDistribution
from fadecap.errors import ConfigurationError, DomainError
from fadecap.exact_mi import FAST_BUDGET, MiContext, mi_radial

ANCHOR = math.e * special.exp1(1.0)


class TestCsiRule:
    @pytest.mark.parametrize("n", [6, 8, 16])
    @pytest.mark.parametrize("L", [1, 3, 10])
    def test_laguerre_moments_exact(self, n, L):
        u, w = csi_rule(0.4, n, L=L)
        assert w.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.dot(w, u) == pytest.approx(0.6, rel=1e-10)
        # second moment of (1-beta) t / L with t ~ Gamma(L)
        assert np.dot(w, u * u) == pytest.approx(0.36 * (L + 1) / L, rel=1e-8)

    @pytest.mark.parametrize("n", [24, 32])
    @pytest.mark.parametrize("L", [1, 3, 10])
    def test_split_rule_moments_close(self, n, L):
        # the split rule trades polynomial exactness for accuracy near t = 0
        u, w = csi_rule(0.4, n, L=L)
        assert w.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.dot(w, u) == pytest.approx(0.6, rel=1e-4)
        assert np.dot(w, u * u) == pytest.approx(0.36 * (L + 1) / L, rel=5e-4)

    @pytest.mark.parametrize("sigma2", [1.0, 0.1, 0.01])
    def test_resolves_coherent_integrand(self, sigma2):
        u, w = csi_rule(0.0, 32)
        ref = math.exp(sigma2) * special.exp1(sigma2)
        assert np.dot(w, np.log1p(u / sigma2)) == pytest.approx(ref, abs=2e-6)

    def test_multipath_law(self):
        u, w = csi_rule(0.0, 32, L=2)
        g = stats.gamma(2, scale=0.5)
        ref = integrate.quad(lambda t: np.log1p(t / 0.01) * g.pdf(t), 0, 40, points=[0.01], limit=400)[0]
        assert np.dot(w, np.log1p(u / 0.01)) == pytest.approx(ref, abs=1e-6)

    def test_noncoherent_nodes_vanish(self):
        u, _ = csi_rule(1.0, 32)
        assert np.all(u == 0)

    def test_domain(self):
        with pytest.raises(DomainError):
            csi_rule(1.2)


class TestOptimizer:
    def test_two_point_grid_oracle(self):
        ctx = MiContext(1, 1.0, 1.0)
        grid = max(mi_radial(RadialDistribution([0.0, 1 / math.sqrt(p)], [1 - p, p]), ctx)
                   for p in np.linspace(0.005, 0.995, 200))
        res = optimize_capacity(0.0, 1.0, 1.0)
        assert res.value == pytest.approx(grid, abs=2e-3)
        assert res.value >= grid - 1e-9
        assert len(res.argmax) == 2 and res.argmax.includes_zero
        assert res.argmax.energy == pytest.approx(1.0, abs=1e-12)

    def test_coherent_approaches_gaussian_from_below(self):
        res = optimize_capacity(1.0, 0.0, 1.0)
        assert res.value == pytest.approx(math.log(2.0), abs=5e-3)
        assert res.value <= math.log(2.0) + 1e-6

    def test_more_points_never_hurt(self):
        kw = dict(settings=QUICK_SETTINGS, budget=FAST_BUDGET, seed=3)
        v2 = optimize_capacity(0.5, 0.5, 0.3, 2, **kw).value
        v3 = optimize_capacity(0.5, 0.5, 0.3, 3, **kw).value
        assert v3 >= v2 - 1e-9

    def test_result_serializes(self):
        d = optimize_capacity(0.0, 1.0, 10.0, settings=QUICK_SETTINGS).to_dict()
        assert {"value", "argmax", "multipliers", "residual", "trace"} <= set(d)

    def test_reproducible(self):
        kw = dict(settings=QUICK_SETTINGS, budget=FAST_BUDGET, seed=5)
        a = optimize_capacity(0.3, 0.7, 0.5, **kw)
        b = optimize_capacity(0.3, 0.7, 0.5, **kw)
        assert a.value == b.value
        np.testing.assert_array_equal(a.argmax.radii, b.argmax.radii)


class TestCsiAveragedCapacity:
    def test_noncoherent_is_single_optimization(self):
        assert capacity_tr(1.0, 1.0) == optimize_capacity(0.0, 1.0, 1.0).value

    def test_r_equals_tr_at_beta_one(self):
        assert capacity_r(1.0, 1.0).value == pytest.approx(capacity_tr(1.0, 1.0), abs=1e-6)

    def test_coherent_closed_form(self):
        assert capacity_tr(0.0, 1.0) == pytest.approx(ANCHOR, abs=1e-12)
        res = capacity_r(0.0, 1.0)
        assert res.value == pytest.approx(ANCHOR, abs=1e-12)
        assert len(res.argmax) == 64

    def test_coherent_by_optimization(self):
        v = capacity_tr(0.0, 1.0, 12, settings=QUICK_SETTINGS, budget=FAST_BUDGET,
                        coherent_closed_form=False)
        assert v == pytest.approx(ANCHOR, abs=5e-3)
        assert v <= ANCHOR + 1e-4

    def test_feedback_ordering_and_trend(self):
        kw = dict(settings=QUICK_SETTINGS, budget=FAST_BUDGET)
        tr = capacity_tr(0.5, 1.0, 8, **kw)
        r = capacity_r(0.5, 1.0, 4, 8, **kw).value
        assert tr >= r - 1e-4
        assert capacity_tr(1.0, 1.0) <= tr <= capacity_tr(0.0, 1.0) + 1e-4

    def test_details_weights(self):
        value, alphas, weights, results = capacity_tr_details(
            0.7, 1.0, 6, settings=QUICK_SETTINGS, budget=FAST_BUDGET)
        assert len(results) == len(alphas) == len(weights)
        assert value == pytest.approx(np.dot(weights, [r.value for r in results]))


class TestFamilies:
    @pytest.mark.parametrize("beta,sigma2", [(0.0, 1.0), (0.5, 0.1), (1.0, 1.0), (0.3, 10 ** -1.5)])
    def test_amqam_one_is_psk(self, beta, sigma2):
        a = mi_fixed_family("amqam", beta, sigma2, m_max=1, outer_nodes=8, budget=FAST_BUDGET)
        p = mi_fixed_family("psk", beta, sigma2, outer_nodes=8, budget=FAST_BUDGET)
        assert a == pytest.approx(p, abs=1e-14)

    def test_amqam_beats_psk_noncoherent(self):
        assert mi_fixed_family("amqam", 1.0, 1.0) > mi_fixed_family("psk", 1.0, 1.0) + 0.01

    def test_amqam_slightly_below_uniform(self):
        s2 = 10 ** -1.5
        a = mi_fixed_family("amqam", 0.5, s2, outer_nodes=12)
        u = mi_fixed_family("uniform", 0.5, s2, outer_nodes=12)
        assert a <= u + 2e-3

    def test_selection_all_max(self):
        prof = amqam_selection_profile(0.5, 0.1, 10, outer_nodes=12, budget=FAST_BUDGET)
        assert prof.always_max

    def test_selection_trivial(self):
        prof = amqam_selection_profile(0.5, 1.0, 1, outer_nodes=8)
        assert np.all(prof.selected == 1)

    def test_gaussian_dominates_at_beta_zero(self):
        vals = {f: mi_fixed_family(f, 0.0, 0.1) for f in ("gaussian", "psk", "uniform", "amqam")}
        for f in ("psk", "uniform", "amqam"):
            assert vals["gaussian"] >= vals[f] - 1e-4
        assert vals["gaussian"] == pytest.approx(math.exp(0.1) * special.exp1(0.1), abs=5e-3)

    def test_psk_noncoherent_is_zero(self):
        assert mi_fixed_family("psk", 1.0, 1.0) == 0.0

    def test_unknown_family(self):
        with pytest.raises(ConfigurationError):
            mi_fixed_family("hexagonal", 0.5, 1.0)


def cdma_reference(K, L, sigma2):
    g = stats.chi2(2 * L)
    f = lambda u: np.log1p(u / (2 * K * L * sigma2)) * g.pdf(u)
    return K * (integrate.quad(f, 0, 2 * L, limit=400)[0] + integrate.quad(f, 2 * L, np.inf, limit=400)[0])


def spacetime_mc(K, L, sigma2, n, seed):
    rng = np.random.default_rng(seed)
    H = (rng.standard_normal((n, L, K)) + 1j * rng.standard_normal((n, L, K))) / math.sqrt(2)
    G = np.eye(L) + H @ np.conj(np.transpose(H, (0, 2, 1))) / (K * sigma2)
    vals = np.linalg.slogdet(G)[1]
    return vals.mean(), vals.std() / math.sqrt(n)


class TestCoherent:
    def test_anchor(self):
        assert coherent_cdma_capacity(1, 1, 1.0) == pytest.approx(ANCHOR, abs=1e-9)
        assert spacetime_capacity(1, 1, 1.0, normalized=True) == pytest.approx(ANCHOR, abs=1e-9)

    @pytest.mark.parametrize("K,L,sigma2", [(1, 1, 0.3), (3, 2, 1.0), (10, 10, 0.01), (7, 1, 0.1)])
    def test_cdma_against_scipy(self, K, L, sigma2):
        assert coherent_cdma_capacity(K, L, sigma2) == pytest.approx(cdma_reference(K, L, sigma2), abs=1e-8)

    @pytest.mark.parametrize("L", [1, 10])
    def test_cdma_increasing_in_k(self, L):
        v = [coherent_cdma_capacity(K, L, 0.5) for K in range(1, 11)]
        assert np.all(np.diff(v) > 0)

    def test_cdma_ceiling(self):
        assert all(coherent_cdma_capacity(K, 3, 1.0) <= 1.0 for K in (1, 2, 8, 64))

    @pytest.mark.parametrize("K,L", [(1, 1), (2, 3), (4, 4), (1, 7), (9, 2)])
    def test_eigen_weight_mass(self, K, L):
        mass = integrate.quad(lambda u: cap._eigen_weight(K, L, u), 0, np.inf, limit=400)[0]
        assert mass == pytest.approx(min(K, L), abs=1e-8)

    @pytest.mark.parametrize("K,L", [(2, 3), (3, 2), (2, 2)])
    def test_spacetime_against_monte_carlo(self, K, L):
        mean, se = spacetime_mc(K, L, 0.5, 200_000, K * 10 + L)
        assert abs(spacetime_capacity(K, L, 0.5) - mean) <= 4 * se

    def test_normalized_symmetry(self):
        for n in range(1, 11):
            assert spacetime_capacity(1, n, 0.3, True) == pytest.approx(
                spacetime_capacity(n, 1, 0.3, True), abs=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            coherent_cdma_capacity(0, 1, 1.0)
        with pytest.raises(DomainError):
            spacetime_capacity(1, 1, -1.0)


class TestEstimatedCapacity:
    def test_frozen_single_code(self):
        # L = 10, 10 dB, beta = 0: AMQAM bound with M = 10 at every node
        v, info = estimated_capacity(1, 10, 0.0, 0.1, details=True)
        assert v == pytest.approx(1.5272425822, abs=1e-8)
        assert set(info["amqam_M"]) == {10}

    @pytest.mark.parametrize("K", [1, 2, 5])
    def test_below_coherent_capacity(self, K):
        assert estimated_capacity(K, 10, 0.0, 0.1, outer_nodes=4) <= coherent_cdma_capacity(K, 10, 0.1)

    def test_onoff_dominates_for_many_codes(self):
        _, info = estimated_capacity(10, 10, 1.0, 0.1, details=True)
        assert info["onoff"][0] > info["amqam"][0]

    def test_nonnegative(self):
        assert estimated_capacity(3, 10, 1.0, 10.0, outer_nodes=4) >= 0.0
