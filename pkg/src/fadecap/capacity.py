"""Capacity of the K=1 channel over small radial distributions, reference families,
and the closed-form coherent CDMA and space-time capacities.

The optimizer searches radial laws with a mass point pinned at zero and at
most `max_points` points.  Both constraints (total probability and unit
energy) are removed by the parameterization:

    p = softmax(0, t_1, ..., t_{n-1})
    d_0 = 0, d_1 = 1, d_{k+1} = d_k + softplus(s_k)
    r = d / sqrt(sum p d^2)

so every trial point is feasible.  Search is a seeded multi-start simplex
method run on a cheap quadrature budget, followed by polishing of the best
candidates on the full budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize, special
from scipy.stats import qmc

from . import kernels
from .bounds import best_lemma3_bound, lower_bound_cor2_stats
from .channel import ChannelParams
from .constellations import (
    RadialDistribution, amqam, amqam_lift, gaussian_radial, psk, uniform_disk,
)
from .errors import ConfigurationError, DomainError, OptimizationError
from .exact_mi import (
    FAST_BUDGET, MiContext, QuadratureBudget, ResidualReport, _legendre, _y_rule,
    default_r_grid, fit_multipliers, information_density, mi_radial,
)
from .numerics import gauss_quadrature, integrate_semiinfinite, laguerre

__all__ = [
    "OptimizerSettings",
    "QUICK_SETTINGS",
    "CapacityResult",
    "AmqamProfile",
    "csi_rule",
    "optimize_capacity",
    "capacity_tr",
    "capacity_tr_details",
    "capacity_r",
    "mi_fixed_family",
    "amqam_selection_profile",
    "coherent_cdma_capacity",
    "spacetime_capacity",
    "estimated_capacity",
    "FAMILIES",
]

FAMILIES = ("psk", "uniform", "amqam", "gaussian")
OUTER_WEIGHT_FLOOR = 1e-15
CSI_SPLIT = 2.0
SPLIT_MIN_NODES = 24
MERGE_RADIUS = 1e-4
DROP_MASS = 1e-6
RESIDUAL_TOL = 1e-3


@dataclass(frozen=True)
class OptimizerSettings:
    """Knobs of the multi-start search.

    Coarse runs use `coarse_budget` and stop at `coarse_maxfev` evaluations;
    the best `n_polish` of them are polished on the caller's full budget
    until the simplex diameter is below `xatol` and the value spread below
    `fatol`.  Among support sizes 2..max_points the smallest one within
    `size_tol` of the best value is reported.
    """

    n_starts: int = 20
    coarse_budget: QuadratureBudget = FAST_BUDGET
    coarse_maxfev: int = 400
    n_polish: int = 3
    polish_maxfev: int = 2000
    xatol: float = 1e-6
    fatol: float = 1e-7
    size_tol: float = 1e-6
    coarse_outer_nodes: int = 8

    def __post_init__(self):
        if self.n_starts < 1 or self.n_polish < 1:
            raise ConfigurationError("need at least one start and one polish run")


QUICK_SETTINGS = OptimizerSettings(n_starts=6, coarse_maxfev=200, n_polish=1,
                                   polish_maxfev=600, xatol=1e-5, fatol=1e-6,
                                   coarse_outer_nodes=6)


@dataclass(frozen=True)
class CapacityResult:
    value: float
    argmax: RadialDistribution
    multipliers: tuple
    residual_report: ResidualReport
    trace: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "value": self.value,
            "argmax": self.argmax.to_dict(),
            "multipliers": list(self.multipliers),
            "residual": self.residual_report.to_dict(),
            "trace": dict(self.trace),
        }


# ---------------------------------------------------------------------------
# Outer average over the CSI estimate
# ---------------------------------------------------------------------------

def csi_rule(beta, outer_nodes=32, *, L=1, prune=True):
    """Nodes u_k of ||alpha_hat||^2 and weights w_k for its law ((1-beta)/(2L)) chi2_{2L}.

    Write ||alpha_hat||^2 = (1 - beta) t / L with t ~ Gamma(L).  Integrands
    such as ln(1 + u/sigma2) bend at u ~ sigma2, which plain Gauss-Laguerre
    cannot resolve at high SNR when L is small.  With at least
    SPLIT_MIN_NODES nodes the rule is split at t = L * CSI_SPLIT:
    Gauss-Legendre in ln t below (down to the 1e-12 quantile) and
    Gauss-Laguerre above.  Coarser rules use generalized Gauss-Laguerre,
    which is more accurate at low node counts.  Nodes with normalized
    weight below 1e-15 are dropped and the rest renormalized.
    """
    if not 0.0 <= beta <= 1.0:
        raise DomainError("beta must lie in [0, 1]")
    n = int(outer_nodes)
    if n < 2 or int(L) != L or L < 1:
        raise DomainError("need at least two outer nodes and a positive integer L")
    if n >= SPLIT_MIN_NODES:
        t, w = _split_gamma_rule(n, int(L))
    else:
        rule = gauss_quadrature("gauss-laguerre", n, alpha=float(L - 1))
        t, w = rule.nodes, rule.weights / rule.weights.sum()
    if prune:
        keep = w >= OUTER_WEIGHT_FLOOR
        t, w = t[keep], w[keep]
    return (1.0 - beta) * t / L, w / w.sum()


@lru_cache(maxsize=64)
def _split_gamma_rule(n, L):
    """(t, w) for E f(t), t ~ Gamma(shape L, rate 1), normalized."""
    n_low = max(1, round(0.625 * n))
    n_high = n - n_low
    tau = CSI_SPLIT * L
    lo = math.log(float(special.gammaincinv(L, 1e-12)))
    hi = math.log(tau)
    rule = gauss_quadrature("gauss-legendre", n_low)
    x, wx = rule.nodes, rule.weights
    z = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    t_low = np.exp(z)
    # Gamma(L) density times the Jacobian dt = t dz, in logs
    log_w = (np.log(wx * 0.5 * (hi - lo)) + L * z - t_low - special.gammaln(L))
    if n_high:
        rule = gauss_quadrature("gauss-laguerre", n_high)
        s, ws = rule.nodes, rule.weights
        t_high = tau + s
        log_w_high = (np.log(ws) + (L - 1) * np.log(t_high) - tau - special.gammaln(L))
        t_all = np.concatenate([t_low, t_high])
        log_w = np.concatenate([log_w, log_w_high])
    else:
        t_all = t_low
    w = np.exp(log_w)
    return t_all, w / w.sum()


# ---------------------------------------------------------------------------
# Objective evaluation straight through the kernel
# ---------------------------------------------------------------------------

class _Evaluator:
    """Mutual information of (radii, log p), averaged over CSI nodes."""

    def __init__(self, L, beta, sigma2, alphas, weights, budget):
        self.L, self.beta, self.sigma2 = int(L), float(beta), float(sigma2)
        self.alphas = np.asarray(alphas, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.budget = budget
        self.g, self.w = _legendre(budget.n_x)
        self.yn, self.yw = _y_rule(self.L, budget.n_y, budget.half_width)
        self.n_eval = 0

    def density(self, r_eval, radii, logp):
        out = np.zeros(len(r_eval))
        for u, wk in zip(self.alphas, self.weights):
            out += wk * kernels.mixture_information(
                r_eval, radii, logp, self.L, self.beta, self.sigma2, float(u),
                self.g, self.w, float(self.budget.half_width), self.yn, self.yw)
        return out

    def __call__(self, radii, logp):
        self.n_eval += 1
        return float(np.dot(np.exp(logp), self.density(radii, radii, logp)))


def _softplus(x):
    return np.logaddexp(0.0, x)


def _inv_softplus(y):
    y = np.maximum(y, 1e-8)
    return np.where(y > 30.0, y, np.log(np.expm1(np.minimum(y, 30.0))))


def _decode(theta, n):
    theta = np.asarray(theta, dtype=float)
    logits = np.r_[0.0, theta[:n - 1]]
    logp = logits - special.logsumexp(logits)
    d = np.zeros(n)
    d[1] = 1.0
    if n > 2:
        d[2:] = 1.0 + np.cumsum(_softplus(theta[n - 1:]))
    scale = math.sqrt(float(np.dot(np.exp(logp), d * d)))
    return np.ascontiguousarray(d / scale), np.ascontiguousarray(logp)


def _encode(radii, probs, n):
    """Parameter vector of size 2n-3 reproducing a distribution with a zero point.

    Missing points are added with small mass beyond the largest radius;
    a missing zero gets small mass too.  Returns None if the law has more
    than n points.
    """
    r = list(np.asarray(radii, dtype=float))
    p = list(np.asarray(probs, dtype=float))
    if r[0] > 0.0:
        r.insert(0, 0.0)
        p.insert(0, 1e-3)
    if len(r) > n:
        return None
    while len(r) < n:
        r.append(r[-1] * 1.3 + 0.1)
        p.append(1e-3)
    p = np.asarray(p) / np.sum(p)
    r = np.asarray(r)
    logits = np.log(p[1:]) - math.log(p[0])
    incr = np.diff(r[1:]) / r[1]
    return np.r_[logits, _inv_softplus(incr)]


def _nelder_mead(fun, x0, step, maxfev, xatol, fatol):
    x0 = np.asarray(x0, dtype=float)
    sim = np.vstack([x0] + [x0 + step * e for e in np.eye(len(x0))])
    res = optimize.minimize(fun, x0, method="Nelder-Mead",
                            options={"initial_simplex": sim, "maxfev": maxfev,
                                     "xatol": xatol, "fatol": fatol, "adaptive": len(x0) > 2})
    return res


def _lhs_starts(n, n_starts, seed):
    dim = 2 * n - 3
    sampler = qmc.LatinHypercube(d=dim, seed=np.random.default_rng([int(seed), n]))
    unit = sampler.random(n_starts)
    # probability logits in [-3, 3]; radius increments in [0.05, 2] before rescaling
    lo = np.r_[np.full(n - 1, -3.0), np.full(n - 2, 0.05)]
    hi = np.r_[np.full(n - 1, 3.0), np.full(n - 2, 2.0)]
    pts = qmc.scale(unit, lo, hi) if dim else unit
    pts[:, n - 1:] = _inv_softplus(pts[:, n - 1:])
    return list(pts)


def _search(coarse_eval, fine_eval, max_points, settings, seed, warm):
    """Multi-start search over support sizes 2..max_points.

    Returns (per-size list of (value, radii, logp)), best value seen, counters.
    """
    per_size = []
    best_seen = -math.inf
    restarts = iterations = 0
    converged = False
    prev = None
    for n in range(2, max_points + 1):
        starts = _lhs_starts(n, settings.n_starts, seed)
        extra = []
        if prev is not None:
            extra.append(_encode(prev[1], np.exp(prev[2]), n))
        for dist in warm:
            extra.append(_encode(dist.radii, dist.probs, n))
        starts = [s for s in extra if s is not None] + starts

        def coarse(theta):
            radii, logp = _decode(theta, n)
            return -coarse_eval(radii, logp)

        runs = []
        for x0 in starts:
            res = _nelder_mead(coarse, x0, 0.5, settings.coarse_maxfev, 1e-3, 1e-5)
            restarts += 1
            iterations += res.nit
            runs.append((res.fun, tuple(res.x)))
        runs.sort()

        def fine(theta):
            radii, logp = _decode(theta, n)
            return -fine_eval(radii, logp)

        best = None
        for _, x in runs[:settings.n_polish]:
            res = _nelder_mead(fine, np.array(x), 0.05, settings.polish_maxfev,
                               settings.xatol, settings.fatol)
            iterations += res.nit
            # ties resolved by value, then lexicographic parameters
            key = (res.fun, tuple(res.x))
            if best is None or key < best[0]:
                best = (key, res)
        res = best[1]
        converged = converged or bool(res.success)
        radii, logp = _decode(res.x, n)
        value = -float(res.fun)
        best_seen = max(best_seen, value)
        per_size.append((value, radii, logp))
        prev = (value, radii, logp)
    return per_size, best_seen, restarts, iterations, converged


def _clean(radii, logp):
    """Merge close radii, drop negligible masses, restore unit energy."""
    dist = RadialDistribution.from_points(radii, np.exp(logp), merge_tol=MERGE_RADIUS,
                                          drop_below=DROP_MASS, normalize=True)
    r = dist.radii / math.sqrt(dist.energy)
    return RadialDistribution(r, dist.probs)


def _residual(dist, evaluator, L, tol=RESIDUAL_TOL, r_grid=None):
    r_grid = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    logp = np.log(dist.probs)
    dens_s = evaluator.density(dist.radii, dist.radii, logp)
    lam1, lam2 = fit_multipliers(dist, None, density=dens_s)
    g = lam1 + lam2 * r_grid**2 - evaluator.density(r_grid, dist.radii, logp)
    gs = lam1 + lam2 * dist.radii**2 - dens_s
    report = ResidualReport(r_grid, g, gs, lam1, lam2, float(tol), L == 1)
    return (lam1, lam2), report, float(np.dot(dist.probs, dens_s))


def _optimize(L, beta, sigma2, alphas, weights, coarse_alphas, coarse_weights,
              max_points, settings, budget, seed, warm):
    if int(max_points) != max_points or max_points < 2:
        raise DomainError("max_points must be an integer >= 2")
    fine_eval = _Evaluator(L, beta, sigma2, alphas, weights, budget)
    coarse_eval = _Evaluator(L, beta, sigma2, coarse_alphas, coarse_weights, settings.coarse_budget)
    try:
        per_size, best_seen, restarts, iterations, converged = _search(
            coarse_eval, fine_eval, int(max_points), settings, seed, list(warm or ()))
    except (ArithmeticError, ValueError) as exc:
        raise OptimizationError(f"capacity search failed: {exc}") from exc
    if not per_size or not math.isfinite(best_seen):
        raise OptimizationError("no restart produced a finite value")
    chosen = next(i for i, (v, _, _) in enumerate(per_size) if v >= best_seen - settings.size_tol)
    _, radii, logp = per_size[chosen]
    dist = _clean(radii, logp)
    multipliers, report, value = _residual(dist, fine_eval, L)
    trace = {
        "restarts": restarts, "iterations": iterations, "converged": converged,
        "evaluations": fine_eval.n_eval + coarse_eval.n_eval,
        "best_seen": best_seen, "size_values": [v for v, _, _ in per_size],
        "support_size": len(dist), "seed": int(seed),
    }
    return CapacityResult(value, dist, multipliers, report, trace)


def optimize_capacity(alpha_norm2, beta, sigma2, max_points=4, *, L=1, settings=None,
                      budget=None, seed=0, warm=()):
    """C(||alpha_hat||^2, beta): best radial law with a zero point and <= max_points points."""
    settings = settings or OptimizerSettings()
    budget = budget or QuadratureBudget()
    MiContext(L, beta, sigma2, alpha_norm2)  # validates
    a = np.array([float(alpha_norm2)])
    w = np.ones(1)
    return _optimize(L, beta, sigma2, a, w, a, w, max_points, settings, budget, seed, warm)


def _coherent_average(sigma2, beta=0.0):
    """E ln(1 + ||alpha_hat||^2/sigma2) with ||alpha_hat||^2 ~ (1-beta) Exp(1)."""
    s = sigma2 / (1.0 - beta)
    return math.exp(s) * float(special.exp1(s))


def capacity_tr_details(beta, sigma2, outer_nodes=32, *, L=1, max_points=4, settings=None,
                        budget=None, seed=0, warm=()):
    """Per-node results behind capacity_tr: (value, alphas, weights, [CapacityResult])."""
    alphas, weights = csi_rule(beta, outer_nodes, L=L)
    if beta == 1.0:
        res = optimize_capacity(0.0, 1.0, sigma2, max_points, L=L, settings=settings,
                                budget=budget, seed=seed, warm=warm)
        return res.value, alphas[:1], np.ones(1), [res]
    results = []
    carry = list(warm)
    for k, u in enumerate(alphas):
        res = optimize_capacity(u, beta, sigma2, max_points, L=L, settings=settings,
                                budget=budget, seed=seed + 7919 * k, warm=carry)
        results.append(res)
        # the previous node's optimum seeds the next one
        carry = list(warm) + [res.argmax]
    value = float(np.dot(weights, [r.value for r in results]))
    return value, alphas, weights, results


def capacity_tr(beta, sigma2, outer_nodes=32, *, L=1, max_points=4, settings=None,
                budget=None, seed=0, warm=(), coherent_closed_form=True):
    """C_TR(beta): the CSI-averaged capacity when the transmitter knows alpha_hat.

    At beta = 0 the Gaussian input is optimal for every alpha_hat, and with
    `coherent_closed_form` the exact value e^{s} E1(s), s = sigma2, is returned.
    At beta = 1 the integrand is constant and one optimization suffices.
    """
    if beta == 0.0 and coherent_closed_form and L == 1:
        return _coherent_average(sigma2)
    return capacity_tr_details(beta, sigma2, outer_nodes, L=L, max_points=max_points,
                               settings=settings, budget=budget, seed=seed, warm=warm)[0]


def capacity_r(beta, sigma2, max_points=4, outer_nodes=32, *, L=1, settings=None,
               budget=None, seed=0, warm=(), coherent_closed_form=True):
    """C_R(beta): one radial law maximizing the CSI-averaged mutual information.

    At beta = 0 with `coherent_closed_form` the value is the exact Gaussian
    average and the reported law is a 64-shell Gaussian quantization.
    """
    settings = settings or OptimizerSettings()
    budget = budget or QuadratureBudget()
    MiContext(L, beta, sigma2)
    if beta == 1.0:
        return optimize_capacity(0.0, 1.0, sigma2, max_points, L=L, settings=settings,
                                 budget=budget, seed=seed, warm=warm)
    alphas, weights = csi_rule(beta, outer_nodes, L=L)
    if beta == 0.0 and coherent_closed_form and L == 1:
        dist = gaussian_radial(64)
        ev = _Evaluator(L, beta, sigma2, alphas, weights, budget)
        multipliers, report, _ = _residual(dist, ev, L)
        trace = {"closed_form": True, "restarts": 0, "iterations": 0, "converged": True}
        return CapacityResult(_coherent_average(sigma2), dist, multipliers, report, trace)
    ca, cw = csi_rule(beta, settings.coarse_outer_nodes, L=L)
    return _optimize(L, beta, sigma2, alphas, weights, ca, cw, max_points, settings,
                     budget, seed, warm)


# ---------------------------------------------------------------------------
# Reference families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AmqamProfile:
    alphas: np.ndarray
    weights: np.ndarray
    values: np.ndarray  # (nodes, M_max) mutual information for M = 1..M_max
    selected: np.ndarray

    @property
    def always_max(self):
        """True when every node picks the largest constellation."""
        return bool(np.all(self.selected == self.values.shape[1]))

    @property
    def average(self):
        return float(np.dot(self.weights, self.values[np.arange(len(self.selected)), self.selected - 1]))


def _family_dist(family, n_points):
    if family == "psk":
        return psk()
    if family == "uniform":
        return uniform_disk(n_points)
    if family == "gaussian":
        return gaussian_radial(n_points)
    raise ConfigurationError(f"unknown family {family!r}; expected one of {FAMILIES}")


def amqam_selection_profile(beta, sigma2, M_max, *, L=1, outer_nodes=32, budget=None):
    """Mutual information of amqam(M), M = 1..M_max, at each CSI node and the argmax M.

    Ties go to the smaller M.
    """
    if int(M_max) != M_max or M_max < 1:
        raise DomainError("M_max must be a positive integer")
    budget = budget or QuadratureBudget()
    alphas, weights = csi_rule(beta, outer_nodes, L=L)
    if beta == 1.0:
        alphas, weights = alphas[:1], np.ones(1)
    values = np.empty((len(alphas), int(M_max)))
    for k, u in enumerate(alphas):
        ctx = MiContext(L, beta, sigma2, float(u), budget)
        for M in range(1, int(M_max) + 1):
            values[k, M - 1] = mi_radial(amqam(M), ctx)
    top = values.max(axis=1, keepdims=True)
    selected = np.argmax(values >= top - 1e-12, axis=1) + 1
    return AmqamProfile(alphas, weights, values, selected)


def mi_fixed_family(family, beta, sigma2, *, L=1, m_max=10, n_points=64, outer_nodes=32,
                    budget=None):
    """CSI-averaged mutual information of a fixed input family.

    family is one of psk, uniform, gaussian (quantized with n_points shells)
    or amqam, which picks the best M <= m_max at each CSI node.
    """
    if family == "amqam":
        value = amqam_selection_profile(beta, sigma2, m_max, L=L, outer_nodes=outer_nodes,
                                        budget=budget).average
        return max(0.0, value)
    dist = _family_dist(family, n_points)
    budget = budget or QuadratureBudget()
    alphas, weights = csi_rule(beta, outer_nodes, L=L)
    if beta == 1.0:
        alphas, weights = alphas[:1], np.ones(1)
    ev = _Evaluator(L, beta, sigma2, alphas, weights, budget)
    # mutual information is nonnegative; clip rounding noise at zero
    return max(0.0, ev(dist.radii, np.log(dist.probs)))


# ---------------------------------------------------------------------------
# Coherent closed forms
# ---------------------------------------------------------------------------

def _check_kl(K, L, sigma2):
    for name, v in (("K", K), ("L", L)):
        if int(v) != v or v < 1:
            raise DomainError(f"{name} must be a positive integer")
    if not (sigma2 > 0 and math.isfinite(sigma2)):
        raise DomainError("sigma2 must be positive and finite")


def coherent_cdma_capacity(K, L, sigma2, tol=1e-10):
    """K * integral of ln(1 + u/(2 K L sigma2)) chi2_{2L}(u) du.

    With u = 2t the weight becomes the Gamma(L) density t^{L-1} e^{-t}/(L-1)!.
    """
    _check_kl(K, L, sigma2)
    c = 1.0 / (K * L * sigma2)
    lg = special.gammaln(L)

    def integrand(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            logw = special.xlogy(L - 1, t) - t - lg
        return np.log1p(c * t) * np.exp(logw)

    return K * integrate_semiinfinite(integrand, tol, mode=max(L - 1.0, 1.0), scale=math.sqrt(L))


def _eigen_weight(K, L, u):
    """Sum_{k<m} k!/(k+n-m)! [L_k^{n-m}(u)]^2 u^{n-m} e^{-u}: the unordered eigenvalue density times m."""
    m, n = min(K, L), max(K, L)
    a = n - m
    u = np.asarray(u, dtype=float)
    total = np.zeros_like(u)
    for k in range(m):
        lk = laguerre(k, a, u)
        total += np.exp(special.gammaln(k + 1) - special.gammaln(k + a + 1)) * lk * lk
    with np.errstate(divide="ignore", over="ignore"):
        return total * np.exp(special.xlogy(a, u) - u)


def spacetime_capacity(K, L, sigma2, normalized=False, tol=1e-10):
    """Coherent K-transmit, L-receive capacity; normalized divides the SNR by L."""
    _check_kl(K, L, sigma2)
    c = 1.0 / (K * sigma2 * (L if normalized else 1))
    m, n = min(K, L), max(K, L)

    def integrand(u):
        return np.log1p(c * np.asarray(u, dtype=float)) * _eigen_weight(K, L, u)

    return integrate_semiinfinite(integrand, tol, mode=max(n - m, 1.0), scale=math.sqrt(n))


# ---------------------------------------------------------------------------
# Bound-based estimate for K > 1
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _amqam_stats(M):
    """(entropy, minimum distance) of the equiprobable phase-lifted amqam(M)."""
    c = amqam_lift(M)
    return c.entropy(), c.min_distance


def _best_amqam_bound(K, L, beta, sigma2, u, m_max):
    params = ChannelParams.from_norm(K, L, beta, sigma2, u)
    best, best_m = -math.inf, 0
    for M in range(1, m_max + 1):
        H1, d1 = _amqam_stats(M)
        # K independent copies scaled by 1/sqrt(K): entropy adds, distance shrinks
        v = lower_bound_cor2_stats(K * H1, d1 / math.sqrt(K), params).value
        if v > best:
            best, best_m = v, M
    return best, best_m


def estimated_capacity(K, L, beta, sigma2, *, m_max=10, outer_nodes=8, details=False):
    """CSI average of max(0, best AMQAM estimation-error bound, best on-off bound).

    The AMQAM bound uses the K-fold product of the lifted amqam(M) for each
    M <= m_max; the on-off bound is maximized over m.
    """
    _check_kl(K, L, sigma2)
    alphas, weights = csi_rule(beta, outer_nodes, L=L)
    if beta == 1.0:
        alphas, weights = alphas[:1], np.ones(1)
    rows = []
    for u in alphas:
        amq, M = _best_amqam_bound(K, L, beta, sigma2, float(u), m_max)
        try:
            rep, m = best_lemma3_bound(K, L, beta, sigma2, float(u))
            onoff = rep.value
        except (ArithmeticError, ValueError):
            onoff, m = -math.inf, math.nan
        rows.append((max(0.0, amq, onoff), amq, M, onoff, m))
    value = float(np.dot(weights, [r[0] for r in rows]))
    if details:
        return value, {"alphas": alphas.tolist(), "weights": weights.tolist(),
                       "amqam": [r[1] for r in rows], "amqam_M": [r[2] for r in rows],
                       "onoff": [r[3] for r in rows], "onoff_m": [r[4] for r in rows]}
    return value
