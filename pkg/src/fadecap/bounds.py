"""Upper and lower bounds on the conditional mutual information I(x; y | alpha_hat).

Upper bounds come from the Gaussian maximum-entropy argument (matrix and
simplified forms, plus the fourth-moment form).  Lower bounds come from
the channel-estimation-error argument (discrete and continuous inputs)
and from the orthogonal on-off construction, whose expectations over the
CLT approximation of the log-likelihood ratios are evaluated in log form so
that K may be as large as e^{2mL}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize, special

from .channel import ChannelParams
from .constellations import Constellation
from .errors import DomainError, LinearAlgebraError, PreconditionError
from .numerics import integrate_real, softplus

__all__ = [
    "BoundReport",
    "UpperBoundPair",
    "upper_bound_lemma1",
    "upper_bound_cor1",
    "lower_bound_lemma2",
    "lower_bound_cor2",
    "lower_bound_cor2_stats",
    "gaussian_entropy",
    "lower_bound_lemma3",
    "lower_bound_lemma3_simplified",
    "best_lemma3_bound",
    "asymptotic_onoff_bound",
    "fourth_moment_vanishing_bound",
]

BOUND_KINDS = (
    "upper-L1-matrix", "upper-L1-simplified", "upper-C1",
    "lower-L2-discrete", "lower-L2-continuous", "lower-C2-discrete", "lower-C2-continuous",
    "lower-L3-integral", "lower-L3-simplified", "asymptotic-onoff",
)
MOMENT_TOL = 1e-9
LARGE_L = 10


@dataclass(frozen=True)
class BoundReport:
    value: float
    kind: str
    assumptions_met: dict = field(default_factory=dict)
    error_estimate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "error_estimate", float(self.error_estimate))
        if self.kind not in BOUND_KINDS:
            raise DomainError(f"unknown bound kind {self.kind!r}")
        if not math.isfinite(self.value):
            raise LinearAlgebraError(f"{self.kind} bound is not finite")

    def to_dict(self):
        return {
            "kind": self.kind,
            "value": float(self.value),
            "assumptions_met": {k: bool(v) for k, v in self.assumptions_met.items()},
            "error_estimate": float(self.error_estimate),
        }

    def to_json(self):
        return json.dumps(self.to_dict())


class UpperBoundPair(tuple):
    """(matrix, simplified) pair of upper-bound reports."""

    def __new__(cls, matrix, simplified):
        return super().__new__(cls, (matrix, simplified))

    @property
    def matrix(self):
        return self[0]

    @property
    def simplified(self):
        return self[1]


def _check_dims(c: Constellation, params: ChannelParams):
    if c.K != params.K:
        raise DomainError(f"constellation dimension {c.K} does not match K={params.K}")


def _info_matrix(c: Constellation, params: ChannelParams):
    """F = S kron Sigma_eps + Sigma_x kron alpha alpha* + sigma2 I."""
    a = params.alpha_hat
    F = (np.kron(c.second_moment, params.sigma_eps)
         + np.kron(c.covariance, np.outer(a, a.conj()))
         + params.sigma2 * np.eye(params.K * params.L))
    return 0.5 * (F + F.conj().T)


def _cho(F):
    try:
        return linalg.cho_factor(F, lower=True)
    except linalg.LinAlgError as exc:
        raise LinearAlgebraError("information matrix F is numerically singular") from exc


def _common_flags(c, params):
    return {
        "unit_energy": abs(c.energy - 1.0) <= MOMENT_TOL,
        "uniform_fading": params.uniform_fading,
    }


def upper_bound_lemma1(c: Constellation, params: ChannelParams):
    """Matrix-form and simplified-form upper bounds.

    The simplified form uses E{E_x} = 1; the flag `unit_energy` records
    whether that holds for `c`.
    """
    _check_dims(c, params)
    K, L, s2 = params.K, params.L, params.sigma2
    d2 = params.error_variances
    cf = _cho(_info_matrix(c, params))
    logdet_F = 2.0 * float(np.sum(np.log(np.abs(np.diag(cf[0])))))
    e = c.symbol_energies
    p = c.probabilities
    mean_logdet = float(p @ np.sum(np.log(e[:, None] * d2[None, :] + s2), axis=1))
    matrix = logdet_F - mean_logdet - (K - 1) * L * math.log(s2)

    snr_a = float(np.sum(np.abs(params.alpha_hat) ** 2 / (d2 + K * s2)))
    simplified = (K * float(np.sum(np.log1p(d2 / (K * s2))))
                  + K * math.log1p(snr_a)
                  - float(p @ np.sum(np.log1p(e[:, None] * d2[None, :] / s2), axis=1)))
    flags = _common_flags(c, params)
    return UpperBoundPair(BoundReport(matrix, "upper-L1-matrix", flags),
                        BoundReport(simplified, "upper-L1-simplified", flags))


def upper_bound_cor1(c, params: ChannelParams):
    """K ln(1 + sum |a_i|^2/(d_i^2 + K s2)) + E{E_x^2}/2 * sum d_i^4 / s2^2.

    `c` may be any object with `fourth_moment` and `energy` attributes
    (a Constellation or a RadialDistribution with K = 1).
    """
    K, s2 = params.K, params.sigma2
    d2 = params.error_variances
    snr_a = float(np.sum(np.abs(params.alpha_hat) ** 2 / (d2 + K * s2)))
    value = K * math.log1p(snr_a) + 0.5 * c.fourth_moment * float(np.sum(d2**2)) / s2**2
    flags = {"unit_energy": abs(c.energy - 1.0) <= MOMENT_TOL,
             "uniform_fading": params.uniform_fading}
    return BoundReport(value, "upper-C1", flags)


def gaussian_entropy(K):
    """Differential entropy of a unit-energy proper complex Gaussian in K dimensions."""
    return K * math.log(math.pi * math.e / K)


def _residual_covariance(c: Constellation, params: ChannelParams):
    """Sigma_x - Sigma_x A* F^{-1} A Sigma_x with A = I_K kron alpha_hat."""
    A = np.kron(np.eye(params.K), params.alpha_hat[:, None])
    cf = _cho(_info_matrix(c, params))
    S = c.covariance
    AS = A @ S
    M = S - AS.conj().T @ linalg.cho_solve(cf, AS)
    return 0.5 * (M + M.conj().T)


def _logdet_pd(M, what):
    sign, logdet = np.linalg.slogdet(M)
    if sign.real <= 0 or not np.isfinite(logdet):
        raise LinearAlgebraError(f"{what} is not positive definite")
    return float(logdet)


def lower_bound_lemma2(c: Constellation, params: ChannelParams, variant="discrete", *,
                       entropy=None, d=None):
    """Estimation-error lower bound.

    discrete:   H + ln(pi^K d^2K / (4^K K!)) - ln[(pi e)^K |d^2/(4(K+1)) I + M|]
    continuous: h - ln[(pi e)^K |M|]
    with M = Sigma_x - Sigma_x A* F^{-1} A Sigma_x.  The discrete entropy
    defaults to that of `c`; `d` defaults to its minimum distance.  The
    continuous variant needs the differential entropy `entropy`.
    """
    _check_dims(c, params)
    K = params.K
    M = _residual_covariance(c, params)
    flags = _common_flags(c, params)
    if variant == "discrete":
        d = c.min_distance if d is None else float(d)
        if not (d > 0 and math.isfinite(d)):
            raise PreconditionError("discrete variant needs a positive finite minimum distance")
        if d > c.min_distance * (1 + 1e-12):
            raise PreconditionError("d exceeds the minimum distance of the constellation")
        H = c.entropy() if entropy is None else float(entropy)
        value = (H + K * math.log(math.pi) + 2 * K * math.log(d) - K * math.log(4.0)
                 - special.gammaln(K + 1)
                 - K * math.log(math.pi * math.e)
                 - _logdet_pd(d * d / (4.0 * (K + 1)) * np.eye(K) + M, "regularized residual covariance"))
        return BoundReport(value, "lower-L2-discrete", flags)
    if variant == "continuous":
        if entropy is None:
            raise PreconditionError("continuous variant needs the differential entropy")
        value = float(entropy) - K * math.log(math.pi * math.e) - _logdet_pd(M, "residual covariance")
        return BoundReport(value, "lower-L2-continuous", flags)
    raise DomainError(f"unknown variant {variant!r}")


def lower_bound_cor2_stats(H, d, params: ChannelParams, variant="discrete"):
    """Closed-form bound for a zero-mean input with covariance I/K, from (H, d) alone."""
    K, s2 = params.K, params.sigma2
    snr_a = float(np.sum(np.abs(params.alpha_hat) ** 2 / (params.error_variances + K * s2)))
    base = K * math.log(K / (math.pi * math.e))
    flags = {"zero_mean": True, "isotropic_covariance": True,
             "uniform_fading": params.uniform_fading}
    if variant == "discrete":
        if not (d > 0 and math.isfinite(d)):
            raise PreconditionError("discrete variant needs a positive finite minimum distance")
        value = (H + K * math.log(math.pi) + 2 * K * math.log(d) - K * math.log(4.0)
                 - special.gammaln(K + 1) + base
                 - K * math.log(d * d * K / (4.0 * (K + 1)) + 1.0 / (1.0 + snr_a)))
        return BoundReport(value, "lower-C2-discrete", flags)
    if variant == "continuous":
        return BoundReport(H + base + K * math.log1p(snr_a), "lower-C2-continuous", flags)
    raise DomainError(f"unknown variant {variant!r}")


def lower_bound_cor2(c: Constellation, params: ChannelParams, variant="discrete", *,
                     entropy=None, d=None):
    """Minimum-distance bound specialised to mean zero and covariance I/K (checked)."""
    _check_dims(c, params)
    K = params.K
    if np.max(np.abs(c.mean)) > MOMENT_TOL:
        raise PreconditionError("constellation mean is not zero")
    if np.max(np.abs(c.covariance - np.eye(K) / K)) > MOMENT_TOL:
        raise PreconditionError("constellation covariance is not I/K")
    if variant == "discrete":
        d = c.min_distance if d is None else float(d)
        H = c.entropy() if entropy is None else float(entropy)
    else:
        if entropy is None:
            raise PreconditionError("continuous variant needs the differential entropy")
        H = float(entropy)
    return lower_bound_cor2_stats(H, d, params, variant)


# ---------------------------------------------------------------------------
# Orthogonal on-off bounds
# ---------------------------------------------------------------------------

def _onoff_terms(K, m, L, beta, sigma2, alpha_norm2, log_k):
    if int(L) != L or L < 1:
        raise DomainError("L must be a positive integer")
    if not 0.0 <= beta <= 1.0:
        raise DomainError("beta must lie in [0, 1]")
    if not sigma2 > 0 or alpha_norm2 < 0:
        raise DomainError("need sigma2 > 0 and alpha_norm2 >= 0")
    E = 2.0 * m * L * sigma2
    if not E > 1.0:
        raise PreconditionError(f"m must exceed 1/(2 L sigma2) = {1.0 / (2 * L * sigma2):.6g}")
    if log_k is None:
        if int(K) != K or K < 1:
            raise DomainError("K must be a positive integer")
        log_k = math.log(K)
    if log_k < 0:
        raise DomainError("K must be at least 1")
    u = alpha_norm2
    # ln[(E - 1)(2 m beta + 1)^L]
    log_c = math.log(E - 1.0) + L * math.log1p(2.0 * m * beta)
    # log(K - 1), log(K - 2) without forming K
    log_km1 = log_k + math.log(-math.expm1(-log_k)) if log_k > 0 else -math.inf
    km2 = -math.expm1(-log_k) - math.exp(-log_k)  # (K - 2)/K
    log_km2 = log_k + math.log(km2) if km2 > 0 else -math.inf
    return E, u, log_k, log_c, log_km1, log_km2


def _flags(L, beta):
    return {"uniform_fading": True, "L_sufficiently_large": L >= LARGE_L}


def _log_neg_log_ndtr(x):
    """ln(-ln Phi(x)), accurate where Phi(x) is within rounding of 1."""
    x = np.asarray(x, dtype=float)
    lq = special.log_ndtr(-x)
    with np.errstate(divide="ignore"):
        direct = np.log(-special.log_ndtr(np.minimum(x, 5.0)))
    # -ln Phi = Q + Q^2/2 + ...; the first term is enough once Q < e^-20
    series = lq + np.log1p(0.5 * np.exp(lq))
    return np.where(x > 5.0, series, direct)


def _max_normal_mode(log_n):
    """Approximate mode of the maximum of n = e^{log_n} standard normals."""
    if log_n <= 0:
        return 0.0
    target = -log_n
    lo, hi = -10.0, 10.0 + math.sqrt(2.0 * max(log_n, 1.0))
    # ln(-ln Phi(x)) decreases in x; solve = -ln n by bisection
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _log_neg_log_ndtr(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _max_normal_rule(log_km1, log_km2, n_nodes):
    """Nodes and log weights integrating against the density of the max of K-1 normals.

    The density (K-1) phi(x) Phi(x)^{K-2} peaks near x* with spread about
    1/x*; Gauss-Legendre on x* -+ 12 spreads captures it, and the weights
    are renormalized to unit mass.  Returns (nodes, log_weights, mass_error).
    """
    mode = _max_normal_mode(log_km1)
    spread = 1.2 / max(1.0, mode)
    lo, hi = mode - 12.0 * spread, mode + 12.0 * spread
    g, w = np.polynomial.legendre.leggauss(n_nodes)
    x = 0.5 * (hi + lo) + 0.5 * (hi - lo) * g
    tail = np.exp(log_km2 + _log_neg_log_ndtr(x)) if log_km2 > -math.inf else 0.0
    lw = np.log(0.5 * (hi - lo) * w) + log_km1 - 0.5 * x * x - 0.5 * math.log(2 * math.pi) - tail
    total = special.logsumexp(lw)
    return x, lw - total, abs(math.expm1(total))


def lower_bound_lemma3(K, m, L, beta, sigma2, alpha_norm2=0.0, *, log_k=None,
                       tol=1e-9, n_inner=160):
    """Orthogonal on-off lower bound in its integral form.

    (1/E) [ ln(K E) - T1 - T2 ] with E = 2 m L sigma2, where
      T1 = E_Z softplus(ln K + ln c - 2mL(beta+u) - 2 Z sqrt(L(m^2 beta^2 + (2 m^2 beta + m) u)))
      T2 = E_{ln Y} E_M softplus(ln(K-1) + a M + b - ln(Y + K c)),
    c = (E-1)(2 m beta + 1)^L, a = 2 sqrt(L(m^2 beta^2 + m u))/(2 m beta + 1),
    b = 2 m beta L/(2 m beta + 1), ln Y ~ N(2mL(beta+u), 4L(m^2 beta^2 + (2 m^2 beta + m) u))
    and M the maximum of K-1 standard normals.  Pass `log_k` instead of K
    when K itself would overflow.

    The expectation over M uses a fixed rule around its mode; the Gaussian
    expectations are adaptive because softplus has a kink whose width is
    O(1) while ln Y may spread over thousands of nats.
    """
    E, u, log_k, log_c, log_km1, log_km2 = _onoff_terms(K, m, L, beta, sigma2, alpha_norm2, log_k)
    s_y = 2.0 * math.sqrt(L * (m * m * beta * beta + (2 * m * m * beta + m) * u))
    shift = log_k + log_c - 2.0 * m * L * (beta + u)
    inv_sqrt_2pi = 1.0 / math.sqrt(2 * math.pi)

    def gauss_mean(h):
        # E h(mu + s_y Z) for Z standard normal, as a function of the offset s_y Z
        if s_y == 0.0:
            return float(h(np.zeros(1))[0])
        return integrate_real(lambda z: inv_sqrt_2pi * np.exp(-0.5 * z * z) * h(s_y * z), tol)

    t1 = gauss_mean(lambda dz: softplus(shift - dz))
    err = tol * abs(t1)

    t2 = 0.0
    if log_k > 0:
        a = 2.0 * math.sqrt(L * (m * m * beta * beta + m * u)) / (2 * m * beta + 1)
        b = 2.0 * m * beta * L / (2 * m * beta + 1)
        mu_y = 2.0 * m * L * (beta + u)
        log_kc = log_k + log_c
        if a == 0.0:
            x, wx = np.zeros(1), np.ones(1)
        else:
            x, lw, mass_err = _max_normal_rule(log_km1, log_km2, n_inner)
            wx = np.exp(lw)
            err += mass_err

        def inner(dz):
            off = log_km1 + b - np.logaddexp(mu_y + np.asarray(dz, dtype=float), log_kc)
            return softplus(off[:, None] + a * x[None, :]) @ wx

        t2 = gauss_mean(inner)
        err += tol * abs(t2)
    value = (math.log(E) + log_k - t1 - t2) / E
    return BoundReport(value, "lower-L3-integral", _flags(L, beta), error_estimate=err / E)


def lower_bound_lemma3_simplified(K, m, L, beta, sigma2, alpha_norm2=0.0, *, log_k=None):
    """Closed-form weakening of the on-off bound with a = sqrt(2 ln K).

    (1/E) [ ln(K E) - ln(1 + K c e^{-2mL(beta+u)})
            - ln(1 + (K-1)/(K c) e^{2 m beta L/(2 m beta + 1)})
            - 2/(2 m beta + 1) (Phi(a)^{K-1} - 2^{1-K}) sqrt(2 L ln K (m^2 beta^2 + m u))
            - sqrt(2L(m^2 beta^2 + m u)/pi) (sqrt(1 + 2 m beta u/(m beta^2 + u)) + (K-1)/(K(2 m beta + 1))) ]
    """
    E, u, log_k, log_c, log_km1, _ = _onoff_terms(K, m, L, beta, sigma2, alpha_norm2, log_k)
    mb = m * m * beta * beta + m * u
    term1 = float(softplus(log_k + log_c - 2.0 * m * L * (beta + u)))
    if log_k > 0:
        # ln(1 + (K-1)/(K c) e^b), (K-1)/K = -expm1(-ln K)
        term2 = float(softplus(math.log(-math.expm1(-log_k)) - log_c
                               + 2 * m * beta * L / (2 * m * beta + 1)))
        a = math.sqrt(2.0 * log_k)
        # Phi(a)^{K-1} = exp(-exp(ln(K-1) + ln(-ln Phi(a))))
        phi_pow = math.exp(-math.exp(log_km1 + float(_log_neg_log_ndtr(a))))
        # 2^{1-K} underflows harmlessly once K - 1 > ~1075
        half_pow = math.exp(-math.exp(log_km1) * math.log(2.0)) if log_km1 < 700 else 0.0
        term3 = 2.0 / (2 * m * beta + 1) * (phi_pow - half_pow) * math.sqrt(2.0 * L * log_k * mb)
        frac = -math.expm1(-log_k)
    else:
        term2 = term3 = 0.0
        frac = 0.0
    root = math.sqrt(1.0 + 2.0 * m * beta * u / (m * beta * beta + u)) if (m * beta * beta + u) > 0 else 1.0
    term4 = math.sqrt(2.0 * L * mb / math.pi) * (root + frac / (2 * m * beta + 1))
    value = (math.log(E) + log_k - term1 - term2 - term3 - term4) / E
    return BoundReport(value, "lower-L3-simplified", _flags(L, beta))


def best_lemma3_bound(K, L, beta, sigma2, alpha_norm2=0.0, *, m_max=1e3, simplified=False):
    """Maximize the on-off bound over m > 1/(2 L sigma2); returns (report, m)."""
    fn = lower_bound_lemma3_simplified if simplified else lower_bound_lemma3
    m_min = 1.0 / (2.0 * L * sigma2)
    lo, hi = math.log(m_min * (1 + 1e-6)), math.log(max(m_max, 10 * m_min))

    def neg(t):
        return -fn(K, math.exp(t), L, beta, sigma2, alpha_norm2).value

    # coarse scan first: the bound is not unimodal near m_min
    grid = np.linspace(lo, hi, 24)
    vals = np.array([neg(t) for t in grid])
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": 1e-4})
    t = res.x if res.fun < vals[i] else grid[i]
    m = math.exp(t)
    return fn(K, m, L, beta, sigma2, alpha_norm2), m


def asymptotic_onoff_bound(m, L, sigma2):
    """(1/(2mL s2)) [2mL - L ln(2m+1) - (4mL/(2m+1)) sqrt(m) e^-1 - m sqrt(2L/pi)] for K = e^{2mL}."""
    if m < 1 or L < 1:
        raise DomainError("need m >= 1 and L >= 1")
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    inner = (2 * m * L - L * math.log(2 * m + 1)
             - 4 * m * L / (2 * m + 1) * math.sqrt(m) / math.e
             - m * math.sqrt(2 * L / math.pi))
    return inner / (2 * m * L * sigma2)


def fourth_moment_vanishing_bound(c, L_list, sigma2):
    """E{E_x^2}/(2 L sigma2^2) for each L: the fourth-moment bound with no CSI and beta = 1."""
    q = float(c) if np.isscalar(c) else float(c.fourth_moment)
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    out = []
    for L in L_list:
        if L < 1:
            raise DomainError("L must be positive")
        out.append(q / (2.0 * L * sigma2 * sigma2))
    return out
