"""Special functions and quadrature primitives.

Everything that can overflow is evaluated in log form.  The adaptive
integrator works on panels of the 15-point Gauss-Kronrod rule and accepts
either a plain integrand or a log-integrand.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import ConfigurationError, ConvergenceError, DomainError

__all__ = [
    "QuadratureRule",
    "log_bessel_i0",
    "chi2_logpdf",
    "noncentral_chi2_2_logpdf",
    "std_normal_cdf",
    "exp1",
    "laguerre",
    "gauss_quadrature",
    "integrate_semiinfinite",
    "integrate_real",
    "softplus",
]

I0_SERIES_TERMS = 40
I0_ASYMPTOTIC_TERMS = 16
I0_BRANCH_POINT = 20.0

# c_k = prod_{j<=k} (2j-1)^2 / (8j); I0(z) ~ e^z / sqrt(2 pi z) * sum_k c_k z^-k
_I0_ASYMPTOTIC_COEFFS = np.cumprod(
    np.r_[1.0, [(2 * k - 1) ** 2 / (8.0 * k) for k in range(1, I0_ASYMPTOTIC_TERMS + 1)]]
)


def _as_float_array(z):
    arr = np.asarray(z, dtype=float)
    return arr, arr.ndim == 0


def log_bessel_i0(z):
    """Natural log of the modified Bessel function I0 for z >= 0.

    Power series below z = 20, asymptotic expansion above.  Accepts scalars
    or arrays; never overflows for finite z.
    """
    arr, scalar = _as_float_array(z)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("log_bessel_i0 requires finite z >= 0")
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)

    small = arr < I0_BRANCH_POINT
    if np.any(small):
        zz = 0.25 * arr[small] ** 2
        term = np.ones_like(zz)
        total = np.ones_like(zz)
        for k in range(1, I0_SERIES_TERMS + 1):
            term = term * zz / (k * k)
            total += term
        out[small] = np.log(total)

    big = ~small
    if np.any(big):
        zb = arr[big]
        inv = 1.0 / zb
        # Horner on the correction polynomial in 1/z
        poly = np.full_like(zb, _I0_ASYMPTOTIC_COEFFS[-1])
        for c in _I0_ASYMPTOTIC_COEFFS[-2::-1]:
            poly = poly * inv + c
        out[big] = zb - 0.5 * np.log(2.0 * np.pi * zb) + np.log(poly)

    return float(out[0]) if scalar else out.reshape(np.shape(z))


def chi2_logpdf(dof, x):
    """Log density of the central chi-squared law with `dof` degrees of freedom."""
    if int(dof) != dof or dof <= 0:
        raise DomainError("dof must be a positive integer")
    arr, scalar = _as_float_array(x)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("chi2_logpdf requires x >= 0")
    half = 0.5 * dof
    with np.errstate(divide="ignore"):
        # xlogy gives 0*log(0) = 0 for dof == 2
        out = special.xlogy(half - 1.0, arr) - 0.5 * arr - half * math.log(2.0) - special.gammaln(half)
    if dof < 2:
        out = np.where(arr == 0, np.inf, out)
    return float(out) if scalar else out


def noncentral_chi2_2_logpdf(lam, x):
    """Log density of the noncentral chi-squared law with two degrees of freedom."""
    lam_arr, s1 = _as_float_array(lam)
    x_arr, s2 = _as_float_array(x)
    if np.any(lam_arr < 0) or np.any(x_arr < 0) or np.any(np.isnan(lam_arr)) or np.any(np.isnan(x_arr)):
        raise DomainError("noncentral_chi2_2_logpdf requires lambda >= 0 and x >= 0")
    out = -math.log(2.0) - 0.5 * (lam_arr + x_arr) + log_bessel_i0(np.sqrt(lam_arr * x_arr))
    return float(out) if (s1 and s2) else out


def std_normal_cdf(x):
    """Standard normal CDF Phi(x)."""
    arr, scalar = _as_float_array(x)
    if not np.all(np.isfinite(arr)):
        raise DomainError("std_normal_cdf requires finite x")
    out = special.ndtr(arr)
    return float(out) if scalar else out


def exp1(x):
    """Exponential integral E1(x) for x > 0."""
    arr, scalar = _as_float_array(x)
    if np.any(~(arr > 0)):
        raise DomainError("exp1 requires x > 0")
    out = special.exp1(arr)
    return float(out) if scalar else out


def laguerre(k, a, u):
    """Generalized Laguerre polynomial L_k^a(u) by the three-term recurrence."""
    if int(k) != k or k < 0 or a < 0:
        raise DomainError("laguerre requires integer k >= 0 and a >= 0")
    arr, scalar = _as_float_array(u)
    prev = np.ones_like(arr)
    if k == 0:
        return float(prev) if scalar else prev
    cur = 1.0 + a - arr
    for j in range(1, int(k)):
        prev, cur = cur, ((2 * j + 1 + a - arr) * cur - (j + a) * prev) / (j + 1)
    return float(cur) if scalar else cur


def softplus(t):
    """ln(1 + e^t) without overflow."""
    return np.logaddexp(0.0, t)


# ---------------------------------------------------------------------------
# Fixed rules
# ---------------------------------------------------------------------------

QUADRATURE_KINDS = ("gauss-hermite", "gauss-laguerre", "gauss-legendre", "adaptive-semiinfinite")


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.kind not in QUADRATURE_KINDS:
            raise ConfigurationError(f"unknown quadrature kind {self.kind!r}")
        if nodes.shape != weights.shape:
            raise ConfigurationError("nodes and weights must have the same length")
        if np.any(weights <= 0):
            raise ConfigurationError("quadrature weights must be positive")
        if np.any(np.diff(nodes) <= 0):
            raise ConfigurationError("quadrature nodes must be strictly increasing")

    def __len__(self):
        return len(self.nodes)

    def apply(self, values):
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=128)
def gauss_quadrature(kind, n, alpha=0.0):
    """Gauss rule of the given kind with n nodes.

    gauss-hermite integrates against e^{-x^2} on the real line,
    gauss-laguerre against u^alpha e^{-u} on [0, inf),
    gauss-legendre on [-1, 1].
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    n = int(n)
    if kind == "gauss-hermite":
        x, w = special.roots_hermite(n)
    elif kind == "gauss-laguerre":
        if alpha <= -1:
            raise DomainError("gauss-laguerre needs alpha > -1")
        x, w = special.roots_genlaguerre(n, alpha)
    elif kind == "gauss-legendre":
        x, w = special.roots_legendre(n)
    else:
        raise ConfigurationError(f"unsupported quadrature kind {kind!r}")
    return QuadratureRule(x, w, kind)


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod panels
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_K15_X = np.r_[-_XGK[:-1], _XGK[::-1]]
_K15_W = np.r_[_WGK[:-1], _WGK[::-1]]
_G7_W = np.zeros(15)
_G7_W[[1, 3, 5]] = _WG[:3]
_G7_W[[9, 11, 13]] = _WG[2::-1]
_G7_W[7] = _WG[3]

TRUNCATION_NATS = 40.0
DEFAULT_TOL = 1e-8


def _gk15(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = np.asarray(f(mid + half * _K15_X), dtype=float)
    k = half * np.dot(_K15_W, vals)
    g = half * np.dot(_G7_W, vals)
    return k, abs(k - g)


def _adaptive(f, edges, tol, abs_floor, max_panels):
    heap = []
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        val, e = _gk15(f, a, b)
        total += val
        err += e
        heapq.heappush(heap, (-e, a, b, val))
    panels = len(heap)
    while err > max(tol * abs(total), abs_floor):
        if panels >= max_panels:
            raise ConvergenceError(
                f"adaptive quadrature did not reach tol={tol:g} within {max_panels} panels",
                estimate=total, error=err,
            )
        neg_e, a, b, val = heapq.heappop(heap)
        m = 0.5 * (a + b)
        if not (a < m < b):
            # panel cannot be split any further in floating point
            raise ConvergenceError("adaptive quadrature hit floating-point resolution",
                                   estimate=total, error=err)
        v1, e1 = _gk15(f, a, m)
        v2, e2 = _gk15(f, m, b)
        total += v1 + v2 - val
        err += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, a, m, v1))
        heapq.heappush(heap, (-e2, m, b, v2))
        panels += 1
    return total, err


def _log_abs(f, log, t):
    vals = np.asarray(f(t), dtype=float)
    if log:
        return vals
    with np.errstate(divide="ignore"):
        return np.log(np.abs(vals))


def _scan_bounds(logf, anchor, direction, peak, limit=None, step=1.0):
    """Step geometrically away from `anchor` until logf drops TRUNCATION_NATS below peak."""
    t = anchor
    for _ in range(200):
        nxt = anchor + direction * step
        if limit is not None and direction < 0 and nxt <= limit:
            return limit
        val = logf(np.array([nxt]))[0]
        # require two consecutive points below threshold to skip over oscillation zeros
        if val < peak - TRUNCATION_NATS:
            val2 = logf(np.array([anchor + direction * step * 1.5]))[0]
            if val2 < peak - TRUNCATION_NATS:
                return nxt
        t = nxt
        step *= 1.5
    return t


def _probe_grid(lower):
    return lower + np.r_[0.0, np.geomspace(1e-8, 1e8, 161)]


def integrate_semiinfinite(f, tol=DEFAULT_TOL, *, log=False, lower=0.0, mode=None,
                           scale=1.0, max_panels=4000):
    """Integral of f over [lower, inf).

    With ``log=True`` the callable returns the log of a positive integrand;
    the result is still the plain integral.  The domain is split at the mode
    (estimated on a geometric probe grid unless given) and truncated where
    the log-integrand falls TRUNCATION_NATS below its maximum.  `scale` is
    the first step of the search for the truncation points and should be
    of the order of the integrand's width when that is far from 1.
    """
    logf = lambda t: _log_abs(f, log, t)
    grid = _probe_grid(lower)
    if mode is not None:
        grid = np.r_[grid, mode]
    with np.errstate(over="ignore", invalid="ignore"):
        lv = logf(grid)
    lv = np.where(np.isnan(lv), -np.inf, lv)
    if not np.any(np.isfinite(lv)):
        return 0.0
    i_peak = int(np.argmax(lv))
    peak = float(lv[i_peak])
    if mode is None:
        mode = float(grid[i_peak])
    hi = _scan_bounds(logf, mode, +1.0, peak, step=scale)
    lo = lower
    if mode - lower > 0:
        lo = _scan_bounds(logf, mode, -1.0, peak, limit=lower, step=scale)
        lo = max(lo, lower)

    if log:
        g = lambda t: np.exp(np.asarray(f(t), dtype=float) - peak)
        factor = math.exp(peak) if peak < 700 else None
    else:
        g = f
        factor = 1.0
    edges = [lo] + ([mode] if lo < mode < hi else []) + [hi]
    try:
        total, _ = _adaptive(g, edges, tol, 1e-300, max_panels)
    except ConvergenceError as exc:
        if log and factor is not None:
            exc.estimate *= factor
            exc.error *= factor
        raise
    if log:
        if factor is None:
            return math.inf if total > 0 else 0.0
        return total * factor
    return total


def integrate_real(f, tol=DEFAULT_TOL, *, log=False, mode=None, scale=1.0, max_panels=4000):
    """Integral of f over the whole real line (same strategy as the half-line version)."""
    if mode is None:
        probe = np.r_[-np.geomspace(1e6, 1e-6, 121), 0.0, np.geomspace(1e-6, 1e6, 121)]
        with np.errstate(over="ignore", invalid="ignore"):
            lv = _log_abs(f, log, probe)
        lv = np.where(np.isnan(lv), -np.inf, lv)
        if not np.any(np.isfinite(lv)):
            return 0.0
        mode = float(probe[int(np.argmax(lv))])
    left = integrate_semiinfinite(lambda t: f(2.0 * mode - t), tol, log=log, lower=mode,
                                  mode=mode, scale=scale, max_panels=max_panels)
    right = integrate_semiinfinite(f, tol, log=log, lower=mode, mode=mode, scale=scale,
                                   max_panels=max_panels)
    return left + right
