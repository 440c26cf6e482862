"""Exact mutual information for one-dimensional radially symmetric inputs.

With K = 1 and uniform fading the output statistics reduce to
x ~ noncentral chi2_2(2 L r^2 u / q(r)) and y ~ chi2_{2L-2}, where
q(r) = beta r^2 + L sigma2 and u = ||alpha_hat||^2.  The mutual information is

    I(mu) = sum_i p_i i(r_i; mu),
    i(r; mu) = -L - E_{x,y | r}[ ln sum_j p_j f(x, y, r, r_j) ],

and i(r; mu) is the divergence between the output law at input radius r
and the output law under mu.  The same function drives the optimality
residual g(r) = lambda1 + lambda2 r^2 - i(r; mu), which must be
nonnegative everywhere and zero on the support of a capacity-achieving mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import nnls

from . import kernels
from .constellations import RadialDistribution
from .errors import ConvergenceError, DomainError
from .numerics import log_bessel_i0

__all__ = [
    "QuadratureBudget",
    "MiContext",
    "ResidualReport",
    "log_f_kernel",
    "information_density",
    "mi_radial",
    "fit_multipliers",
    "optimality_residual",
    "default_r_grid",
    "certify",
    "FAST_BUDGET",
]


@dataclass(frozen=True)
class QuadratureBudget:
    """Node counts for the x (Rician amplitude) and y (chi amplitude) rules.

    Both rules are Gauss-Legendre on [max(0, c - half_width), c + half_width]
    around the centre c of the amplitude law; 9 standard deviations on
    either side leaves a tail below 40 nats.
    """

    n_x: int = 128
    n_y: int = 96
    half_width: float = 9.0

    def __post_init__(self):
        if self.n_x < 2 or self.n_y < 2 or not self.half_width > 0:
            raise DomainError("quadrature budget must have n >= 2 and positive half_width")


FAST_BUDGET = QuadratureBudget(n_x=64, n_y=48)


@lru_cache(maxsize=32)
def _legendre(n):
    g, w = np.polynomial.legendre.leggauss(n)
    g.setflags(write=False)
    w.setflags(write=False)
    return g, w


@lru_cache(maxsize=32)
def _y_rule(L, n, half_width):
    """Nodes and normalized weights for y ~ chi2_{2L-2}, integrated over s = sqrt(y)."""
    if L == 1:
        return np.zeros(1), np.ones(1)
    k = 2 * L - 2
    centre = math.sqrt(k - 1)
    lo, hi = max(0.0, centre - half_width), centre + half_width
    g, w = _legendre(n)
    s = 0.5 * (hi + lo) + 0.5 * (hi - lo) * g
    lw = np.log(w) + (k - 1) * np.log(s) - 0.5 * s * s
    wy = np.exp(lw - lw.max())
    nodes, weights = s * s, wy / wy.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclass(frozen=True)
class MiContext:
    """Channel seen by a K=1 radially symmetric input."""

    L: int
    beta: float
    sigma2: float
    alpha_norm2: float = 0.0
    budget: QuadratureBudget = field(default_factory=QuadratureBudget)

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise DomainError("L must be a positive integer")
        object.__setattr__(self, "L", int(self.L))
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError("beta must lie in [0, 1]")
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise DomainError("sigma2 must be positive and finite")
        if not (self.alpha_norm2 >= 0 and math.isfinite(self.alpha_norm2)):
            raise DomainError("alpha_norm2 must be finite and nonnegative")

    def with_alpha(self, alpha_norm2):
        return MiContext(self.L, self.beta, self.sigma2, alpha_norm2, self.budget)

    def with_budget(self, budget):
        return MiContext(self.L, self.beta, self.sigma2, self.alpha_norm2, budget)

    @classmethod
    def from_params(cls, params, budget=None):
        """Context for a K=1 ChannelParams with uniform fading."""
        if params.K != 1:
            raise DomainError("exact mutual information needs K = 1")
        if not params.uniform_fading:
            raise DomainError("exact mutual information needs uniform fading")
        return cls(params.L, params.beta, params.sigma2, params.alpha_norm2,
                   budget or QuadratureBudget())


def log_f_kernel(x, y, r, rho, ctx: MiContext):
    """ln f(x, y, r, rho) for the given channel; broadcasts over array inputs."""
    x, y, r, rho = (np.asarray(v, dtype=float) for v in (x, y, r, rho))
    L, u = ctx.L, ctx.alpha_norm2
    qr = ctx.beta * r**2 + L * ctx.sigma2
    qrho = ctx.beta * rho**2 + L * ctx.sigma2
    c = L * rho**2 * u / qrho
    ratio = qr / qrho
    out = (L * np.log(ratio) + log_bessel_i0(np.sqrt(2.0 * x * c * ratio))
           - ((x + y) * ratio / 2.0 + c))
    return float(out) if out.ndim == 0 else out


def information_density(r, dist: RadialDistribution, ctx: MiContext):
    """i(r; mu) at each radius in r (nats)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0) or np.any(~np.isfinite(r)):
        raise DomainError("radii must be finite and nonnegative")
    b = ctx.budget
    g, w = _legendre(b.n_x)
    yn, yw = _y_rule(ctx.L, b.n_y, b.half_width)
    return kernels.mixture_information(
        np.ascontiguousarray(r), dist.radii, np.log(dist.probs), ctx.L, float(ctx.beta),
        float(ctx.sigma2), float(ctx.alpha_norm2), g, w, float(b.half_width), yn, yw)


def mi_radial(dist: RadialDistribution, ctx: MiContext, *, tol=None):
    """Mutual information in nats between a radial input and the channel output.

    With `tol` set, the result is recomputed on a coarser rule and a
    ConvergenceError is raised if the two differ by more than `tol`.
    """
    dens = information_density(dist.radii, dist, ctx)
    value = float(np.dot(dist.probs, dens))
    if not math.isfinite(value):
        raise ConvergenceError("mutual information integral is not finite", estimate=value)
    if tol is not None:
        b = ctx.budget
        coarse = QuadratureBudget(max(2, (3 * b.n_x) // 4), max(2, (3 * b.n_y) // 4), b.half_width)
        other = float(np.dot(dist.probs, information_density(dist.radii, dist, ctx.with_budget(coarse))))
        if abs(other - value) > tol:
            raise ConvergenceError(
                f"quadrature rules disagree by {abs(other - value):.3g} > {tol:g}",
                estimate=value, error=abs(other - value))
    return value


def default_r_grid(r_max=8.0, n=400):
    """Zero followed by log-spaced radii up to r_max."""
    return np.r_[0.0, np.geomspace(1e-3, r_max, n - 1)]


def fit_multipliers(dist: RadialDistribution, ctx: MiContext, density=None):
    """Nonnegative least-squares fit of i(r_i) = lambda1 + lambda2 r_i^2 on the support."""
    if density is None:
        density = information_density(dist.radii, dist, ctx)
    A = np.column_stack([np.ones(len(dist)), dist.radii**2])
    if len(dist) == 1:
        # one equation, two unknowns: put everything on the constant
        return max(float(density[0]), 0.0), 0.0
    lam, _ = nnls(A, np.asarray(density, dtype=float))
    return float(lam[0]), float(lam[1])


@dataclass(frozen=True)
class ResidualReport:
    """Optimality residual g(r) = lambda1 + lambda2 r^2 - i(r; mu) on a radius grid."""

    r_grid: np.ndarray
    g: np.ndarray
    support_g: np.ndarray
    lambda1: float
    lambda2: float
    tol: float
    certificate: bool

    @property
    def min_g(self):
        return float(self.g.min())

    @property
    def max_support_abs(self):
        return float(np.max(np.abs(self.support_g)))

    @property
    def max_violation(self):
        """Largest breach of g >= -tol or |g(r_i)| <= tol, as a nonnegative number."""
        return max(0.0, -self.min_g, self.max_support_abs)

    @property
    def passed(self):
        return self.max_violation <= self.tol

    def to_dict(self):
        return {
            "lambda1": self.lambda1, "lambda2": self.lambda2, "tol": self.tol,
            "min_g": self.min_g, "max_support_abs": self.max_support_abs,
            "passed": self.passed, "certificate": self.certificate,
        }


def optimality_residual(dist: RadialDistribution, lambda1, lambda2, ctx: MiContext,
                        r_grid=None, tol=1e-3):
    """Evaluate g(r) on `r_grid` and at the mass points of `dist`.

    The check is a proof-grade certificate only for L = 1, where the
    conditions are necessary and sufficient; for L > 1 it is diagnostic.
    """
    if lambda1 < 0 or lambda2 < 0:
        raise DomainError("multipliers must be nonnegative")
    r_grid = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    g = lambda1 + lambda2 * r_grid**2 - information_density(r_grid, dist, ctx)
    gs = lambda1 + lambda2 * dist.radii**2 - information_density(dist.radii, dist, ctx)
    return ResidualReport(r_grid, g, gs, float(lambda1), float(lambda2), float(tol), ctx.L == 1)


def certify(dist: RadialDistribution, ctx: MiContext, r_grid=None, tol=1e-3):
    """Fit the multipliers on the support, then evaluate the residual."""
    lam1, lam2 = fit_multipliers(dist, ctx)
    return optimality_residual(dist, lam1, lam2, ctx, r_grid, tol)
