"""Multicoded CDMA channel: spreading codes, SVD reduction and conditional moments.

A K-dimensional symbol x is sent on K spreading codes over L resolvable
paths.  After projecting onto the row space of the stacked code matrix the
observation is

    y = H_x (alpha_hat + eps) + gamma,    H_x = x kron I_L,

with eps ~ CN(0, Sigma_eps) and gamma ~ CN(0, sigma2 I), so that given x
the output is proper complex Gaussian with mean H_x alpha_hat and covariance
(x x*) kron Sigma_eps + sigma2 I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, DimensionError, DomainError

__all__ = [
    "ChannelParams",
    "CodeMatrix",
    "make_rng",
    "complex_normal",
    "random_codes",
    "build_code_matrix",
    "random_code_matrix",
    "reduce_model",
    "conditional_moments",
    "sample_output",
    "sample_csi",
]

RANK_TOL = 1e-10
CODE_RETRIES = 10


def make_rng(seed, stream=0):
    """Counter-based generator keyed by (seed, stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def complex_normal(rng, variance, size):
    """Proper complex Gaussian draws: real and imaginary parts each of variance/2."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


@dataclass(frozen=True)
class ChannelParams:
    """K codes, L paths, CSI-error power beta, noise power sigma2 and estimate alpha_hat.

    The error variances default to the uniform split beta/L per path.
    """

    K: int
    L: int
    beta: float
    sigma2: float
    alpha_hat: np.ndarray = None
    error_variances: np.ndarray = None
    alpha_norm2: float = field(init=False)

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise DomainError("K must be a positive integer")
        if int(self.L) != self.L or self.L < 1:
            raise DomainError("L must be a positive integer")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError("beta must lie in [0, 1]")
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise DomainError("sigma2 must be positive and finite")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "L", int(self.L))
        a = np.zeros(self.L, complex) if self.alpha_hat is None else np.array(self.alpha_hat, complex)
        a = a.reshape(-1)
        if a.size != self.L:
            raise DimensionError(f"alpha_hat has length {a.size}, expected L={self.L}")
        a.setflags(write=False)
        object.__setattr__(self, "alpha_hat", a)
        if self.error_variances is None:
            d = np.full(self.L, self.beta / self.L)
        else:
            d = np.array(self.error_variances, dtype=float).reshape(-1)
            if d.size != self.L or np.any(d < 0):
                raise DomainError("error_variances must be L nonnegative numbers")
        d.setflags(write=False)
        object.__setattr__(self, "error_variances", d)
        object.__setattr__(self, "alpha_norm2", float(np.sum(np.abs(a) ** 2)))

    @classmethod
    def from_norm(cls, K, L, beta, sigma2, alpha_norm2=0.0):
        """Params whose estimate has the given squared norm, spread evenly over the paths."""
        if alpha_norm2 < 0:
            raise DomainError("alpha_norm2 must be nonnegative")
        a = np.full(int(L), math.sqrt(alpha_norm2 / L), dtype=complex)
        return cls(K, L, beta, sigma2, a)

    @property
    def sigma_eps(self):
        return np.diag(self.error_variances)

    @property
    def uniform_fading(self):
        return bool(np.allclose(self.error_variances, self.beta / self.L, rtol=0, atol=1e-15))

    def with_alpha(self, alpha_hat):
        return ChannelParams(self.K, self.L, self.beta, self.sigma2, alpha_hat, self.error_variances)

    def to_dict(self):
        return {
            "K": self.K, "L": self.L, "beta": self.beta, "sigma2": self.sigma2,
            "alpha_hat_re": self.alpha_hat.real.tolist(),
            "alpha_hat_im": self.alpha_hat.imag.tolist(),
            "error_variances": self.error_variances.tolist(),
        }


@dataclass(frozen=True)
class CodeMatrix:
    """Stacked circulant-shift matrix C = [C_1 | ... | C_K] of size (N+L-1) x KL."""

    codes: np.ndarray
    L: int
    stacked: np.ndarray

    @property
    def K(self):
        return self.codes.shape[0]

    @property
    def N(self):
        return self.codes.shape[1]


def random_codes(K, N, seed, stream=0):
    """K random +-1/sqrt(N) chip sequences."""
    rng = make_rng(seed, stream)
    return rng.choice([-1.0, 1.0], size=(int(K), int(N))) / math.sqrt(N)


def build_code_matrix(codes, L):
    codes = np.atleast_2d(np.asarray(codes, dtype=float))
    K, N = codes.shape
    if int(L) != L or L < 1:
        raise DomainError("L must be a positive integer")
    L = int(L)
    if K * L > N:
        raise DimensionError(f"K*L = {K * L} exceeds the code length N = {N}")
    norms = np.linalg.norm(codes, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise DomainError("every code must have unit norm")
    C = np.zeros((N + L - 1, K * L))
    for k in range(K):
        for l in range(L):
            C[l:l + N, k * L + l] = codes[k]
    smin = np.linalg.svd(C, compute_uv=False)[-1]
    if smin <= RANK_TOL:
        raise DegeneracyError(f"code matrix is rank deficient (smallest singular value {smin:.3g})")
    codes = codes.copy()
    codes.setflags(write=False)
    C.setflags(write=False)
    return CodeMatrix(codes, L, C)


def random_code_matrix(K, L, N, seed):
    """Random codes, redrawn up to CODE_RETRIES times until C has full rank."""
    last = None
    for attempt in range(CODE_RETRIES):
        try:
            return build_code_matrix(random_codes(K, N, seed, attempt), L)
        except DegeneracyError as exc:
            last = exc
    raise last


def reduce_model(cm: CodeMatrix):
    """Unitary factor U of C = V D U*; the reduced observation has dimension KL."""
    _, s, vh = np.linalg.svd(cm.stacked, full_matrices=False)
    if s[-1] <= RANK_TOL:
        raise DegeneracyError("code matrix is rank deficient")
    return vh.conj().T


def _symbol(x, K):
    x = np.atleast_1d(np.asarray(x, dtype=complex)).reshape(-1)
    if x.size != K:
        raise DimensionError(f"symbol has {x.size} entries, expected K={K}")
    return x


def conditional_moments(x, params: ChannelParams, U=None):
    """Mean H_x alpha_hat and covariance (x x*) kron Sigma_eps + sigma2 I of y given x.

    With a unitary U the moments are expressed in the basis U* y.
    """
    x = _symbol(x, params.K)
    mean = np.kron(x, params.alpha_hat)
    cov = np.kron(np.outer(x, x.conj()), params.sigma_eps) + params.sigma2 * np.eye(params.K * params.L)
    if U is not None:
        mean = U.conj().T @ mean
        cov = U.conj().T @ cov @ U
    return mean, cov


def sample_output(x, params: ChannelParams, rng_seed, size=None, stream=0):
    """Draw y = H_x (alpha_hat + eps) + gamma; shape (KL,) or (size, KL)."""
    x = _symbol(x, params.K)
    rng = make_rng(rng_seed, stream)
    n = 1 if size is None else int(size)
    eps = complex_normal(rng, params.error_variances, (n, params.L))
    gamma = complex_normal(rng, params.sigma2, (n, params.K * params.L))
    fade = params.alpha_hat + eps
    y = (x[None, :, None] * fade[:, None, :]).reshape(n, -1) + gamma
    return y[0] if size is None else y


def sample_csi(params: ChannelParams, rng_seed, size=None, stream=0):
    """Draw alpha_hat with i.i.d. CN(0, (1-beta)/L) entries."""
    rng = make_rng(rng_seed, stream)
    shape = (params.L,) if size is None else (int(size), params.L)
    return complex_normal(rng, (1.0 - params.beta) / params.L, shape)
