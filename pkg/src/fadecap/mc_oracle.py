"""Monte Carlo plug-in estimate of I(x; y | alpha_hat) for a finite constellation.

Given x the output is proper complex Gaussian with mean kron(x, alpha_hat)
and covariance kron(x x*, Sigma_eps) + sigma2 I, so the log-likelihood ratio
ln p(y|x) - ln sum_j p_j p(y|x_j) can be evaluated exactly at every sample.
Samples are drawn in fixed-size blocks, each from its own counter-based
stream keyed by (seed, block index), and block sums are reduced in index
order; the result does not depend on how blocks are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .channel import ChannelParams, conditional_moments, make_rng
from .constellations import Constellation
from .errors import DimensionError, DomainError, LinearAlgebraError

__all__ = ["McEstimate", "mc_mutual_information", "MAX_DIMENSION", "BLOCK_SIZE"]

MAX_DIMENSION = 8
BLOCK_SIZE = 16384
_EVAL_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    std_error: float
    n_samples: int
    seed: int

    def __post_init__(self):
        if not math.isfinite(self.estimate) or not self.std_error >= 0:
            raise DomainError("estimate must be finite and std_error nonnegative")

    def to_dict(self):
        return {"estimate": self.estimate, "std_error": self.std_error,
                "n_samples": self.n_samples, "seed": self.seed}


class _Model:
    """Per-symbol means, Cholesky factors and log-determinants."""

    def __init__(self, c: Constellation, params: ChannelParams, U=None):
        d = params.K * params.L
        S = len(c)
        self.d = d
        self.log_p = np.log(c.probabilities)
        self.means = np.empty((S, d), complex)
        self.chol = np.empty((S, d, d), complex)
        self.inv_chol = np.empty((S, d, d), complex)
        self.logdet = np.empty(S)
        for j, x in enumerate(c.symbols):
            m, B = conditional_moments(x, params, U)
            B = 0.5 * (B + B.conj().T)
            try:
                Lc = linalg.cholesky(B, lower=True)
            except linalg.LinAlgError as exc:
                raise LinearAlgebraError(f"conditional covariance of symbol {j} is singular") from exc
            self.means[j] = m
            self.chol[j] = Lc
            self.inv_chol[j] = linalg.solve_triangular(Lc, np.eye(d), lower=True)
            self.logdet[j] = 2.0 * float(np.sum(np.log(np.abs(np.diag(Lc)).real)))

    def log_density(self, y):
        """(n, S) matrix of ln p(y_t | x_j)."""
        n, S = y.shape[0], len(self.log_p)
        out = np.empty((n, S))
        step = max(1, _EVAL_ELEMENTS // (S * self.d))
        for a in range(0, n, step):
            diff = y[a:a + step, None, :] - self.means[None, :, :]
            w = np.einsum("sij,nsj->nsi", self.inv_chol, diff)
            quad = np.sum(w.real**2 + w.imag**2, axis=2)
            out[a:a + step] = -self.d * math.log(math.pi) - self.logdet[None, :] - quad
        return out


def _block(model, seed, index, size):
    rng = make_rng(seed, index)
    S, d = len(model.log_p), model.d
    idx = rng.choice(S, size=size, p=np.exp(model.log_p))
    z = (rng.standard_normal((size, d)) + 1j * rng.standard_normal((size, d))) / math.sqrt(2.0)
    y = model.means[idx] + np.einsum("nij,nj->ni", model.chol[idx], z)
    ld = model.log_density(y)
    llr = ld[np.arange(size), idx] - special.logsumexp(ld + model.log_p[None, :], axis=1)
    return float(np.sum(llr)), float(np.sum(llr * llr))


def mc_mutual_information(c: Constellation, params: ChannelParams, n_samples=10**6, seed=0,
                          *, U=None, threads=1):
    """Plug-in estimate of the mutual information in nats with its standard error.

    `U` (a KL x KL unitary) re-expresses the observation as U* y.  With
    `threads` > 1 blocks are evaluated concurrently; the reduction order is
    fixed so the result is identical.
    """
    if c.K != params.K:
        raise DimensionError(f"constellation dimension {c.K} does not match K={params.K}")
    if params.K * params.L > MAX_DIMENSION:
        raise DimensionError(f"K*L = {params.K * params.L} exceeds {MAX_DIMENSION}")
    n = int(n_samples)
    if n < 2:
        raise DomainError("need at least two samples")
    if len(c) == 1:
        return McEstimate(0.0, 0.0, n, int(seed))
    model = _Model(c, params, U)
    sizes = [min(BLOCK_SIZE, n - a) for a in range(0, n, BLOCK_SIZE)]
    jobs = list(enumerate(sizes))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(lambda job: _block(model, seed, job[0], job[1]), jobs))
    else:
        parts = [_block(model, seed, i, s) for i, s in jobs]
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return McEstimate(mean, math.sqrt(var / n), n, int(seed))
