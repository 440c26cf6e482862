"""Input distributions: radial mass-point laws and finite K-dimensional constellations.

Radially symmetric inputs are carried as their magnitude law
(``RadialDistribution``); the exact K=1 mutual information depends on nothing
else.  ``lift_radial`` turns a radial law into a finite constellation by
spreading each ring over equally spaced phases, which is what the discrete
lower bound and the Monte Carlo estimator need.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError

__all__ = [
    "RadialDistribution",
    "Constellation",
    "psk",
    "uniform_disk",
    "amqam",
    "gaussian_radial",
    "orthogonal_onoff",
    "lift_radial",
    "amqam_lift",
    "product_constellation",
    "moments",
]

PROB_TOL = 1e-12


@dataclass(frozen=True)
class RadialDistribution:
    """Mass points (r_i, p_i) of the symbol-magnitude law."""

    radii: np.ndarray
    probs: np.ndarray
    energy: float = field(init=False)

    def __post_init__(self):
        r = np.array(self.radii, dtype=float).reshape(-1)
        p = np.array(self.probs, dtype=float).reshape(-1)
        if r.shape != p.shape or r.size == 0:
            raise DomainError("radii and probs must be non-empty and of equal length")
        if np.any(~np.isfinite(r)) or np.any(r < 0):
            raise DomainError("radii must be finite and nonnegative")
        if np.any(~(p > 0)):
            raise DomainError("probabilities must be positive")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise DomainError(f"probabilities sum to {p.sum():.15g}, not 1")
        if np.any(np.diff(r) <= 0):
            raise DomainError("radii must be strictly increasing")
        r.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "energy", float(np.dot(p, r * r)))

    @classmethod
    def from_points(cls, radii, probs, *, merge_tol=0.0, drop_below=0.0, normalize=False):
        """Build from unsorted points, merging radii closer than `merge_tol`
        and dropping masses at or below `drop_below`.

        Merged points sit at the probability-weighted root-mean-square radius
        so the energy is unchanged.
        """
        r = np.asarray(radii, dtype=float).reshape(-1)
        p = np.asarray(probs, dtype=float).reshape(-1)
        keep = p > drop_below
        r, p = r[keep], p[keep]
        order = np.argsort(r, kind="stable")
        r, p = r[order], p[order]
        out_r, out_p = [], []
        for ri, pi in zip(r, p):
            if out_r and ri - out_r[-1] <= merge_tol:
                tot = out_p[-1] + pi
                out_r[-1] = math.sqrt((out_p[-1] * out_r[-1] ** 2 + pi * ri * ri) / tot)
                out_p[-1] = tot
            else:
                out_r.append(float(ri))
                out_p.append(float(pi))
        out_p = np.array(out_p)
        if normalize:
            out_p = out_p / out_p.sum()
        return cls(np.array(out_r), out_p)

    @property
    def includes_zero(self):
        return bool(self.radii[0] == 0.0)

    @property
    def fourth_moment(self):
        return float(np.dot(self.probs, self.radii**4))

    def __len__(self):
        return len(self.radii)

    def to_dict(self, kind="radial", parameters=None):
        return {
            "type": kind,
            "parameters": dict(parameters or {}),
            "points": [{"r": float(r), "p": float(p)} for r, p in zip(self.radii, self.probs)],
        }

    @classmethod
    def from_dict(cls, data):
        pts = data["points"]
        return cls([pt["r"] for pt in pts], [pt["p"] for pt in pts])

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(**kwargs))


@dataclass(frozen=True)
class Constellation:
    """Finite set of K-dimensional complex symbols with probabilities.

    Moments are computed once at construction and stored.
    """

    symbols: np.ndarray
    probabilities: np.ndarray
    mean: np.ndarray = field(init=False)
    covariance: np.ndarray = field(init=False)
    energy: float = field(init=False)
    fourth_moment: float = field(init=False)
    min_distance: float = field(init=False)

    def __post_init__(self):
        x = np.array(self.symbols, dtype=complex)
        if x.ndim == 1:
            x = x[:, None]
        p = np.array(self.probabilities, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[0] != p.size or p.size == 0:
            raise DomainError("symbols must be an (n, K) array matching the probabilities")
        if np.any(~(p > 0)):
            raise DomainError("probabilities must be positive")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise DomainError(f"probabilities sum to {p.sum():.15g}, not 1")
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "symbols", x)
        object.__setattr__(self, "probabilities", p)

        mu = p @ x
        centred = x - mu
        cov = (centred.T * p) @ centred.conj()
        e = np.sum(np.abs(x) ** 2, axis=1)
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "energy", float(p @ e))
        object.__setattr__(self, "fourth_moment", float(p @ e**2))
        object.__setattr__(self, "min_distance", _min_distance(x))

    @property
    def K(self):
        return self.symbols.shape[1]

    @property
    def second_moment(self):
        """E{x x*}, the matrix of s_ij."""
        return (self.symbols.T * self.probabilities) @ self.symbols.conj()

    @property
    def symbol_energies(self):
        return np.sum(np.abs(self.symbols) ** 2, axis=1)

    def entropy(self):
        """Shannon entropy of the symbol distribution in nats."""
        p = self.probabilities
        return float(-np.dot(p, np.log(p)))

    def __len__(self):
        return self.symbols.shape[0]

    def to_dict(self, kind="constellation", parameters=None):
        return {
            "type": kind,
            "parameters": dict(parameters or {}),
            "symbols": [
                {"re": s.real.tolist(), "im": s.imag.tolist(), "p": float(p)}
                for s, p in zip(self.symbols, self.probabilities)
            ],
        }

    @classmethod
    def from_dict(cls, data):
        syms = [np.array(s["re"]) + 1j * np.array(s["im"]) for s in data["symbols"]]
        return cls(np.array(syms), [s["p"] for s in data["symbols"]])

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(**kwargs))


def _min_distance(x):
    n = x.shape[0]
    if n < 2:
        return math.inf
    best = math.inf
    # row blocks keep memory bounded for a few thousand symbols
    for start in range(0, n - 1, 256):
        blk = x[start:start + 256]
        d2 = np.sum(np.abs(blk[:, None, :] - x[None, :, :]) ** 2, axis=2)
        idx = np.arange(blk.shape[0])
        d2[idx, start + idx] = np.inf
        d2[:, :start] = np.inf  # pairs already seen
        best = min(best, float(d2.min()))
    return math.sqrt(best)


def moments(c: Constellation):
    """(energy, fourth_moment, mean, covariance, min_distance) of a constellation."""
    return c.energy, c.fourth_moment, c.mean, c.covariance, c.min_distance


def psk():
    """Symbols uniform on the unit circle."""
    return RadialDistribution([1.0], [1.0])


def uniform_disk(n_levels):
    """Uniform law on the disk of radius sqrt(2), in equal-probability shells.

    r^2 is uniform on [0, 2], so shell k covers r^2 in [2k/n, 2(k+1)/n] and
    sits at its conditional mean square (2k+1)/n.
    """
    if int(n_levels) != n_levels or n_levels < 1:
        raise DomainError("n_levels must be a positive integer")
    n = int(n_levels)
    r2 = (2.0 * np.arange(n) + 1.0) / n
    return RadialDistribution(np.sqrt(r2), np.full(n, 1.0 / n))


def amqam(M):
    """M rings with r_m = m sqrt(6M / ((M+1)(3M^2+M-1))) and p_m = (2m-1)/M^2."""
    if int(M) != M or M < 1:
        raise DomainError("M must be a positive integer")
    M = int(M)
    m = np.arange(1, M + 1, dtype=float)
    radii = m * math.sqrt(6.0 * M / ((M + 1) * (3.0 * M * M + M - 1)))
    probs = (2.0 * m - 1.0) / (M * M)
    return RadialDistribution(radii, probs)


def gaussian_radial(n_points):
    """Unit-energy proper complex Gaussian, quantized in equal-probability shells.

    r^2 ~ Exp(1); shell k spans quantiles k/n..(k+1)/n and carries the
    conditional mean of r^2 over the shell, so the energy is exactly 1.
    """
    if int(n_points) != n_points or n_points < 2:
        raise DomainError("n_points must be an integer >= 2")
    n = int(n_points)
    k = np.arange(n + 1, dtype=float)
    edges = -np.log1p(-k[:-1] / n)
    a = edges
    b = np.r_[edges[1:], np.inf]
    ea, eb = np.exp(-a), np.exp(-b)
    with np.errstate(invalid="ignore"):
        cond = (a * ea - np.where(np.isinf(b), 0.0, b * eb)) / (ea - eb) + 1.0
    return RadialDistribution(np.sqrt(cond), np.full(n, 1.0 / n))


def orthogonal_onoff(K, m, L, sigma2):
    """Zero symbol plus K orthogonal symbols of energy E = 2 m L sigma2."""
    if int(K) != K or K < 1 or int(L) != L or L < 1:
        raise DomainError("K and L must be positive integers")
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    E = 2.0 * m * L * sigma2
    if not E > 1.0:
        raise PreconditionError(f"m must exceed 1/(2 L sigma2) = {1.0 / (2 * L * sigma2):.6g}")
    K = int(K)
    symbols = np.zeros((K + 1, K), dtype=complex)
    symbols[1:] = math.sqrt(E) * np.eye(K)
    probs = np.r_[1.0 - 1.0 / E, np.full(K, 1.0 / (K * E))]
    return Constellation(symbols, probs)


def lift_radial(rd: RadialDistribution, phases_per_ring):
    """K=1 constellation with Q equally spaced phases on every ring."""
    if int(phases_per_ring) != phases_per_ring or phases_per_ring < 1:
        raise DomainError("phases_per_ring must be a positive integer")
    Q = int(phases_per_ring)
    return _lift(rd, [Q] * len(rd))


def amqam_lift(M, base=4):
    """Finite AMQAM with base*(2m-1) equally likely phases on ring m.

    Every one of the base*M^2 symbols has probability 1/(base*M^2), which
    reproduces the ring probabilities (2m-1)/M^2.
    """
    rd = amqam(M)
    return _lift(rd, [base * (2 * m - 1) for m in range(1, len(rd) + 1)])


def _lift(rd, counts):
    syms, probs = [], []
    for r, p, q in zip(rd.radii, rd.probs, counts):
        if r == 0.0:
            syms.append(0.0 + 0.0j)
            probs.append(p)
            continue
        ph = np.exp(2j * np.pi * np.arange(q) / q)
        syms.extend(r * ph)
        probs.extend([p / q] * q)
    probs = np.array(probs)
    return Constellation(np.array(syms)[:, None], probs / probs.sum())


def product_constellation(base: Constellation, K):
    """K independent copies of a K=1 constellation, scaled to total energy base.energy.

    Used to build K-dimensional AMQAM symbol sets with covariance I/K.
    """
    if base.K != 1:
        raise DomainError("product_constellation expects a one-dimensional base")
    if int(K) != K or K < 1:
        raise DomainError("K must be a positive integer")
    K = int(K)
    s = base.symbols[:, 0] / math.sqrt(K)
    n = len(s)
    grids = np.meshgrid(*([np.arange(n)] * K), indexing="ij")
    idx = np.stack([g.reshape(-1) for g in grids], axis=1)
    probs = np.prod(base.probabilities[idx], axis=1)
    return Constellation(s[idx], probs / probs.sum())
