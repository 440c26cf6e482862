"""Slow, independent reference computations used only by the tests.

Nothing here shares code with the library: densities come from scipy.stats,
Bessel values from scipy.special and integrals from scipy.integrate.quad.
"""

import math

import numpy as np
from scipy import integrate, special, stats


def log_f_reference(x, y, r, rho, L, beta, sigma2, u):
    qr = beta * r**2 + L * sigma2
    qrho = beta * rho**2 + L * sigma2
    c = L * rho**2 * u / qrho
    z = 2.0 * np.sqrt(0.5 * x * c * qr / qrho)
    return (L * np.log(qr / qrho) + np.log(special.i0e(z)) + z
            - ((x + y) * qr / (2.0 * qrho) + c))


def mi_radial_reference(radii, probs, L, beta, sigma2, u, epsabs=1e-11):
    radii = np.asarray(radii, float)
    probs = np.asarray(probs, float)
    total = 0.0
    for rt, pt in zip(radii, probs):
        lam = 2.0 * L * rt**2 * u / (beta * rt**2 + L * sigma2)
        xdist = stats.ncx2(2, lam) if lam > 0 else stats.chi2(2)
        xlo, xhi = xdist.ppf(1e-17), xdist.isf(1e-17)

        def inner(x, y):
            vals = np.log(probs) + np.array(
                [log_f_reference(x, y, rt, rj, L, beta, sigma2, u) for rj in radii])
            return special.logsumexp(vals)

        if L == 1:
            val, _ = integrate.quad(lambda x: inner(x, 0.0) * xdist.pdf(x), xlo, xhi,
                                    epsabs=epsabs, epsrel=1e-11, limit=400)
        else:
            ydist = stats.chi2(2 * L - 2)
            yhi = ydist.isf(1e-17)
            val, _ = integrate.dblquad(
                lambda y, x: inner(x, y) * xdist.pdf(x) * ydist.pdf(y),
                xlo, xhi, 0.0, yhi, epsabs=epsabs, epsrel=1e-10)
        total += pt * (-L - val)
    return total


def lemma3_reference(K, m, L, beta, sigma2, u):
    """On-off bound by nested scipy quadrature in plain (not log) arithmetic; moderate K only."""
    from scipy.stats import norm

    E = 2 * m * L * sigma2
    c = (E - 1) * (2 * m * beta + 1) ** L
    s_y = 2 * math.sqrt(L * (m * m * beta * beta + (2 * m * m * beta + m) * u))
    mu_y = 2 * m * L * (beta + u)

    def sp(t):
        return np.logaddexp(0.0, t)

    shift = math.log(K) + math.log(c) - mu_y
    if s_y > 0:
        t1 = integrate.quad(lambda z: norm.pdf(z) * sp(shift - s_y * z), -np.inf, np.inf,
                            epsabs=1e-12, limit=400)[0]
    else:
        t1 = sp(shift)
    t2 = 0.0
    if K > 1:
        a = 2 * math.sqrt(L * (m * m * beta * beta + m * u)) / (2 * m * beta + 1)
        b = 2 * m * beta * L / (2 * m * beta + 1)

        def f_m(x):
            return (K - 1) * norm.pdf(x) * norm.cdf(x) ** (K - 2)

        def inner(ly):
            return integrate.quad(
                lambda x: f_m(x) * sp(math.log(K - 1) + a * x + b - np.logaddexp(ly, math.log(K * c))),
                -12, 12, epsabs=1e-12, limit=400)[0]

        if s_y > 0:
            t2 = integrate.quad(lambda z: norm.pdf(z) * inner(mu_y + s_y * z), -12, 12,
                                epsabs=1e-11, limit=400)[0]
        else:
            t2 = inner(mu_y)
    return (math.log(K * E) - t1 - t2) / E
