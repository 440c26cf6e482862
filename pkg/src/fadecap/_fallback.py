"""Vectorized numpy implementation of the radial mutual-information kernel.

Used when the compiled extension is unavailable.  For an evaluation radius
r and support {(r_j, p_j)} with q(r) = beta r^2 + L sigma2 and
a(r) = L r^2 u / q(r), the pointwise information density is

    i(r) = -L - E[ logsumexp_j( ln p_j + ln f(x, y, r, r_j) ) ]

with x ~ noncentral chi2_2(2 a(r)) and y ~ chi2_{2L-2}.  The x expectation
runs over rho = sqrt(x), whose law is Rician, on a Gauss-Legendre grid of
half-width `half_width` around its centre; the y expectation uses a
rule passed in by the caller.
"""

import numpy as np
from scipy.special import logsumexp

from .numerics import log_bessel_i0


def log_bessel_i0_array(z):
    return log_bessel_i0(np.asarray(z, dtype=float))


def mixture_information(r_eval, r_supp, logp_supp, L, beta, sigma2, u,
                        gl_nodes, gl_weights, half_width, y_nodes, y_weights):
    r_eval = np.asarray(r_eval, dtype=float)
    r_supp = np.asarray(r_supp, dtype=float)
    logp_supp = np.asarray(logp_supp, dtype=float)
    qj = beta * r_supp**2 + L * sigma2
    aj = L * r_supp**2 * u / qj
    out = np.empty(len(r_eval))
    for e, r in enumerate(r_eval):
        qt = beta * r * r + L * sigma2
        at = L * r * r * u / qt
        nu = np.sqrt(2.0 * at)
        lo = max(nu - half_width, 0.0)
        hi = nu + half_width
        rho = 0.5 * (hi + lo) + 0.5 * (hi - lo) * gl_nodes
        with np.errstate(divide="ignore"):
            lw = np.log(gl_weights * rho) + log_bessel_i0(rho * nu) - 0.5 * (rho**2 + nu**2)
        w = np.exp(lw - lw.max())
        x = rho**2
        ratio = qt / qj
        slope = 0.5 * ratio
        # b[k, j]: log mixture term at y = 0
        b = (logp_supp + L * np.log(ratio)
             + log_bessel_i0(np.sqrt(2.0 * np.outer(x, aj * ratio)))
             - np.outer(x, slope) - aj)
        terms = b[:, None, :] - np.asarray(y_nodes)[None, :, None] * slope
        inner = logsumexp(terms, axis=2) @ np.asarray(y_weights)
        out[e] = -L - np.dot(w, inner) / w.sum()
    return out
