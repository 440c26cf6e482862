# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loop of the radial mutual-information integral.

Mirrors ``fadecap._fallback`` line for line; see that module for the math.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fabs, INFINITY

cnp.import_array()

cdef int SERIES_TERMS = 40
cdef double BRANCH = 20.0
cdef double LOG_2PI = 1.8378770664093453

# asymptotic coefficients c_k = prod_{j<=k} (2j-1)^2 / (8j), k = 0..16
cdef double[17] ASYM
cdef double[41] INV_SQ
cdef int _i
ASYM[0] = 1.0
for _i in range(1, 17):
    ASYM[_i] = ASYM[_i - 1] * (2 * _i - 1) * (2 * _i - 1) / (8.0 * _i)
for _i in range(1, 41):
    INV_SQ[_i] = 1.0 / (_i * _i)


cdef inline double log_i0(double z) noexcept nogil:
    cdef double zz, term, total, inv, poly
    cdef int k
    if z == 0.0:
        return 0.0
    if z < BRANCH:
        zz = 0.25 * z * z
        term = 1.0
        total = 1.0
        for k in range(1, SERIES_TERMS + 1):
            term = term * zz * INV_SQ[k]
            total = total + term
            if term < 1e-17 * total:
                break
        return log(total)
    inv = 1.0 / z
    poly = ASYM[16]
    for k in range(15, -1, -1):
        poly = poly * inv + ASYM[k]
    return z - 0.5 * (LOG_2PI + log(z)) + log(poly)


def log_bessel_i0_array(const double[::1] z):
    cdef Py_ssize_t i, n = z.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = log_i0(z[i])
    return out


def mixture_information(const double[::1] r_eval, const double[::1] r_supp,
                        const double[::1] logp_supp, int L, double beta, double sigma2, double u,
                        const double[::1] gl_nodes, const double[::1] gl_weights, double half_width,
                        const double[::1] y_nodes, const double[::1] y_weights):
    cdef Py_ssize_t ne = r_eval.shape[0], ns = r_supp.shape[0]
    cdef Py_ssize_t nx = gl_nodes.shape[0], ny = y_nodes.shape[0]
    cdef Py_ssize_t e, j, k, m
    cdef double Ls2 = L * sigma2
    cdef double qt, at, nu, lo, hi, half, mid, rho, x, wsum, total, acc, mx, s, v, lw
    out = np.empty(ne)
    cdef double[::1] o = out
    qj_arr = np.empty(ns)
    aj_arr = np.empty(ns)
    b_arr = np.empty(ns)
    sl_arr = np.empty(ns)
    c0_arr = np.empty(ns)
    cb_arr = np.empty(ns)
    rho_arr = np.empty(nx)
    w_arr = np.empty(nx)
    cdef double[::1] qj = qj_arr, aj = aj_arr, b = b_arr, sl = sl_arr
    cdef double[::1] c0 = c0_arr, cb = cb_arr
    cdef double[::1] rhos = rho_arr, ws = w_arr

    with nogil:
        for j in range(ns):
            qj[j] = beta * r_supp[j] * r_supp[j] + Ls2
            aj[j] = L * r_supp[j] * r_supp[j] * u / qj[j]
        for e in range(ne):
            qt = beta * r_eval[e] * r_eval[e] + Ls2
            at = L * r_eval[e] * r_eval[e] * u / qt
            nu = sqrt(2.0 * at)
            lo = nu - half_width
            if lo < 0.0:
                lo = 0.0
            hi = nu + half_width
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            # Rician weights for rho = sqrt(x), normalized to unit mass
            mx = -INFINITY
            for k in range(nx):
                rho = mid + half * gl_nodes[k]
                rhos[k] = rho
                if rho > 0.0:
                    lw = log(gl_weights[k] * rho) + log_i0(rho * nu) - 0.5 * (rho * rho + nu * nu)
                else:
                    lw = -INFINITY
                ws[k] = lw
                if lw > mx:
                    mx = lw
            wsum = 0.0
            for k in range(nx):
                ws[k] = exp(ws[k] - mx)
                wsum = wsum + ws[k]
            for j in range(ns):
                sl[j] = qt / (2.0 * qj[j])
                # constant part of the log-kernel and the Bessel argument per unit rho
                c0[j] = logp_supp[j] + L * log(qt / qj[j]) - aj[j]
                cb[j] = sqrt(2.0 * aj[j] * qt / qj[j])
            total = 0.0
            for k in range(nx):
                x = rhos[k] * rhos[k]
                for j in range(ns):
                    b[j] = c0[j] + log_i0(rhos[k] * cb[j]) - x * sl[j]
                if ny == 1 and y_nodes[0] == 0.0:
                    mx = -INFINITY
                    for j in range(ns):
                        if b[j] > mx:
                            mx = b[j]
                    s = 0.0
                    for j in range(ns):
                        s = s + exp(b[j] - mx)
                    total = total + ws[k] * y_weights[0] * (mx + log(s))
                    continue
                acc = 0.0
                for m in range(ny):
                    mx = -INFINITY
                    for j in range(ns):
                        v = b[j] - y_nodes[m] * sl[j]
                        if v > mx:
                            mx = v
                    s = 0.0
                    for j in range(ns):
                        s = s + exp(b[j] - y_nodes[m] * sl[j] - mx)
                    acc = acc + y_weights[m] * (mx + log(s))
                total = total + ws[k] * acc
            o[e] = -L - total / wsum
    return out
