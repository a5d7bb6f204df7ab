# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled score-driven filter recursion.

Twin of ``skewcast._recursion_py.filter_core``; the information matrix is
recomputed every period, so the sequential pass is the estimation hot
path.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isfinite, isinf, log, log1p, sqrt

cnp.import_array()

cdef double W0 = 1.0 / 3.0
cdef double W1 = 2.0 / 3.0
cdef double W2 = 1.0
cdef double W3 = 2.0 / 3.0
cdef double W4 = 1.0 / 3.0
cdef double WSQ0 = 1.0 / 9.0
cdef double WSQ1 = 4.0 / 9.0
cdef double WSQ2 = 1.0
cdef double WSQ3 = 4.0 / 9.0
cdef double WSQ4 = 1.0 / 9.0
cdef double STATE_BOUND = 1e6


cdef inline double _logistic(double x) nogil:
    cdef double e
    if x >= 0.0:
        e = exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + exp(x))


cdef inline bint _obs_terms(double yv, double mu, double sig, double alpha,
                            double nu, double k, double* out) nogil:
    """Fill out = (ll, dmu, dsig, dalp, imu, isig, ialp); False on overflow."""
    cdef double zv = yv - mu
    cdef double bs, x, q, kern, r, w, dmu, dalp, r_i, s_i, sig2
    if zv <= 0.0:
        bs = 2.0 * alpha * sig * k
    else:
        bs = 2.0 * (1.0 - alpha) * sig * k
    x = zv / bs
    if isinf(nu):
        kern = -0.5 * x * x
        dmu = x / bs
        w = x * x
    else:
        q = x * x / nu
        kern = -0.5 * (nu + 1.0) * log1p(q)
        r = (nu + 1.0) / (1.0 + q)
        dmu = r * x / (nu * bs)
        w = r * x * x / nu
    out[0] = -log(sig) + kern
    out[1] = dmu
    out[2] = (w - 1.0) / sig
    if zv <= 0.0:
        dalp = w / alpha
    else:
        dalp = -w / (1.0 - alpha)
    out[3] = dalp
    if isinf(nu):
        r_i = 1.0
        s_i = 1.0
    else:
        r_i = (nu + 1.0) / (nu + 3.0)
        s_i = nu / (nu + 3.0)
    sig2 = sig * sig
    out[4] = (r_i / (alpha * k * k) + r_i / ((1.0 - alpha) * k * k)) / sig2
    out[5] = 2.0 * s_i / sig2
    out[6] = 3.0 * r_i * (1.0 / alpha + 1.0 / (1.0 - alpha))
    return isfinite(out[0])


cdef inline void _link_values(double* z, double lam_mu, double lam_sig,
                              double lam_alp, bint agg1, bint agg2, bint sagg,
                              double* lb1, double* lb2, double* sb,
                              double* out) nogil:
    """out = (mu1, sig1, alp1, mu2, sig2, alp2, ml1, ml2, msq1)."""
    cdef double ml1 = z[0] + z[2]
    cdef double ml2 = z[1] + lam_mu * z[2]
    cdef double ls1 = z[3] + z[5]
    cdef double ls2 = z[4] + lam_sig * z[5]
    cdef double la1 = z[6] + z[8]
    cdef double la2 = z[7] + lam_alp * z[8]
    cdef double msq1 = exp(2.0 * ls1)
    cdef double var_q
    if agg1:
        out[0] = W0 * ml1 + W1 * lb1[0] + W2 * lb1[1] + W3 * lb1[2] + W4 * lb1[3]
    else:
        out[0] = ml1
    if sagg:
        var_q = (WSQ0 * msq1 + WSQ1 * sb[0] + WSQ2 * sb[1] + WSQ3 * sb[2]
                 + WSQ4 * sb[3])
        out[1] = sqrt(var_q)
    else:
        out[1] = exp(ls1)
    out[2] = _logistic(la1)
    if agg2:
        out[3] = W0 * ml2 + W1 * lb2[0] + W2 * lb2[1] + W3 * lb2[2] + W4 * lb2[3]
    else:
        out[3] = ml2
    out[4] = exp(ls2)
    out[5] = _logistic(la2)
    out[6] = ml1
    out[7] = ml2
    out[8] = msq1


cdef inline bint _params_ok(double sig1, double alp1, double sig2,
                            double alp2) nogil:
    return (isfinite(sig1) and sig1 > 0.0 and isfinite(sig2) and sig2 > 0.0
            and 0.0 < alp1 < 1.0 and 0.0 < alp2 < 1.0)


def filter_core(double[:, ::1] y, cnp.uint8_t[:, ::1] delta,
                double[::1] z0, double[::1] b, double[::1] a, double[::1] d,
                double[::1] lam, double[::1] nu, double[::1] kconst,
                cnp.uint8_t[::1] loc_agg, int gdp_scale_agg):
    """Sequential filter pass; see the pure twin for the full contract."""
    cdef Py_ssize_t n = y.shape[1]
    cdef cnp.ndarray[double, ndim=2] z_pred = np.zeros((n, 9))
    cdef cnp.ndarray[double, ndim=2] z_filt = np.zeros((n, 9))
    cdef cnp.ndarray[double, ndim=3] par_pred = np.zeros((n, 2, 3))
    cdef cnp.ndarray[double, ndim=3] par_filt = np.zeros((n, 2, 3))
    cdef cnp.ndarray[double, ndim=2] ll = np.zeros((2, n))
    cdef cnp.ndarray[double, ndim=2] s_path = np.zeros((n, 9))
    cdef double[:, ::1] z_pred_v = z_pred
    cdef double[:, ::1] z_filt_v = z_filt
    cdef double[:, :, ::1] par_pred_v = par_pred
    cdef double[:, :, ::1] par_filt_v = par_filt
    cdef double[:, ::1] ll_v = ll
    cdef double[:, ::1] s_path_v = s_path
    cdef double lam_mu = lam[0]
    cdef double lam_sig = lam[1]
    cdef double lam_alp = lam[2]
    cdef double nu1 = nu[0]
    cdef double nu2 = nu[1]
    cdef double k1 = kconst[0]
    cdef double k2 = kconst[1]
    cdef bint agg1 = loc_agg[0] != 0
    cdef bint agg2 = loc_agg[1] != 0
    cdef bint sagg = gdp_scale_agg != 0
    cdef double z[9]
    cdef double zf[9]
    cdef double znext[9]
    cdef double bvec[9]
    cdef double avec[9]
    cdef double dvec[9]
    cdef double g[9]
    cdef double q[9]
    cdef double s[9]
    cdef double lb1[4]
    cdef double lb2[4]
    cdef double sb[4]
    cdef double vals[9]
    cdef double fvals[9]
    cdef double terms[7]
    cdef double jm, js, ja, tmp
    cdef Py_ssize_t t, k
    cdef int bad = -1
    cdef bint ok, fail
    for k in range(9):
        z[k] = z0[k]
        bvec[k] = b[k]
        avec[k] = a[k]
        dvec[k] = d[k]
    cdef double ml1_0 = z[0] + z[2]
    cdef double ml2_0 = z[1] + lam_mu * z[2]
    cdef double ls1_0 = z[3] + z[5]
    for k in range(4):
        lb1[k] = ml1_0
        lb2[k] = ml2_0
        sb[k] = exp(2.0 * ls1_0)
    with nogil:
        for t in range(n):
            ok = True
            for k in range(9):
                if not isfinite(z[k]) or fabs(z[k]) >= STATE_BOUND:
                    ok = False
                    break
            if not ok:
                bad = <int>t
                break
            _link_values(z, lam_mu, lam_sig, lam_alp, agg1, agg2, sagg,
                         lb1, lb2, sb, vals)
            if not _params_ok(vals[1], vals[2], vals[4], vals[5]):
                bad = <int>t
                break
            for k in range(9):
                z_pred_v[t, k] = z[k]
            par_pred_v[t, 0, 0] = vals[0]
            par_pred_v[t, 0, 1] = vals[1]
            par_pred_v[t, 0, 2] = vals[2]
            par_pred_v[t, 1, 0] = vals[3]
            par_pred_v[t, 1, 1] = vals[4]
            par_pred_v[t, 1, 2] = vals[5]
            for k in range(9):
                g[k] = 0.0
                q[k] = 0.0
            fail = False
            if delta[0, t] != 0:
                if not _obs_terms(y[0, t], vals[0], vals[1], vals[2], nu1, k1,
                                  terms):
                    fail = True
                ll_v[0, t] = terms[0]
                jm = W0 if agg1 else 1.0
                g[0] += terms[1] * jm
                g[2] += terms[1] * jm
                q[0] += terms[4] * jm * jm
                q[2] += terms[4] * jm * jm
                if sagg:
                    js = WSQ0 * vals[8] / vals[1]
                else:
                    js = vals[1]
                g[3] += terms[2] * js
                g[5] += terms[2] * js
                q[3] += terms[5] * js * js
                q[5] += terms[5] * js * js
                ja = -vals[2] * (1.0 - vals[2])
                g[6] += terms[3] * ja
                g[8] += terms[3] * ja
                q[6] += terms[6] * ja * ja
                q[8] += terms[6] * ja * ja
            if delta[1, t] != 0:
                if not _obs_terms(y[1, t], vals[3], vals[4], vals[5], nu2, k2,
                                  terms):
                    fail = True
                ll_v[1, t] = terms[0]
                jm = W0 if agg2 else 1.0
                g[1] += terms[1] * jm
                g[2] += terms[1] * jm * lam_mu
                q[1] += terms[4] * jm * jm
                tmp = jm * lam_mu
                q[2] += terms[4] * tmp * tmp
                g[4] += terms[2] * vals[4]
                g[5] += terms[2] * vals[4] * lam_sig
                q[4] += terms[5] * vals[4] * vals[4]
                tmp = vals[4] * lam_sig
                q[5] += terms[5] * tmp * tmp
                ja = -vals[5] * (1.0 - vals[5])
                g[7] += terms[3] * ja
                g[8] += terms[3] * ja * lam_alp
                q[7] += terms[6] * ja * ja
                tmp = ja * lam_alp
                q[8] += terms[6] * tmp * tmp
            if fail:
                bad = <int>t
                break
            for k in range(9):
                if q[k] > 0.0:
                    s[k] = g[k] / q[k]
                else:
                    s[k] = 0.0
                s_path_v[t, k] = s[k]
                zf[k] = z[k] + dvec[k] * s[k]
                z_filt_v[t, k] = zf[k]
            _link_values(zf, lam_mu, lam_sig, lam_alp, agg1, agg2, sagg,
                         lb1, lb2, sb, fvals)
            if not _params_ok(fvals[1], fvals[2], fvals[4], fvals[5]):
                bad = <int>t
                break
            par_filt_v[t, 0, 0] = fvals[0]
            par_filt_v[t, 0, 1] = fvals[1]
            par_filt_v[t, 0, 2] = fvals[2]
            par_filt_v[t, 1, 0] = fvals[3]
            par_filt_v[t, 1, 1] = fvals[4]
            par_filt_v[t, 1, 2] = fvals[5]
            for k in range(9):
                znext[k] = bvec[k] * z[k] + avec[k] * s[k]
                z[k] = znext[k]
            lb1[3] = lb1[2]
            lb1[2] = lb1[1]
            lb1[1] = lb1[0]
            lb1[0] = vals[6]
            lb2[3] = lb2[2]
            lb2[2] = lb2[1]
            lb2[1] = lb2[0]
            lb2[0] = vals[7]
            sb[3] = sb[2]
            sb[2] = sb[1]
            sb[1] = sb[0]
            sb[0] = vals[8]
    z_final = np.empty(9)
    buf_loc = np.empty((2, 4))
    buf_scale = np.empty(4)
    for k in range(9):
        z_final[k] = z[k]
    for k in range(4):
        buf_loc[0, k] = lb1[k]
        buf_loc[1, k] = lb2[k]
        buf_scale[k] = sb[k]
    return (z_pred, z_filt, par_pred, par_filt, ll, s_path, z_final, buf_loc,
            buf_scale, bad)
