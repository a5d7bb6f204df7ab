"""Pure NumPy/math implementation of the score-driven filter recursion.

Mirrors the compiled extension ``skewcast._recursion`` operation for
operation; used when the extension is unavailable and as the reference in
equivalence tests. Sequential in t by construction.
"""

import math

import numpy as np

# five-term temporal aggregation weights, current month first
_W = (1.0 / 3.0, 2.0 / 3.0, 1.0, 2.0 / 3.0, 1.0 / 3.0)
_WSQ = (1.0 / 9.0, 4.0 / 9.0, 1.0, 4.0 / 9.0, 1.0 / 9.0)

_STATE_BOUND = 1e6


def _logistic(x):
    # numerically stable 1/(1+exp(x))
    if x >= 0.0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def _obs_terms(yv, mu, sig, alpha, nu, k):
    """Log density, score and printed information for one observation."""
    zv = yv - mu
    if zv <= 0.0:
        bs = 2.0 * alpha * sig * k
    else:
        bs = 2.0 * (1.0 - alpha) * sig * k
    x = zv / bs
    if math.isinf(nu):
        kern = -0.5 * x * x
        dmu = x / bs
        w = x * x
    else:
        q = x * x / nu
        kern = -0.5 * (nu + 1.0) * math.log1p(q)
        r = (nu + 1.0) / (1.0 + q)
        dmu = r * x / (nu * bs)
        w = r * x * x / nu
    ll = -math.log(sig) + kern
    dsig = (w - 1.0) / sig
    dalp = w / alpha if zv <= 0.0 else -w / (1.0 - alpha)
    if math.isinf(nu):
        r_i = 1.0
        s_i = 1.0
    else:
        r_i = (nu + 1.0) / (nu + 3.0)
        s_i = nu / (nu + 3.0)
    sig2 = sig * sig
    imu = (r_i / (alpha * k * k) + r_i / ((1.0 - alpha) * k * k)) / sig2
    isig = 2.0 * s_i / sig2
    ialp = 3.0 * r_i * (1.0 / alpha + 1.0 / (1.0 - alpha))
    return ll, dmu, dsig, dalp, imu, isig, ialp


def _link_values(z, lam_mu, lam_sig, lam_alp, agg1, agg2, sagg, lb1, lb2, sb):
    ml1 = z[0] + z[2]
    ml2 = z[1] + lam_mu * z[2]
    ls1 = z[3] + z[5]
    ls2 = z[4] + lam_sig * z[5]
    la1 = z[6] + z[8]
    la2 = z[7] + lam_alp * z[8]
    if agg1:
        mu1 = _W[0] * ml1 + _W[1] * lb1[0] + _W[2] * lb1[1] + _W[3] * lb1[2] + _W[4] * lb1[3]
    else:
        mu1 = ml1
    if agg2:
        mu2 = _W[0] * ml2 + _W[1] * lb2[0] + _W[2] * lb2[1] + _W[3] * lb2[2] + _W[4] * lb2[3]
    else:
        mu2 = ml2
    msq1 = math.exp(2.0 * ls1)
    if sagg:
        var_q = (
            _WSQ[0] * msq1
            + _WSQ[1] * sb[0]
            + _WSQ[2] * sb[1]
            + _WSQ[3] * sb[2]
            + _WSQ[4] * sb[3]
        )
        sig1 = math.sqrt(var_q)
    else:
        sig1 = math.exp(ls1)
    sig2 = math.exp(ls2)
    alp1 = _logistic(la1)
    alp2 = _logistic(la2)
    return mu1, sig1, alp1, mu2, sig2, alp2, ml1, ml2, msq1


def _params_ok(sig1, alp1, sig2, alp2):
    return (
        math.isfinite(sig1)
        and sig1 > 0.0
        and math.isfinite(sig2)
        and sig2 > 0.0
        and 0.0 < alp1 < 1.0
        and 0.0 < alp2 < 1.0
    )


def filter_core(y, delta, z0, b, a, d, lam, nu, kconst, loc_agg, gdp_scale_agg):
    """One sequential filter pass.

    Parameters are plain arrays: y (2,N) with NaN at missing slots, delta
    (2,N) in {0,1}, nine-vectors z0/b/a/d, loadings lam (3,), per-series
    tails nu (2,) with inf allowed and their K constants kconst (2,),
    location-aggregation flags loc_agg (2,), and the GDP variance
    aggregation switch. Returns predicted/filtered state and parameter
    paths, per-series log likelihoods, scaled scores, the final predicted
    state, the final lag buffers and the first bad period index (-1 when
    the pass is clean).
    """
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta)
    n = y.shape[1]
    z_pred = np.zeros((n, 9))
    z_filt = np.zeros((n, 9))
    par_pred = np.zeros((n, 2, 3))
    par_filt = np.zeros((n, 2, 3))
    ll = np.zeros((2, n))
    s_path = np.zeros((n, 9))
    lam_mu, lam_sig, lam_alp = float(lam[0]), float(lam[1]), float(lam[2])
    nu1, nu2 = float(nu[0]), float(nu[1])
    k1, k2 = float(kconst[0]), float(kconst[1])
    agg1, agg2 = bool(loc_agg[0]), bool(loc_agg[1])
    sagg = bool(gdp_scale_agg)
    bvec = [float(v) for v in b]
    avec = [float(v) for v in a]
    dvec = [float(v) for v in d]
    z = [float(v) for v in z0]
    ml1_0 = z[0] + z[2]
    ml2_0 = z[1] + lam_mu * z[2]
    ls1_0 = z[3] + z[5]
    lb1 = [ml1_0] * 4
    lb2 = [ml2_0] * 4
    sb = [math.exp(2.0 * ls1_0)] * 4
    bad = -1
    for t in range(n):
        if not all(math.isfinite(v) and abs(v) < _STATE_BOUND for v in z):
            bad = t
            break
        try:
            mu1, sig1, alp1, mu2, sig2, alp2, ml1, ml2, msq1 = _link_values(
                z, lam_mu, lam_sig, lam_alp, agg1, agg2, sagg, lb1, lb2, sb
            )
        except OverflowError:
            bad = t
            break
        if not _params_ok(sig1, alp1, sig2, alp2):
            bad = t
            break
        for k in range(9):
            z_pred[t, k] = z[k]
        par_pred[t, 0, 0] = mu1
        par_pred[t, 0, 1] = sig1
        par_pred[t, 0, 2] = alp1
        par_pred[t, 1, 0] = mu2
        par_pred[t, 1, 1] = sig2
        par_pred[t, 1, 2] = alp2
        g = [0.0] * 9
        q = [0.0] * 9
        fail = False
        if delta[0, t]:
            terms = _obs_terms(float(y[0, t]), mu1, sig1, alp1, nu1, k1)
            ll1, dmu, dsig, dalp, imu, isig, ialp = terms
            if not math.isfinite(ll1):
                fail = True
            ll[0, t] = ll1
            jm = _W[0] if agg1 else 1.0
            g[0] += dmu * jm
            g[2] += dmu * jm
            q[0] += imu * jm * jm
            q[2] += imu * jm * jm
            js = _WSQ[0] * msq1 / sig1 if sagg else sig1
            g[3] += dsig * js
            g[5] += dsig * js
            q[3] += isig * js * js
            q[5] += isig * js * js
            ja = -alp1 * (1.0 - alp1)
            g[6] += dalp * ja
            g[8] += dalp * ja
            q[6] += ialp * ja * ja
            q[8] += ialp * ja * ja
        if delta[1, t]:
            terms = _obs_terms(float(y[1, t]), mu2, sig2, alp2, nu2, k2)
            ll2, dmu, dsig, dalp, imu, isig, ialp = terms
            if not math.isfinite(ll2):
                fail = True
            ll[1, t] = ll2
            jm = _W[0] if agg2 else 1.0
            g[1] += dmu * jm
            g[2] += dmu * jm * lam_mu
            q[1] += imu * jm * jm
            q[2] += imu * (jm * lam_mu) ** 2
            g[4] += dsig * sig2
            g[5] += dsig * sig2 * lam_sig
            q[4] += isig * sig2 * sig2
            q[5] += isig * (sig2 * lam_sig) ** 2
            ja = -alp2 * (1.0 - alp2)
            g[7] += dalp * ja
            g[8] += dalp * ja * lam_alp
            q[7] += ialp * ja * ja
            q[8] += ialp * (ja * lam_alp) ** 2
        if fail:
            bad = t
            break
        s = [g[k] / q[k] if q[k] > 0.0 else 0.0 for k in range(9)]
        zf = [z[k] + dvec[k] * s[k] for k in range(9)]
        for k in range(9):
            s_path[t, k] = s[k]
            z_filt[t, k] = zf[k]
        try:
            fvals = _link_values(
                zf, lam_mu, lam_sig, lam_alp, agg1, agg2, sagg, lb1, lb2, sb
            )
        except OverflowError:
            bad = t
            break
        if not _params_ok(fvals[1], fvals[2], fvals[4], fvals[5]):
            bad = t
            break
        par_filt[t, 0, 0] = fvals[0]
        par_filt[t, 0, 1] = fvals[1]
        par_filt[t, 0, 2] = fvals[2]
        par_filt[t, 1, 0] = fvals[3]
        par_filt[t, 1, 1] = fvals[4]
        par_filt[t, 1, 2] = fvals[5]
        z = [bvec[k] * z[k] + avec[k] * s[k] for k in range(9)]
        lb1 = [ml1, lb1[0], lb1[1], lb1[2]]
        lb2 = [ml2, lb2[0], lb2[1], lb2[2]]
        sb = [msq1, sb[0], sb[1], sb[2]]
    z_final = np.array(z, dtype=float)
    buf_loc = np.array([lb1, lb2], dtype=float)
    buf_scale = np.array(sb, dtype=float)
    return (
        z_pred,
        z_filt,
        par_pred,
        par_filt,
        ll,
        s_path,
        z_final,
        buf_loc,
        buf_scale,
        bad,
    )
