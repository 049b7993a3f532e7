"""Compiled inner loops of the incremental decoder (forward and reverse sweep).

Both sweeps are inherently sequential: each emitted payload is the next
input.  Keeping them in plain loops compiled by numba removes the Python
overhead of a few dozen tiny array calls per token.  Shapes: ``L`` blocks,
``P`` positions (tokens + 1), ``d`` model width, ``H`` heads; per-head
slices of q/k/v are contiguous column ranges.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LN_EPS = 1e-5


@njit(cache=True)
def _ln(x, g, b, xhat_out, a_out):
    n = x.shape[0]
    mu = x.sum() / n
    var = 0.0
    for i in range(n):
        c = x[i] - mu
        var += c * c
    inv = 1.0 / np.sqrt(var / n + LN_EPS)
    for i in range(n):
        xh = (x[i] - mu) * inv
        xhat_out[i] = xh
        a_out[i] = xh * g[i] + b[i]
    return inv


@njit(cache=True)
def _ln_back(dxhat, xhat, inv):
    n = dxhat.shape[0]
    m1 = dxhat.sum() / n
    m2 = np.dot(dxhat, xhat) / n
    return inv * (dxhat - m1 - xhat * m2)


@njit(cache=True)
def _softplus(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        v = x[i]
        out[i] = v + np.log1p(np.exp(-v)) if v > 0 else np.log1p(np.exp(v))
    return out


@njit(cache=True)
def _sigmoid(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        v = x[i]
        if v >= 0:
            out[i] = 1.0 / (1.0 + np.exp(-v))
        else:
            e = np.exp(v)
            out[i] = e / (1.0 + e)
    return out


@njit(cache=True)
def forward(x0, x1, pos, S, Wp, ln1g, ln1b, Wq, Wk, Wv, Wo, bo, ln2g, ln2b, W1, b1, W2, b2,
            lnfg, lnfb, Wg, bg, base, gidx, mask, noise, Wlv, blv, use_noise, H):
    L = Wq.shape[0]
    P = pos.shape[0]
    d = pos.shape[1]
    ff = W1.shape[2]
    dc = Wp.shape[0]
    n_tok = P - 1
    dh = d // H
    scale = 1.0 / np.sqrt(dh)

    xh1 = np.zeros((L, P, d))
    inv1 = np.zeros((L, P))
    a1 = np.zeros((L, P, d))
    Qh = np.zeros((L, H, P, dh))
    Kh = np.zeros((L, H, P, dh))
    Vh = np.zeros((L, H, P, dh))
    att = np.zeros((L, H, P, P))
    attT = np.zeros((L, H, P, P))
    o_cat = np.zeros((L, P, d))
    xh2 = np.zeros((L, P, d))
    inv2 = np.zeros((L, P))
    a2 = np.zeros((L, P, d))
    u = np.zeros((L, P, ff))
    s = np.zeros((L, P, ff))
    xhf = np.zeros((P, d))
    invf = np.zeros(P)
    hid = np.zeros((n_tok, d))
    pay = np.zeros((n_tok, dc))
    hf = np.zeros(d)
    o = np.zeros(d)

    for p in range(P):
        if p == 0:
            x = x0.copy()
        elif p == 1:
            x = x1.copy()
        else:
            x = np.dot(pay[p - 2], Wp) + S[p - 2] + pos[p]
        for k in range(L):
            inv1[k, p] = _ln(x, ln1g[k], ln1b[k], xh1[k, p], a1[k, p])
            q = np.dot(a1[k, p], Wq[k])
            kk = np.dot(a1[k, p], Wk[k])
            vv = np.dot(a1[k, p], Wv[k])
            for h in range(H):
                lo = h * dh
                Qh[k, h, p] = q[lo:lo + dh]
                Kh[k, h, p] = kk[lo:lo + dh]
                Vh[k, h, p] = vv[lo:lo + dh]
                sc = np.dot(Kh[k, h, :p + 1], Qh[k, h, p]) * scale
                w = np.exp(sc - sc.max())
                w = w / w.sum()
                att[k, h, p, :p + 1] = w
                for j in range(p + 1):
                    attT[k, h, j, p] = w[j]
                o[lo:lo + dh] = np.dot(w, Vh[k, h, :p + 1])
            o_cat[k, p] = o
            x = x + np.dot(o, Wo[k]) + bo[k]
            inv2[k, p] = _ln(x, ln2g[k], ln2b[k], xh2[k, p], a2[k, p])
            u[k, p] = np.dot(a2[k, p], W1[k]) + b1[k]
            s[k, p] = _softplus(u[k, p])
            x = x + np.dot(s[k, p], W2[k]) + b2[k]
        invf[p] = _ln(x, lnfg, lnfb, xhf[p], hf)
        if p >= 1:
            t = p - 1
            hid[t] = hf
            g = gidx[t]
            raw = np.dot(hf, Wg[g]) + bg[g] + base[t]
            if use_noise:
                raw = raw + np.exp(0.5 * (np.dot(hf, Wlv) + blv)) * noise[t]
            pay[t] = raw * mask[t]
    return xh1, inv1, a1, Qh, Kh, Vh, att, attT, o_cat, xh2, inv2, a2, u, s, xhf, invf, hid, pay


@njit(cache=True)
def backward(gpay, gh, mask, gidx, Wg, lnfg, xhf, invf, Wp,
             ln1g, Wq, Wk, Wv, Wo, ln2g, W1, W2, xh1, inv1, Qh, Kh, Vh, att, attT, xh2, inv2, u):
    L = Wq.shape[0]
    H = Qh.shape[1]
    P = xhf.shape[0]
    d = xhf.shape[1]
    ff = W1.shape[2]
    dh = d // H
    scale = 1.0 / np.sqrt(dh)

    dpay = gpay.copy()
    dXin = np.zeros((P, d))
    dHf = np.zeros((P, d))
    dQ = np.zeros((L, P, d))
    dK = np.zeros((L, P, d))
    dV = np.zeros((L, P, d))
    dA1 = np.zeros((L, P, d))
    dXmid = np.zeros((L, P, d))
    dA2 = np.zeros((L, P, d))
    dU = np.zeros((L, P, ff))
    dXout = np.zeros((L, P, d))
    # cotangents of each query's head output and score row, stored so that
    # key/value gradients of position p are single dot products over p' >= p
    DO = np.zeros((L, H, P, dh))
    dscT = np.zeros((L, H, P, P))

    WgT = np.empty((Wg.shape[0], Wg.shape[2], Wg.shape[1]))
    for g in range(Wg.shape[0]):
        WgT[g] = Wg[g].T.copy()
    WpT = Wp.T.copy()

    for p in range(P - 1, -1, -1):
        if p >= 1:
            t = p - 1
            dr = dpay[t] * mask[t]
            dpay[t] = dr
            dh_ = np.dot(dr, WgT[gidx[t]]) + gh[t]
            dHf[p] = dh_
            dx = _ln_back(dh_ * lnfg, xhf[p], invf[p])
        else:
            dx = np.zeros(d)
        for k in range(L - 1, -1, -1):
            dXout[k, p] = dx
            ds = np.dot(W2[k], dx)
            du = ds * _sigmoid(u[k, p])
            dU[k, p] = du
            da2 = np.dot(W1[k], du)
            dA2[k, p] = da2
            dxm = dx + _ln_back(da2 * ln2g[k], xh2[k, p], inv2[k, p])
            dXmid[k, p] = dxm
            do = np.dot(Wo[k], dxm)
            for h in range(H):
                lo = h * dh
                DO[k, h, p] = do[lo:lo + dh]
                w = att[k, h, p, :p + 1]
                dAtt = np.dot(Vh[k, h, :p + 1], DO[k, h, p])
                dsc = w * (dAtt - np.dot(dAtt, w)) * scale
                for j in range(p + 1):
                    dscT[k, h, j, p] = dsc[j]
                dQ[k, p, lo:lo + dh] = np.dot(dsc, Kh[k, h, :p + 1])
                dK[k, p, lo:lo + dh] = np.dot(dscT[k, h, p, p:], Qh[k, h, p:])
                dV[k, p, lo:lo + dh] = np.dot(attT[k, h, p, p:], DO[k, h, p:])
            da = np.dot(Wq[k], dQ[k, p]) + np.dot(Wk[k], dK[k, p]) + np.dot(Wv[k], dV[k, p])
            dA1[k, p] = da
            dx = dxm + _ln_back(da * ln1g[k], xh1[k, p], inv1[k, p])
        dXin[p] = dx
        if p >= 2:
            dpay[p - 2] += np.dot(dx, WpT)
    return dpay, dXin, dHf, dQ, dK, dV, dA1, dXmid, dA2, dU, dXout
