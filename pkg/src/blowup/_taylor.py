"""
Compiled kernels: interval Taylor coefficients of polynomial ODE solutions.

Intervals are (lo, hi) float pairs widened outward after every operation
by at least one ulp (cheaper than nextafter inside the inner loops).
Coefficients X_k of x(t) = sum X_k t^k follow X_{k+1} = g(X)_k / (k+1); monomials are Cauchy products of cached
variable powers.  Optionally the derivative with respect to the initial
point is propagated alongside (forward-mode).
"""

import numpy as np
from numba import njit

INF = np.inf


# x -+ (phi |x| + eta) is a valid outward bound in round-to-nearest
PHI = 2.0 ** -52
ETA = 2.0 ** -1074


@njit(inline="always", cache=True)
def _dn(x):
    return x - (PHI * abs(x) + ETA)


@njit(inline="always", cache=True)
def _up(x):
    return x + (PHI * abs(x) + ETA)


@njit(inline="always", cache=True)
def _add(al, ah, bl, bh):
    if bl == 0.0 and bh == 0.0:
        return al, ah
    if al == 0.0 and ah == 0.0:
        return bl, bh
    return _dn(al + bl), _up(ah + bh)


@njit(inline="always", cache=True)
def _mul(al, ah, bl, bh):
    # exact zeros stay exact (otherwise subnormal dust slows everything down)
    if (al == 0.0 and ah == 0.0) or (bl == 0.0 and bh == 0.0):
        return 0.0, 0.0
    p1 = al * bl
    p2 = al * bh
    p3 = ah * bl
    p4 = ah * bh
    lo = min(min(p1, p2), min(p3, p4))
    hi = max(max(p1, p2), max(p3, p4))
    return _dn(lo), _up(hi)


@njit(cache=True)
def taylor_kernel(xl, xh, p, tcomp, tcl, tch, fvar, fexp, nf, maxe, deriv):
    """
    Interval Taylor coefficients X[0..p+1] (shape (p+2, n)) of the solution
    from the box [xl, xh]; if deriv, also d X_k / d x0 enclosures (p+2, n, n).
    """
    n = xl.shape[0]
    K = p + 2
    T = tcomp.shape[0]
    F = fvar.shape[1]
    E = 1
    for i in range(n):
        if maxe[i] > E:
            E = maxe[i]
    Xl = np.zeros((K, n))
    Xh = np.zeros((K, n))
    pwl = np.zeros((n, E + 1, K))
    pwh = np.zeros((n, E + 1, K))
    cl = np.zeros((T, F, K))
    ch = np.zeros((T, F, K))
    nd = n if deriv else 0
    DXl = np.zeros((K, n, nd))
    DXh = np.zeros((K, n, nd))
    dpwl = np.zeros((n, E + 1, K, nd))
    dpwh = np.zeros((n, E + 1, K, nd))
    dcl = np.zeros((T, F, K, nd))
    dch = np.zeros((T, F, K, nd))
    for i in range(n):
        Xl[0, i] = xl[i]
        Xh[0, i] = xh[i]
        pwl[i, 0, 0] = 1.0
        pwh[i, 0, 0] = 1.0
        if deriv:
            DXl[0, i, i] = 1.0
            DXh[0, i, i] = 1.0
    for k in range(p + 1):
        # powers of each variable, coefficient k
        for i in range(n):
            pwl[i, 1, k] = Xl[k, i]
            pwh[i, 1, k] = Xh[k, i]
            if deriv:
                for d in range(nd):
                    dpwl[i, 1, k, d] = DXl[k, i, d]
                    dpwh[i, 1, k, d] = DXh[k, i, d]
            for e in range(2, maxe[i] + 1):
                sl = 0.0
                sh = 0.0
                for j in range(k + 1):
                    a, b = _mul(pwl[i, e - 1, j], pwh[i, e - 1, j], Xl[k - j, i], Xh[k - j, i])
                    sl, sh = _add(sl, sh, a, b)
                pwl[i, e, k] = sl
                pwh[i, e, k] = sh
                if deriv:
                    for d in range(nd):
                        sl = 0.0
                        sh = 0.0
                        for j in range(k + 1):
                            a, b = _mul(dpwl[i, e - 1, j, d], dpwh[i, e - 1, j, d],
                                        Xl[k - j, i], Xh[k - j, i])
                            sl, sh = _add(sl, sh, a, b)
                            a, b = _mul(pwl[i, e - 1, j], pwh[i, e - 1, j],
                                        DXl[k - j, i, d], DXh[k - j, i, d])
                            sl, sh = _add(sl, sh, a, b)
                        dpwl[i, e, k, d] = sl
                        dpwh[i, e, k, d] = sh
        # monomials and field coefficient k
        gl = np.zeros(n)
        gh = np.zeros(n)
        dgl = np.zeros((n, nd))
        dgh = np.zeros((n, nd))
        for t in range(T):
            if nf[t] == 0:
                ml = 1.0 if k == 0 else 0.0
                mh = ml
                a, b = _mul(tcl[t], tch[t], ml, mh)
                gl[tcomp[t]], gh[tcomp[t]] = _add(gl[tcomp[t]], gh[tcomp[t]], a, b)
                continue
            v0 = fvar[t, 0]
            e0 = fexp[t, 0]
            cl[t, 0, k] = pwl[v0, e0, k]
            ch[t, 0, k] = pwh[v0, e0, k]
            if deriv:
                for d in range(nd):
                    dcl[t, 0, k, d] = dpwl[v0, e0, k, d]
                    dch[t, 0, k, d] = dpwh[v0, e0, k, d]
            for f in range(1, nf[t]):
                v = fvar[t, f]
                e = fexp[t, f]
                sl = 0.0
                sh = 0.0
                for j in range(k + 1):
                    a, b = _mul(cl[t, f - 1, j], ch[t, f - 1, j], pwl[v, e, k - j], pwh[v, e, k - j])
                    sl, sh = _add(sl, sh, a, b)
                cl[t, f, k] = sl
                ch[t, f, k] = sh
                if deriv:
                    for d in range(nd):
                        sl = 0.0
                        sh = 0.0
                        for j in range(k + 1):
                            a, b = _mul(dcl[t, f - 1, j, d], dch[t, f - 1, j, d],
                                        pwl[v, e, k - j], pwh[v, e, k - j])
                            sl, sh = _add(sl, sh, a, b)
                            a, b = _mul(cl[t, f - 1, j], ch[t, f - 1, j],
                                        dpwl[v, e, k - j, d], dpwh[v, e, k - j, d])
                            sl, sh = _add(sl, sh, a, b)
                        dcl[t, f, k, d] = sl
                        dch[t, f, k, d] = sh
            last = nf[t] - 1
            a, b = _mul(tcl[t], tch[t], cl[t, last, k], ch[t, last, k])
            c = tcomp[t]
            gl[c], gh[c] = _add(gl[c], gh[c], a, b)
            if deriv:
                for d in range(nd):
                    a, b = _mul(tcl[t], tch[t], dcl[t, last, k, d], dch[t, last, k, d])
                    dgl[c, d], dgh[c, d] = _add(dgl[c, d], dgh[c, d], a, b)
        inv = 1.0 / (k + 1)
        il = _dn(inv)
        ih = _up(inv)
        for i in range(n):
            Xl[k + 1, i], Xh[k + 1, i] = _mul(gl[i], gh[i], il, ih)
            if deriv:
                for d in range(nd):
                    DXl[k + 1, i, d], DXh[k + 1, i, d] = _mul(dgl[i, d], dgh[i, d], il, ih)
    return Xl, Xh, DXl, DXh


@njit(cache=True)
def horner(Cl, Ch, p, h):
    """Interval enclosure of sum_{k<=p} C_k h^k for C of shape (K, ...) flattened on axis 1."""
    m = Cl.shape[1]
    sl = Cl[p].copy()
    sh = Ch[p].copy()
    for k in range(p - 1, -1, -1):
        for i in range(m):
            a, b = _mul(sl[i], sh[i], h, h)
            sl[i], sh[i] = _add(a, b, Cl[k, i], Ch[k, i])
    return sl, sh


def compile_field(field):
    """Flat term arrays of a PolyField for taylor_kernel."""
    n = field.n
    comps, cl, ch, fv, fe, nfs = [], [], [], [], [], []
    for i, poly in enumerate(field.polys):
        lo, hi = poly.coef.lo, poly.coef.hi
        for t in range(poly.nterms):
            e = poly.exps[t]
            vars_ = [j for j in range(n) if e[j] > 0]
            comps.append(i)
            cl.append(lo[t])
            ch.append(hi[t])
            fv.append(vars_ + [0] * (n - len(vars_)))
            fe.append([int(e[j]) for j in vars_] + [0] * (n - len(vars_)))
            nfs.append(len(vars_))
    maxe = np.zeros(n, dtype=np.int64)
    for poly in field.polys:
        if poly.nterms:
            maxe = np.maximum(maxe, poly.exps.max(axis=0))
    maxe = np.maximum(maxe, 1)
    return (np.array(comps, dtype=np.int64), np.array(cl, dtype=float), np.array(ch, dtype=float),
            np.array(fv, dtype=np.int64).reshape(-1, n), np.array(fe, dtype=np.int64).reshape(-1, n),
            np.array(nfs, dtype=np.int64), maxe.astype(np.int64))
