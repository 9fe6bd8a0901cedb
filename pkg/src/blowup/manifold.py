"""
Parameterization method for local stable manifolds with a radii-polynomial
certificate.

Unknowns are the coefficients a_alpha, 2 <= |alpha|, of P(theta) = sum a_alpha
theta^alpha; orders 0 and 1 are pinned to the verified equilibrium and
(scaled) eigenvectors.  The zero-finding map is

    F(a)_alpha = (alpha . lambda) a_alpha - g(a)_alpha,

posed on X = (l^1)^n with the max-of-components norm.  A^dagger is the
derivative on the finite block and diag(alpha . lambda) on the tail; A is
a float inverse of the finite block and diag(1/(alpha . lambda)) on the tail.
"""

import json
import time
from dataclasses import dataclass, field as dc_field
from typing import List, Optional

import numpy as np

from .ball import Ball, _ub, gamma
from .field import PolyField, VerifiedEquilibrium, check_nonresonance
from .interval import Interval, DomainError
from .poly import SeriesPowerCache, FloatPowerCache
from .series import (Series, TaylorCoeffs, multi_indices, total_degree, count,
                     eval_enclosure, ShapeError)


class VerificationFailed(ArithmeticError):
    def __init__(self, bound, message):
        super().__init__(f"{bound}: {message}")
        self.bound = bound


class NewtonDiverged(ArithmeticError):
    pass


@dataclass
class ChartSkeleton:
    """First-order data: equilibrium box, stable eigenvalues, scaled eigenvectors."""
    x0: Ball
    lam: List[Interval]
    vecs: List[Ball]

    @property
    def m(self):
        return len(self.lam)

    @property
    def n(self):
        return self.x0.shape[0]

    def lam_ball(self):
        return Ball.from_intervals(self.lam)


@dataclass
class RadiiCertificate:
    Y0: Interval
    Z0: Interval
    Z1: Interval
    Z2: Interval
    r_star: float
    r0: Interval
    N: int
    seconds: float = 0.0

    def p(self, r):
        r = Interval(r)
        return self.Z2 * r * r - (1 - self.Z1 - self.Z0) * r + self.Y0

    def as_dict(self):
        f = lambda x: [x.lo, x.hi]
        return {"Y0": f(self.Y0), "Z0": f(self.Z0), "Z1": f(self.Z1), "Z2": f(self.Z2),
                "r_star": self.r_star, "r0": f(self.r0), "N": self.N}

    def report(self):
        return "\n".join([
            f"N      = {self.N}",
            f"Y0    <= {self.Y0.hi:.6e}",
            f"Z0    <= {self.Z0.hi:.6e}",
            f"Z1    <= {self.Z1.hi:.6e}",
            f"Z2    <= {self.Z2.hi:.6e}   (r* = {self.r_star:.3e})",
            f"r0     = {self.r0.hi:.6e}",
            f"p(r0) <= {self.p(self.r0.hi).hi:.6e}",
        ])


# --------------------------------------------------------------------------
# indexing helpers


def _unknown_indices(m, N):
    idx = multi_indices(m, N, lo=2)
    return idx, np.array(idx, dtype=int).reshape(len(idx), m)


def _dot_lambda(alphas, lam):
    """Ball of alpha . lambda for each row of alphas."""
    lam = lam if isinstance(lam, Ball) else Ball.from_intervals(lam)
    acc = Ball(np.zeros(alphas.shape[0]))
    for k in range(alphas.shape[1]):
        acc = acc + lam[k] * alphas[:, k].astype(float)
    return acc


def skeleton_from(eq, sigma, directions=None):
    lam, vecs = eq.stable
    if directions is not None:
        lam = [lam[i] for i in directions]
        vecs = [vecs[i] for i in directions]
    m = len(lam)
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (m,))
    vecs = [v * float(s) for v, s in zip(vecs, sig)]
    return ChartSkeleton(eq.box, list(lam), vecs)


def _first_orders(skel, N, exact=True):
    """Dense Ball arrays per component with orders 0 and 1 filled in."""
    m, n = skel.m, skel.n
    out = []
    for i in range(n):
        c = Ball.zeros((N + 1,) * m)
        c.mid[(0,) * m] = skel.x0.mid[i]
        c.rad[(0,) * m] = skel.x0.rad[i] if exact else 0.0
        for k in range(m):
            e = [0] * m
            e[k] = 1
            c.mid[tuple(e)] = skel.vecs[k].mid[i]
            c.rad[tuple(e)] = skel.vecs[k].rad[i] if exact else 0.0
        out.append(c)
    return out


# --------------------------------------------------------------------------
# float solve


def newton_solve_projection(field, skel, N):
    """
    Float coefficients of the truncated problem F^(N)(a) = 0.

    The system is triangular in |alpha|: at degree k, g(a)_alpha depends on
    a_alpha only through Dg(x0) a_alpha, so each block solves
    ((alpha . lambda) I - Dg(x0)) a_alpha = [g(a with degree k zeroed)]_alpha.
    """
    m, n = skel.m, skel.n
    lam = np.array([l.mid for l in skel.lam])
    J = field.jacobian_float(skel.x0.mid)
    a = [c.mid.copy() for c in _first_orders(skel, N, exact=False)]
    by_degree = {}
    for alpha in multi_indices(m, N, lo=2):
        by_degree.setdefault(sum(alpha), []).append(alpha)
    for k in range(2, N + 1):
        G = field.apply_float(a, k)
        for alpha in by_degree[k]:
            M = float(np.dot(alpha, lam)) * np.eye(n) - J
            rhs = np.array([G[i][alpha] for i in range(n)])
            sol = np.linalg.solve(M, rhs)
            for i in range(n):
                a[i][alpha] = sol[i]
        if not all(np.all(np.isfinite(ai)) for ai in a):
            raise NewtonDiverged(f"coefficients overflow at degree {k}")
    return a


def float_residual(field, skel, a, N):
    """max |F^(N)(a)_alpha| over 2 <= |alpha| <= N (floats)."""
    m = skel.m
    lam = np.array([l.mid for l in skel.lam])
    G = field.apply_float(a, N)
    deg = total_degree(m, N)
    w = np.zeros((N + 1,) * m)
    for k in range(m):
        shape = [1] * m
        shape[k] = N + 1
        w = w + lam[k] * np.arange(N + 1).reshape(shape)
    mask = deg >= 2
    return max(float(np.max(np.abs((w * ai - Gi)[mask]))) for ai, Gi in zip(a, G))


def _decay_factor(a, m, N, target):
    deg = total_degree(m, N)
    est = []
    for k in range(max(2, N - 5), N + 1):
        nk = sum(float(np.sum(np.abs(ai[deg == k]))) for ai in a)
        if nk > 0:
            est.append(np.exp((np.log(target) - np.log(nk)) / k))
    return min(est) if est else 1.0


def choose_sigma(field, eq, N, target=1e-16, directions=None):
    """
    Eigenvector scales making the degree-N coefficients ~ target.  For m > 1
    each direction is first tuned on its own 1-D sub-chart, then a common
    factor corrects for the mixed terms.
    """
    lam, _ = eq.stable
    dirs = list(range(len(lam))) if directions is None else list(directions)
    if len(dirs) > 1:
        sigma = np.array([choose_sigma(field, eq, N, target, [d]) for d in dirs])
    else:
        sigma = np.array([1.0])
    for _ in range(10):
        skel = skeleton_from(eq, sigma, dirs)
        try:
            with np.errstate(all="ignore"):
                a = newton_solve_projection(field, skel, N)
        except NewtonDiverged:
            sigma = sigma * 0.1
            continue
        factor = _decay_factor(a, skel.m, N, target)
        sigma = sigma * factor
        if 0.9 < factor < 1.1:
            break
    return float(sigma[0]) if len(dirs) == 1 else sigma


# --------------------------------------------------------------------------
# rigorous bounds


def abar_series(skel, a_float, N):
    """a-bar as Series with exact-enclosure orders 0/1 and float higher orders."""
    first = _first_orders(skel, N, exact=True)
    deg = total_degree(skel.m, N)
    out = []
    for c, af in zip(first, a_float):
        mid = np.where(deg >= 2, af, c.mid)
        rad = np.where(deg >= 2, 0.0, c.rad)
        mid = np.where(deg <= N, mid, 0.0)
        out.append(Series(Ball(mid, rad), N))
    return out


def assemble_F(field, skel, a):
    """Rigorous F(a) for 2 <= |alpha| <= dN (orders 0, 1 set to zero)."""
    comps = a.components if isinstance(a, TaylorCoeffs) else list(a)
    cache = SeriesPowerCache(comps)
    G = [p.eval_series(comps, cache) for p in field.polys]
    return _F_from_G(skel, comps, G), cache


def _weights(m, D, lam):
    """Ball of alpha . lambda on the dense cube of side D+1."""
    grid = np.indices((D + 1,) * m).reshape(m, -1).T
    w = _dot_lambda(grid, lam)
    return Ball(w.mid.reshape((D + 1,) * m), w.rad.reshape((D + 1,) * m))


def _F_from_G(skel, comps, G):
    m = skel.m
    out = []
    for ai, Gi in zip(comps, G):
        D = Gi.N
        w = _weights(m, D, skel.lam_ball())
        aD = ai.resize(D)
        F = w * aD.coef - Gi.coef
        deg = total_degree(m, D)
        F.mid[deg < 2] = 0.0
        F.rad[deg < 2] = 0.0
        out.append(Series(F, D))
    return TaylorCoeffs(out)


def _jacobian_series(field, comps, cache):
    J = field.jac_polys()
    return [[J[i][j].eval_series(comps, cache) for j in range(field.n)] for i in range(field.n)]


def build_operators(skel, c_series, N):
    """Float A (inverse of the finite block) and Ball A^dagger of the finite block."""
    m, n = skel.m, skel.n
    idx, alphas = _unknown_indices(m, N)
    K = len(idx)
    wl = _dot_lambda(alphas, skel.lam_ball())
    D = alphas[:, None, :] - alphas[None, :, :]
    valid = np.all(D >= 0, axis=2)
    Dc = np.where(valid[..., None], D, 0)
    Adag_mid = np.zeros((n * K, n * K))
    Adag_rad = np.zeros((n * K, n * K))
    for i in range(n):
        for j in range(n):
            c = c_series[i][j].resize(N).coef
            sl = tuple(Dc[..., k] for k in range(m))
            blk_mid = np.where(valid, -c.mid[sl], 0.0)
            blk_rad = np.where(valid, c.rad[sl], 0.0)
            if i == j:
                blk_mid[np.diag_indices(K)] += wl.mid
                blk_rad[np.diag_indices(K)] += wl.rad
                blk_rad[np.diag_indices(K)] = _ub(blk_rad[np.diag_indices(K)]
                                                  + 2 ** -53 * np.abs(blk_mid[np.diag_indices(K)]), 2)
            Adag_mid[i * K:(i + 1) * K, j * K:(j + 1) * K] = blk_mid
            Adag_rad[i * K:(i + 1) * K, j * K:(j + 1) * K] = blk_rad
    Adag = Ball(Adag_mid, Adag_rad)
    A = np.linalg.inv(Adag_mid)
    return A, Adag, idx, alphas


def _blocks_norm(M, n, K):
    """[||M_ij||_{B(l1)}] : column-abs-sum maxima of each K x K block (upper bounds)."""
    absM = M if isinstance(M, np.ndarray) else M.mag()
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            blk = np.abs(absM[i * K:(i + 1) * K, j * K:(j + 1) * K])
            out[i, j] = float(_ub(np.max(np.sum(blk, axis=0)), K + 2)) if K else 0.0
    return out


def compute_Z0(A, Adag, n, K):
    B = Ball(np.eye(n * K)) - Ball(A) @ Adag
    return float(np.max(np.sum(_blocks_norm(B, n, K), axis=1)))


def lambda_star(lam, N):
    """Lower bound of min_{|alpha| > N} |alpha . lambda| for negative lambdas."""
    mn = min(l.mig for l in lam)
    return (N + 1) * mn * (1 - gamma(4))


def compute_Z1(c_series, lam, N):
    ls = lambda_star(lam, N)
    rows = [sum(c.norm1() for c in row) for row in c_series]
    return float(_ub(max(rows) / ls, 4))


def compute_Y0(skel, F, A, alphas, N):
    """||A F(a-bar)|| split into the finite block and the diagonal tail."""
    m, n = skel.m, skel.n
    K = alphas.shape[0]
    sl = tuple(alphas[:, k] for k in range(m))
    vec_mid = np.concatenate([F[i].coef.mid[sl] for i in range(n)])
    vec_rad = np.concatenate([F[i].coef.rad[sl] for i in range(n)])
    head = Ball(A) @ Ball(vec_mid, vec_rad)
    head_norms = [Ball(head.mid[i * K:(i + 1) * K], head.rad[i * K:(i + 1) * K]).norm1()
                  for i in range(n)]
    tails = []
    for i in range(n):
        Fi = F[i]
        D = Fi.N
        deg = total_degree(m, D)
        sel = deg > N
        w = _weights(m, D, skel.lam_ball())
        mag = Ball(Fi.coef.mid[sel], Fi.coef.rad[sel]).mag()
        den = w.mig()[sel]
        tails.append(float(_ub(np.sum(mag / np.nextafter(den, 0)), mag.size + 4)) if mag.size else 0.0)
    return float(max(_ub(h + t, 2) for h, t in zip(head_norms, tails)))


def compute_Z2(field, comps, A, n, K, lam, N, r_star):
    H = field.hess_polys()
    norms = np.array([_ub(c.norm1() + r_star, 1) for c in comps])
    hb = np.array([sum(H[l][j][k].norm_bound(norms) for j in range(n) for k in range(n))
                   for l in range(n)])
    An = _blocks_norm(np.abs(A), n, K)
    ls = lambda_star(lam, N)
    for i in range(n):
        An[i, i] = max(An[i, i], _ub(1.0 / ls, 2))
    return float(_ub(np.max(An @ hb), 2 * n + 4))


def radii_verify(Y0, Z0, Z1, Z2, r_star, N=0):
    Y0i, Z0i, Z1i, Z2i = (Interval(0.0, float(v)) for v in (Y0, Z0, Z1, Z2))
    slack = 1 - Z1i - Z0i
    if slack.lo <= 0:
        raise VerificationFailed("Z0+Z1", f"Z0 + Z1 = {Z0 + Z1:.3e} is not < 1")
    cands = []
    if Y0 == 0:
        cands.append(1e-300)
    base = Y0 / slack.lo
    cands += [base * (1 + e) for e in (1e-6, 1e-3, 1e-2, 0.1, 0.5)] + [2 * base]
    cert = RadiiCertificate(Y0i, Z0i, Z1i, Z2i, float(r_star), Interval(0.0), N)
    for r in cands:
        if r <= 0 or r > r_star:
            continue
        if cert.p(r).hi < 0:
            cert.r0 = Interval(r)
            return cert
    if base > r_star:
        raise VerificationFailed("r_star", f"candidate radius {base:.3e} exceeds r* = {r_star:.3e}")
    raise VerificationFailed("Z2", f"p(r) >= 0 at all candidates (Z2 = {Z2:.3e})")


# --------------------------------------------------------------------------
# chart


@dataclass
class ManifoldChart:
    field: PolyField
    equilibrium: VerifiedEquilibrium
    Lambda: List[Interval]
    eigvecs: List[Ball]
    coeffs: TaylorCoeffs
    r0: Interval
    N: int
    certificate: RadiiCertificate
    sigma: tuple = ()
    abar_float: list = dc_field(default_factory=list, repr=False)

    @property
    def m(self):
        return len(self.Lambda)

    @property
    def n(self):
        return self.coeffs.n

    def eval(self, theta):
        return eval_enclosure(self.coeffs, theta)

    def eval_float(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        out = []
        for c in self.coeffs:
            res = c.coef.mid
            for t in reversed(theta):
                res = np.polynomial.polynomial.polyval(t, res.T).T if res.ndim > 1 else \
                    np.polynomial.polynomial.polyval(t, res)
            out.append(float(res))
        return np.array(out)

    def derivative_float(self, theta, axis=0):
        from .series import differentiate
        d = TaylorCoeffs([differentiate(c, axis) for c in self.coeffs])
        return np.array([float(eval_enclosure(s, theta).mid) for s in d])

    def conjugacy_residual(self, thetas):
        """max over points of |sum_k lambda_k theta_k d_k P - g(P)| (floats)."""
        lam = np.array([l.mid for l in self.Lambda])
        worst = 0.0
        for th in thetas:
            th = np.atleast_1d(th)
            lhs = sum(lam[k] * th[k] * self.derivative_float(th, k) for k in range(self.m))
            rhs = self.field.eval_float(self.eval_float(th))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    def to_json(self):
        data = json.loads(self.coeffs.to_json())
        data["certificate"] = self.certificate.as_dict()
        data["lambda"] = [[l.lo, l.hi] for l in self.Lambda]
        data["sigma"] = list(self.sigma)
        data["field"] = self.field.name
        return json.dumps(data)


def inward_signs(field, eq, sigma, directions=None, probe=0.5):
    """
    Flip the sign of each scale so that theta = probe * e_k points into the
    domain (first-order test on the eigenvector, for equilibria on the horizon).
    """
    spec = field.spec
    skel = skeleton_from(eq, sigma, directions)
    x0 = eq.box.mid
    out = []
    for s, v in zip(np.broadcast_to(np.asarray(sigma, dtype=float), (skel.m,)), skel.vecs):
        x = x0 + probe * v.mid
        if spec is None:
            out.append(float(s))
            continue
        if spec.kind == "directional":
            inside = x[spec.index] > 0
        else:
            inside = sum(xi ** (2 * b) for xi, b in zip(x, spec.beta)) < 1
        out.append(float(s) if inside else -float(s))
    return tuple(out)


def build_chart(field, eq, sigma=None, N=50, r_star=1e-6, directions=None, refine=True,
                inward=False):
    """
    Certified chart of the local stable manifold of eq.  With inward=True
    the scales are signed so the positive theta-orthant lies in the domain.
    """
    t0 = time.time()
    lam_all, _ = eq.stable
    lam = lam_all if directions is None else [lam_all[i] for i in directions]
    check_nonresonance(lam, others=eq.eigenvalues)
    if sigma is None:
        sigma = choose_sigma(field, eq, N, directions=directions)
    if inward:
        sigma = inward_signs(field, eq, sigma, directions)
    skel = skeleton_from(eq, sigma, directions)
    m, n = skel.m, skel.n
    a = newton_solve_projection(field, skel, N)

    comps = abar_series(skel, a, N)
    F, cache = assemble_F(field, skel, comps)
    c_series = _jacobian_series(field, comps, cache)
    A, Adag, idx, alphas = build_operators(skel, c_series, N)
    K = len(idx)

    if refine:
        # one Newton correction on the finite block
        sl = tuple(alphas[:, k] for k in range(m))
        vec = np.concatenate([F[i].coef.mid[sl] for i in range(n)])
        corr = A @ vec
        if np.all(np.isfinite(corr)):
            for i in range(n):
                a[i][sl] -= corr[i * K:(i + 1) * K]
            comps = abar_series(skel, a, N)
            F, cache = assemble_F(field, skel, comps)
            c_series = _jacobian_series(field, comps, cache)

    Y0 = compute_Y0(skel, F, A, alphas, N)
    Z0 = compute_Z0(A, Adag, n, K)
    Z1 = compute_Z1(c_series, lam, N)
    Z2 = compute_Z2(field, comps, A, n, K, lam, N, r_star)
    cert = radii_verify(Y0, Z0, Z1, Z2, r_star, N)
    cert.seconds = time.time() - t0
    r0 = cert.r0.hi
    coeffs = TaylorCoeffs([Series(c.coef, N, r0) for c in comps])
    sig = tuple(np.broadcast_to(np.asarray(sigma, dtype=float), (m,)).tolist())
    return ManifoldChart(field, eq, list(lam), skel.vecs, coeffs, Interval(r0),
                         N, cert, sig, a)
