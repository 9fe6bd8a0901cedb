"""
Polynomial vector fields and verified equilibria.

A PolyField keeps its components as exact rational polynomials (QPoly) and
as Ball-coefficient polynomials (Poly) for rigorous evaluation.  Jacobian
and Hessian entries are differentiated exactly and cached.
"""

from dataclasses import dataclass, field as dc_field
from itertools import product
from math import ceil
from typing import List, Optional, Tuple

import numpy as np

from .ball import Ball, as_ball
from .interval import Interval, DomainError, NoContraction, as_interval
from .poly import QPoly, SeriesPowerCache, FloatPowerCache
from .series import TaylorCoeffs, ShapeError, multi_indices


class NonHyperbolic(DomainError):
    pass


class ComplexPair(DomainError):
    """A complex eigenvalue pair could not be enclosed."""


class ResonancePossible(DomainError):
    pass


class PolyField:
    """dx/dtau = g(x) with polynomial components."""

    def __init__(self, comps, spec=None, timefactor=None, name="", seeds=None):
        self.q = list(comps)
        self.n = len(self.q)
        for c in self.q:
            if c.n != self.n:
                raise ShapeError("component arity differs from dimension")
        self.polys = [c.to_poly() for c in self.q]
        self.spec = spec
        # timefactor: QPoly S, or (num, den) pair for rational S
        if isinstance(timefactor, QPoly):
            timefactor = (timefactor, None)
        self.timefactor = timefactor
        self.name = name
        self.seeds = dict(seeds or {})
        self._jac = None
        self._hess = None

    @property
    def degree(self):
        return max(c.degree() for c in self.q)

    def reversed(self):
        f = PolyField([-c for c in self.q], self.spec, self.timefactor, self.name + "-reversed", self.seeds)
        return f

    def jac_polys(self):
        if self._jac is None:
            self._jac = [[c.diff(j).to_poly() for j in range(self.n)] for c in self.q]
        return self._jac

    def hess_polys(self):
        if self._hess is None:
            self._hess = [[[c.diff(j).diff(k).to_poly() for k in range(self.n)]
                           for j in range(self.n)] for c in self.q]
        return self._hess

    # --- point evaluation ---
    def eval_ball(self, x):
        x = as_ball(x)
        out = [p.eval_ball(x) for p in self.polys]
        return Ball(np.array([o.mid for o in out]), np.array([o.rad for o in out]))

    def eval(self, x):
        return list(self.eval_ball(_ball_of(x)).intervals())

    def eval_float(self, x):
        return np.array([p.eval_float(x) for p in self.polys])

    def jacobian_ball(self, x):
        x = as_ball(x)
        J = self.jac_polys()
        mid = np.zeros((self.n, self.n))
        rad = np.zeros((self.n, self.n))
        for i in range(self.n):
            for j in range(self.n):
                b = J[i][j].eval_ball(x)
                mid[i, j], rad[i, j] = b.mid, b.rad
        return Ball(mid, rad)

    def jacobian(self, x):
        return self.jacobian_ball(_ball_of(x)).intervals()

    # --- exact rational evaluation at float points ---
    def eval_exact(self, z):
        """Tight enclosure of g(z) for a float vector z (exact rational sum)."""
        z = [float(v) for v in np.asarray(z, dtype=float)]
        return Ball.from_intervals([Interval.exact(c(*z)) for c in self.q])

    def jacobian_exact(self, z):
        z = [float(v) for v in np.asarray(z, dtype=float)]
        return Ball.from_intervals([[Interval.exact(c.diff(j)(*z)) for j in range(self.n)]
                                    for c in self.q])

    def jacobian_box(self, box):
        """Mean-value enclosure Dg(box) in Dg(z) + D2g(box)(box - z), z = box.mid."""
        box = as_ball(box)
        z = box.mid
        J = self.jacobian_exact(z)
        H = self.hess_polys()
        dev = Ball(np.zeros(self.n), box.rad)
        rad = np.zeros((self.n, self.n))
        for i in range(self.n):
            for j in range(self.n):
                hk = [H[i][j][k].eval_ball(box) for k in range(self.n)]
                hk = Ball(np.array([h.mid for h in hk]), np.array([h.rad for h in hk]))
                rad[i, j] = float(np.max((hk * dev).sum().mag()))
        return J + Ball(np.zeros_like(rad), rad)

    def jacobian_float(self, x):
        J = self.jac_polys()
        return np.array([[J[i][j].eval_float(x) for j in range(self.n)] for i in range(self.n)])

    def hessian(self, x):
        xb = _ball_of(x)
        H = self.hess_polys()
        out = np.empty((self.n,) * 3, dtype=object)
        for i, j, k in product(range(self.n), repeat=3):
            out[i, j, k] = H[i][j][k].eval_ball(xb).interval()
        return out

    # --- time factor S ---
    def S_eval(self, x):
        if self.timefactor is None:
            raise DomainError("field has no time factor")
        num, den = self.timefactor
        xb = _ball_of(x)
        v = num.to_poly().eval_ball(xb).interval()
        if den is not None:
            v = v / den.to_poly().eval_ball(xb).interval()
        return v

    def S_float(self, x):
        num, den = self.timefactor
        v = num.to_poly().eval_float(x)
        if den is not None:
            v = v / den.to_poly().eval_float(x)
        return v

    # --- series ---
    def apply_to_series(self, a, N=None):
        """g(a) with monomials replaced by Cauchy products (rigorous)."""
        comps = a.components if isinstance(a, TaylorCoeffs) else list(a)
        if len(comps) != self.n:
            raise ShapeError("series dimension does not match field")
        cache = SeriesPowerCache(comps, N)
        return TaylorCoeffs([p.eval_series(comps, cache, N) for p in self.polys])

    def apply_float(self, arrays, D):
        cache = FloatPowerCache(arrays, D)
        return [p.eval_series_float(arrays, D, cache) for p in self.polys]

    def __repr__(self):
        return f"PolyField({self.name!r}, n={self.n}, degree={self.degree})"


def _ball_of(x):
    if isinstance(x, Ball):
        return x
    return Ball.from_intervals([as_interval(t) for t in x])


# --------------------------------------------------------------------------
# Krawczyk


def krawczyk(F, DF, z, scale=None, max_expand=12, region=False):
    """
    Prove a unique zero of F near the float vector z.

    F(Ball) -> Ball (values on a point, may carry parameter uncertainty) and
    DF(Ball) -> Ball matrix (enclosure over a box).  Returns a Ball enclosure
    or raises NoContraction.  With region=True also returns the box on
    which uniqueness was proved.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    C = np.linalg.inv(DF(Ball(z)).mid)
    Fz = F(Ball(z))
    step = np.abs(C @ Fz.mid) + np.abs(C) @ Fz.rad
    base = max(4.0 * float(np.max(step)), 1e-15 * (1.0 + float(np.max(np.abs(z)))))
    if scale is not None:
        base = max(base, scale)
    I = np.eye(n)
    center = Ball(z) - Ball(C) @ Fz
    for j in range(max_expand):
        rho = base * 8.0 ** j
        Z = Ball(z, rho)
        M = Ball(I) - Ball(C) @ DF(Z)
        K = center + M @ Ball(np.zeros(n), rho)
        if np.all(K.lo > Z.lo) and np.all(K.hi < Z.hi):
            # a couple of tightening sweeps on the contracted box
            for _ in range(2):
                rad = K.rad + np.abs(K.mid - z)
                M = Ball(I) - Ball(C) @ DF(Ball(z, rad))
                K2 = center + M @ Ball(K.mid - z, K.rad)
                lo = np.maximum(K.lo, K2.lo)
                hi = np.minimum(K.hi, K2.hi)
                if np.any(lo > hi):
                    break
                K = Ball.from_lohi(lo, hi)
            return (K, Z) if region else K
    raise NoContraction("Krawczyk operator did not map the box into itself")


# --------------------------------------------------------------------------
# equilibria


@dataclass
class VerifiedEquilibrium:
    location: List[Interval]
    box: Ball
    on_horizon: bool
    eigenvalues: List[Interval]
    eigenvectors: List[Ball]
    complex_pairs: List[Tuple[Interval, Interval]] = dc_field(default_factory=list)
    name: str = ""

    @property
    def stable_count(self):
        return sum(1 for l in self.eigenvalues if l.hi < 0)

    @property
    def unstable_count(self):
        return (sum(1 for l in self.eigenvalues if l.lo > 0)
                + 2 * sum(1 for re, _ in self.complex_pairs if re.lo > 0))

    @property
    def stable(self):
        """(eigenvalues, eigenvectors) of the stable real directions, sorted by lambda."""
        pairs = [(l, v) for l, v in zip(self.eigenvalues, self.eigenvectors) if l.hi < 0]
        pairs.sort(key=lambda p: p[0].mid)
        return [p[0] for p in pairs], [p[1] for p in pairs]

    @property
    def kind(self):
        n = len(self.location)
        if self.stable_count == n:
            return "sink"
        if self.unstable_count == n:
            return "source"
        return "saddle"

    def mid(self):
        return self.box.mid.copy()


def _refine_zero(fun, jac, x, iters=30):
    x = np.array(x, dtype=float)
    for _ in range(iters):
        dx = np.linalg.solve(jac(x), fun(x))
        x = x - dx
        if np.max(np.abs(dx)) <= 4e-16 * (1 + np.max(np.abs(x))):
            break
    return x


def horizon_gradient(spec, n):
    """Exact polynomial h with horizon {h = h0}; returns (h, h0)."""
    if spec is None:
        return None, None
    if spec.kind == "directional":
        return QPoly.var(n, spec.index), 0
    h = QPoly(n)
    for i, b in enumerate(spec.beta):
        h = h + QPoly.var(n, i) ** (2 * b)
    return h, 1


def _certify_on_horizon(g, xhat, box, unique=None):
    """
    Prove that the equilibrium enclosed by `box` lies on the horizon.

    Solves {g_j = 0 (j != j0), h = h0} by Krawczyk.  If dh/dx_j0 != 0 on the
    resulting box, the zero is an equilibrium (the horizon is invariant, so
    grad h . g = 0 there), hence by uniqueness on `unique` it is the one in `box`.
    """
    unique = box if unique is None else unique
    h, h0 = horizon_gradient(g.spec, g.n)
    if h is None:
        return False
    hp = h.to_poly()
    if not hp.eval_ball(box).interval().contains(float(h0)):
        return False
    dh = [h.diff(j).to_poly() for j in range(g.n)]
    j0 = int(np.argmax([abs(d.eval_float(xhat)) for d in dh]))
    rows = [j for j in range(g.n) if j != j0]
    J = g.jac_polys()

    def F(X):
        if not np.any(X.rad):
            z = [float(v) for v in X.mid]
            return Ball.from_intervals([Interval.exact(g.q[j](*z)) for j in rows]
                                       + [Interval.exact(h(*z) - h0)])
        vals = [g.polys[j].eval_ball(X) for j in rows] + [hp.eval_ball(X) - float(h0)]
        return Ball(np.array([v.mid for v in vals]), np.array([v.rad for v in vals]))

    def DF(X):
        polys = [J[j] for j in rows] + [dh]
        mid = np.zeros((g.n, g.n))
        rad = np.zeros((g.n, g.n))
        for a, row in enumerate(polys):
            for b, p in enumerate(row):
                v = p.eval_ball(X)
                mid[a, b], rad[a, b] = v.mid, v.rad
        return Ball(mid, rad)

    try:
        K = krawczyk(F, DF, xhat)
    except (NoContraction, np.linalg.LinAlgError):
        return False
    if np.any(dh[j0].eval_ball(K).contains_zero()):
        return False
    return bool(np.all(K.lo >= unique.lo) and np.all(K.hi <= unique.hi))


def _real_eigpair(A, lam, vec):
    """Krawczyk on (A xi - lam xi) with xi_k = 1 at the largest component."""
    n = A.shape[0]
    k = int(np.argmax(np.abs(vec)))
    vec = vec / vec[k]
    free = [j for j in range(n) if j != k]
    z0 = np.concatenate([[lam], vec[free]])

    def xi_of(Z):
        mid = np.ones(n)
        rad = np.zeros(n)
        mid[free] = Z.mid[1:]
        rad[free] = Z.rad[1:]
        return Ball(mid, rad)

    def F(Z):
        xi = xi_of(Z)
        return A @ xi - xi * Z[0]

    def DF(Z):
        xi = xi_of(Z)
        cols_mid = np.zeros((n, n))
        cols_rad = np.zeros((n, n))
        cols_mid[:, 0], cols_rad[:, 0] = -xi.mid, xi.rad
        Al = A - Ball(np.eye(n)) * Z[0]
        cols_mid[:, 1:], cols_rad[:, 1:] = Al.mid[:, free], Al.rad[:, free]
        return Ball(cols_mid, cols_rad)

    K = krawczyk(F, DF, z0)
    return K[0].interval(), xi_of(K)


def _complex_pair(A, lam, vec):
    """Real 2n formulation for mu + i nu with u_k = 1, w_k = 0."""
    n = A.shape[0]
    k = int(np.argmax(np.abs(vec)))
    vec = vec / vec[k]
    free = [j for j in range(n) if j != k]
    z0 = np.concatenate([[lam.real, lam.imag], vec.real[free], vec.imag[free]])
    f = len(free)

    def uw(Z):
        u_mid, u_rad = np.ones(n), np.zeros(n)
        w_mid, w_rad = np.zeros(n), np.zeros(n)
        u_mid[free], u_rad[free] = Z.mid[2:2 + f], Z.rad[2:2 + f]
        w_mid[free], w_rad[free] = Z.mid[2 + f:], Z.rad[2 + f:]
        return Ball(u_mid, u_rad), Ball(w_mid, w_rad)

    def F(Z):
        u, w = uw(Z)
        mu, nu = Z[0], Z[1]
        r1 = A @ u - u * mu + w * nu
        r2 = A @ w - w * mu - u * nu
        return Ball(np.concatenate([r1.mid, r2.mid]), np.concatenate([r1.rad, r2.rad]))

    def DF(Z):
        u, w = uw(Z)
        mu, nu = Z[0], Z[1]
        Al = A - Ball(np.eye(n)) * mu
        E = np.eye(n)[:, free]
        top = [(-u).mid[:, None], w.mid[:, None], Al.mid[:, free], (Ball(E) * nu).mid]
        toprad = [u.rad[:, None], w.rad[:, None], Al.rad[:, free], (Ball(E) * nu).rad]
        bot = [(-w).mid[:, None], (-u).mid[:, None], (-(Ball(E) * nu)).mid, Al.mid[:, free]]
        botrad = [w.rad[:, None], u.rad[:, None], (Ball(E) * nu).rad, Al.rad[:, free]]
        mid = np.vstack([np.hstack(top), np.hstack(bot)])
        rad = np.vstack([np.hstack(toprad), np.hstack(botrad)])
        return Ball(mid, rad)

    K = krawczyk(F, DF, z0)
    return K[0].interval(), K[1].interval()


def verify_equilibrium(g, guess, box_radius=None, name=""):
    """Prove an isolated equilibrium near `guess` together with its eigen-structure."""
    x = _refine_zero(g.eval_float, g.jacobian_float, guess)

    def F(Z):
        # point residuals are summed exactly; boxes fall back to Ball evaluation
        return g.eval_exact(Z.mid) if not np.any(Z.rad) else g.eval_ball(Z)

    K, uniq = krawczyk(F, g.jacobian_ball, x, scale=None, region=True)
    if box_radius is not None and np.max(K.rad) > box_radius:
        raise NoContraction("equilibrium enclosure wider than requested box")
    A = g.jacobian_box(K)
    w, V = np.linalg.eig(A.mid)
    eigs, vecs, cpx = [], [], []
    done = set()
    for idx in np.argsort(w.real):
        if idx in done:
            continue
        lam = w[idx]
        if abs(lam.imag) > 1e-12 * max(1.0, abs(lam)):
            # conjugate partner
            partner = min((j for j in range(len(w)) if j != idx and j not in done),
                          key=lambda j: abs(w[j] - np.conj(lam)))
            done.update({idx, partner})
            lp = lam if lam.imag > 0 else np.conj(lam)
            vp = V[:, idx] if lam.imag > 0 else np.conj(V[:, idx])
            try:
                cpx.append(_complex_pair(A, lp, vp))
            except (NoContraction, np.linalg.LinAlgError) as e:
                raise ComplexPair(f"could not enclose complex pair {lp}") from e
            continue
        done.add(idx)
        lam_i, xi = _real_eigpair(A, lam.real, V[:, idx].real)
        eigs.append(lam_i)
        vecs.append(xi)
    for l in eigs:
        if l.contains(0.0):
            raise NonHyperbolic(f"eigenvalue enclosure {l} contains zero")
    for re, _ in cpx:
        if re.contains(0.0):
            raise NonHyperbolic(f"complex pair real part {re} contains zero")
    on_h = _certify_on_horizon(g, K.mid, K, uniq)
    return VerifiedEquilibrium(list(K.intervals()), K, on_h, eigs, vecs, cpx, name)


def check_nonresonance(lambdas, others=()):
    """
    Certify alpha . lambda != lambda_j for |alpha| >= 2.  Returns (True, gap)
    with gap the smallest |alpha . lambda - lambda_j| over the checked range.
    """
    lambdas = [as_interval(l) for l in lambdas]
    if not lambdas:
        raise ValueError("no stable eigenvalues")
    if any(l.hi >= 0 for l in lambdas):
        raise DomainError("stable eigenvalues must be negative")
    targets = lambdas + [as_interval(l) for l in others if as_interval(l).hi < 0]
    big = max(t.mag for t in targets)
    small = min(l.mig for l in lambdas)
    cutoff = int(ceil(big / small)) + 1
    m = len(lambdas)
    gap = np.inf
    for alpha in multi_indices(m, max(cutoff, 2), lo=2):
        s = Interval(0.0)
        for a, l in zip(alpha, lambdas):
            s = s + a * l
        for t in targets:
            d = s - t
            if d.contains(0.0):
                raise ResonancePossible(f"alpha={alpha} resonates with {t}")
            gap = min(gap, d.mig)
    # beyond the cutoff |alpha . lambda| >= (cutoff+1) min|lambda| > max|lambda_j|
    gap = min(gap, (cutoff + 1) * small - big)
    return True, gap
