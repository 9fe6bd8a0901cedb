"""
Rigorous Taylor integration of polynomial fields.

One step from the set X = c + B r (Lohner's parallelepiped form):

    phi(h, x0) in Phi(c) + DPhi(X)(x0 - c) + R,
    Phi(x)  = sum_{k<=p} X_k(x) h^k,
    R       = X_{p+1}(Y) h^{p+1},

with Y a high-order a priori enclosure of the tube.  The new frame B' is
the Q factor of mid(DPhi B) with columns sorted by their contribution, and
r' = (B'^-1 DPhi B) r + B'^-1 (Phi(c) + R - c').

The passing time int S dtau is carried as an extra state variable, so a
rational S = num / x_j^d costs one more variable w = 1/x_j.
"""

import csv
from dataclasses import dataclass, field as dc_field
from typing import List

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from ._taylor import compile_field, horner, taylor_kernel
from .ball import Ball, _ub, gamma
from .compactify import horizon_value
from .field import PolyField
from .interval import DomainError, Interval, int_pow
from .poly import QPoly
from .series import differentiate, eval_series

ORDER = 15
U = 2.0 ** -53


class NoEnclosure(ArithmeticError):
    """No a priori enclosure found for the step."""


class DomainExit(DomainError):
    """The tube reached the horizon."""


# --------------------------------------------------------------------------
# augmented fields


def _horizon_poly(spec, n):
    """p(x)^{2c} as a QPoly for the global compactifications."""
    H = QPoly(n)
    for i, b in enumerate(spec.beta):
        H = H + QPoly.var(n, i) ** (2 * b)
    return H


def augment_passing_time(field, reverse=False, horizon=True):
    """
    Field for (x, [w], [H], t) with t' = S(x) >= 0 accumulating the passing
    time.  For rational S = num / x_j^d the extra w = 1/x_j has w' = -g_j w^2.
    For global charts H = p(x)^{2c} rides along (H' = grad H . g), so the
    horizon test sees p^{2c} on the trajectory rather than on box corners.
    Returns (augmented field, init) where init(box) gives the initial Ball.
    """
    if field.timefactor is None:
        raise DomainError("field has no time factor")
    num, den = field.timefactor
    n = field.n
    sgn = -1 if reverse else 1
    g = [sgn * c for c in field.q]
    spec = field.spec
    use_h = horizon and spec is not None and spec.kind != "directional"
    extra = (0 if den is None else 1) + (1 if use_h else 0) + 1
    m = n + extra
    pad = (0,) * extra
    lift = lambda p: QPoly(m, {e + pad: c for e, c in p.terms.items()})
    comps = [lift(c) for c in g]
    j = d = None
    if den is not None:
        terms = list(den.terms.items())
        if len(terms) != 1:
            raise DomainError("rational time factor must have a monomial denominator")
        (e, c0), = terms
        vars_ = [i for i in range(n) if e[i]]
        if len(vars_) != 1:
            raise DomainError("denominator must be a power of a single variable")
        j, d = vars_[0], e[vars_[0]]
        w = QPoly.var(m, n)
        comps.append(-1 * comps[j] * w ** 2)
        S = lift(num) * w ** d * (1 / c0)
    else:
        S = lift(num)
    if use_h:
        Hq = _horizon_poly(spec, n)
        H = lift(Hq)
        dH = QPoly(m)
        for i in range(n):
            dH = dH + H.diff(i) * comps[i]
        comps.append(dH)
        Hp = Hq.to_poly()
    comps.append(S)

    def init(box):
        mid, rad = list(box.mid), list(box.rad)
        if den is not None:
            xj = box.interval(j)
            if xj.contains(0.0):
                raise DomainError("denominator variable vanishes on the initial box")
            wj = 1 / xj
            mid.append(wj.mid)
            rad.append(float(_ub(wj.rad, 1)))
        if use_h:
            hv = Hp.eval_ball(box)
            mid.append(float(hv.mid))
            rad.append(float(hv.rad))
        mid.append(0.0)
        rad.append(0.0)
        return Ball(np.array(mid), np.array(rad))

    aug = PolyField(comps, spec, None, field.name + ("-rev" if reverse else "") + "+t")
    aug.base_dim = n
    aug.horizon_index = m - 2 if use_h else None
    return aug, init


# --------------------------------------------------------------------------
# Lohner sets


@dataclass
class LohnerSet:
    c: np.ndarray
    B: np.ndarray
    r: Ball

    @classmethod
    def from_ball(cls, x):
        c = x.mid.copy()
        return cls(c, np.eye(c.size), Ball(np.zeros(c.size), x.rad).inflate(0.0))

    def box(self):
        return Ball(self.c) + Ball(self.B) @ self.r


def _rigorous_inverse(Q):
    """Ball enclosure of Q^{-1} for a well-conditioned float matrix."""
    n = Q.shape[0]
    M = np.linalg.inv(Q)
    E = Ball(np.eye(n)) - Ball(M) @ Ball(Q)
    e = float(np.max(np.sum(E.mag(), axis=1)))
    if e >= 0.5:
        raise ArithmeticError("frame matrix too ill-conditioned")
    bound = float(_ub(np.max(np.sum(np.abs(M), axis=1)) * e / (1 - e), 4))
    return Ball(M, bound)


@dataclass
class StepRecord:
    tau: Interval
    box: Ball
    tube: Ball


@dataclass
class TrajectoryEnclosure:
    field: PolyField
    records: List[StepRecord] = dc_field(default_factory=list)
    snapshots: dict = dc_field(default_factory=dict)
    state: LohnerSet = None
    tau: Interval = Interval(0.0)
    reverse: bool = False
    status: str = "running"
    t_float: float = 0.0

    @property
    def final_box(self):
        return self.records[-1].box if self.records else self.state.box()

    @property
    def passing_time(self):
        """Interval of the accumulated time variable (last component)."""
        if not self.records:
            return Interval(0.0)  # the time variable starts at exactly 0
        return self.final_box.interval(-1)

    def max_width(self):
        return float(np.max(2 * self.final_box.rad))

    def to_csv(self, path):
        n = self.final_box.shape[0]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau_lo", "tau_hi"] + [f"x{i + 1}_{s}" for i in range(n) for s in ("lo", "hi")])
            for rec in self.records:
                lo, hi = rec.box.lo, rec.box.hi
                w.writerow([repr(rec.tau.lo), repr(rec.tau.hi)]
                           + [repr(float(v)) for i in range(n) for v in (lo[i], hi[i])])


# --------------------------------------------------------------------------
# integrator


class TaylorIntegrator:
    def __init__(self, field, order=ORDER, tol=1e-18, hmax=1.0, hmin=1e-10, domain=None, rtol=1e-14):
        self.field = field
        self.p = order
        self.tol = tol
        self.hmax = hmax
        self.hmin = hmin
        self.rtol = rtol  # max remainder radius per step, relative
        self.arr = compile_field(field)
        self.domain = domain  # CompactificationSpec for the horizon check
        self.base_dim = getattr(field, "base_dim", field.n)
        self.horizon_index = getattr(field, "horizon_index", None)

    def coeffs(self, lo, hi, order=None, deriv=False):
        p = self.p if order is None else order
        return taylor_kernel(np.asarray(lo, float), np.asarray(hi, float), p, *self.arr, deriv)

    def suggest_step(self, c):
        Xl, Xh, _, _ = self.coeffs(c, c)
        scale = max(1.0, float(np.max(np.abs(c))))
        h = self.hmax
        for k in (self.p - 1, self.p):
            a = float(np.max(np.maximum(np.abs(Xl[k]), np.abs(Xh[k]))))
            if a > 0:
                h = min(h, (self.tol * scale / a) ** (1.0 / k))
        return h

    def apriori(self, X0, h, rounds=20, order=None):
        """
        Box Y with sum_{k<q} X_k(X0) [0,h]^k + X_q(Y) [0,h]^q inside Y
        (high-order enclosure test; q = 1 is the Picard test).
        """
        q = min(self.p, 8) if order is None else order
        hk = np.array([float(int_pow(Interval(h), k).hi) for k in range(q + 1)])
        Xl, Xh, _, _ = self.coeffs(X0.lo, X0.hi, order=q)
        base_lo = np.zeros(X0.shape)
        base_hi = np.zeros(X0.shape)
        base_lo += X0.lo
        base_hi += X0.hi
        for k in range(1, q):
            base_lo = np.nextafter(base_lo + np.minimum(0.0, np.nextafter(Xl[k] * hk[k], -np.inf)), -np.inf)
            base_hi = np.nextafter(base_hi + np.maximum(0.0, np.nextafter(Xh[k] * hk[k], np.inf)), np.inf)

        def image(lo, hi):
            Yl, Yh, _, _ = self.coeffs(lo, hi, order=q - 1)
            sl = np.minimum(0.0, np.nextafter(Yl[q] * hk[q], -np.inf))
            sh = np.maximum(0.0, np.nextafter(Yh[q] * hk[q], np.inf))
            return np.nextafter(base_lo + sl, -np.inf), np.nextafter(base_hi + sh, np.inf)

        lo, hi = image(base_lo, base_hi)
        for _ in range(rounds):
            pad = 0.1 * (hi - lo) + 1e-14 * (1 + np.abs(lo) + np.abs(hi))
            lo, hi = lo - pad, hi + pad
            nlo, nhi = image(lo, hi)
            if np.all(nlo > lo) and np.all(nhi < hi):
                return nlo, nhi
            lo, hi = np.minimum(lo, nlo), np.maximum(hi, nhi)
        raise NoEnclosure(f"no a priori enclosure for h = {h:.3e}")

    def check_domain(self, lo, hi):
        spec = self.domain
        if spec is None:
            return
        if self.horizon_index is not None:
            v = Interval(float(lo[self.horizon_index]), float(hi[self.horizon_index]))
        else:
            k = self.base_dim
            x = [Interval(float(a), float(b)) for a, b in zip(lo[:k], hi[:k])]
            v = horizon_value(x, spec)
        if spec.kind == "directional":
            if v.lo < 1e-12:
                raise DomainExit(f"tube reaches s = {v.lo:.3e}")
        elif v.hi > 1 - 1e-12:
            raise DomainExit(f"tube reaches p^2c = {v.hi!r}")

    def step(self, S, h):
        """rigorous_step: (new LohnerSet, tube (lo, hi)) for the exact float step h."""
        X0 = S.box()
        Ylo, Yhi = self.apriori(X0, h)
        p = self.p
        n = S.c.size
        Xl, Xh, _, _ = self.coeffs(S.c, S.c)
        Pl, Ph = horner(Xl[:p + 1], Xh[:p + 1], p, h)
        Bl, Bh, Dl, Dh = self.coeffs(X0.lo, X0.hi, deriv=True)
        Jl, Jh = horner(Dl[:p + 1].reshape(p + 1, n * n), Dh[:p + 1].reshape(p + 1, n * n), p, h)
        Rl, Rh, _, _ = self.coeffs(Ylo, Yhi)
        hp = int_pow(Interval(h), p + 1)
        R = Ball.from_lohi(Rl[p + 1], Rh[p + 1]) * Ball.from_interval(hp)
        if self.rtol is not None and np.max(R.rad) > self.rtol * (1 + np.max(np.abs(S.c))):
            raise NoEnclosure(f"remainder {np.max(R.rad):.2e} too large for h = {h:.3e}")
        Ylo, Yhi = self._tighten_tube(X0, Bl, Bh, Rl[p + 1], Rh[p + 1], h, Ylo, Yhi)
        self.check_domain(Ylo, Yhi)
        z = Ball.from_lohi(Pl, Ph) + R
        J = Ball.from_lohi(Jl.reshape(n, n), Jh.reshape(n, n))
        JB = J @ Ball(S.B)
        A = JB.mid
        weight = np.linalg.norm(A, axis=0) * (np.abs(S.r.mid) + S.r.rad)
        perm = np.argsort(-weight, kind="stable")
        Q, Rq = np.linalg.qr(A[:, perm])
        Q = Q * np.sign(np.where(np.diag(Rq) == 0, 1.0, np.diag(Rq)))
        if np.linalg.cond(A) > 1e12:
            Q = np.eye(n)
        Qi = _rigorous_inverse(Q)
        c_new = z.mid.copy()
        r_new = (Qi @ JB) @ S.r + Qi @ (z - Ball(c_new))
        return LohnerSet(c_new, Q, r_new), (Ylo, Yhi)

    def _tighten_tube(self, X0, Bl, Bh, Rl, Rh, h, Ylo, Yhi):
        # X0 + sum_k [0,h]^k X_k(X0) + [0,h]^{p+1} X_{p+1}(Y), intersected with Y
        lo, hi = X0.lo.copy(), X0.hi.copy()
        hk = 1.0
        for k in range(1, self.p + 2):
            hk = np.nextafter(hk * h, np.inf)
            cl, ch = (Bl[k], Bh[k]) if k <= self.p else (Rl, Rh)
            lo = np.nextafter(lo + np.minimum(0.0, np.nextafter(cl * hk, -np.inf)), -np.inf)
            hi = np.nextafter(hi + np.maximum(0.0, np.nextafter(ch * hk, np.inf)), np.inf)
        return np.maximum(lo, Ylo), np.minimum(hi, Yhi)

    def _step_loose(self, S, h):
        # a shorter step than an accepted one; the remainder test is moot
        saved, self.rtol = self.rtol, None
        try:
            return self.step(S, h)
        finally:
            self.rtol = saved

    def integrate(self, x0, T, stops=(), until=None, max_steps=200000, traj=None):
        """
        Integrate the set x0 (Ball or LohnerSet) over tau in [0, T].  `stops`
        are intermediate times at which snapshots are recorded; `until(box)`
        returning True ends the run early with status 'event'.
        """
        S = x0 if isinstance(x0, LohnerSet) else LohnerSet.from_ball(x0)
        if traj is None:
            traj = TrajectoryEnclosure(self.field, state=S)
        t = traj.tau
        h_last = np.inf
        marks = sorted(float(s) for s in stops if 0 < s < T) + [float(T)]
        t_float = traj.t_float
        for mark in marks:
            while t_float < mark:
                if len(traj.records) >= max_steps:
                    traj.status = "max_steps"
                    return traj
                h = min(self.suggest_step(S.c), 1.5 * h_last, mark - t_float)
                while True:
                    try:
                        S_new, (Ylo, Yhi) = self.step(S, h)
                        break
                    except (NoEnclosure, DomainExit) as exc:
                        # a tube poking through the curved horizon may just be too long
                        h *= 0.5
                        if h < self.hmin:
                            traj.status = "domain_exit" if isinstance(exc, DomainExit) else "no_enclosure"
                            raise
                h_last = h
                if t_float + h >= mark:
                    h_taken = mark - t_float
                    if h_taken != h:
                        S_new, (Ylo, Yhi) = self._step_loose(S, h_taken)
                    h = h_taken
                S = S_new
                t = t + Interval(h)
                t_float = t_float + h if t_float + h < mark else mark
                box = S.box()
                traj.records.append(StepRecord(t, box, Ball.from_lohi(Ylo, Yhi)))
                traj.state = S
                traj.tau = t
                traj.t_float = t_float
                if until is not None and until(box):
                    traj.status = "event"
                    return traj
            if mark != marks[-1] or stops:
                traj.snapshots[mark] = (t, S.box())
        traj.status = "done"
        return traj


def extend_manifold(chart, theta, T, reverse=True, stops=(), until=None, order=ORDER, domain=True):
    """
    Integrate the chart point P(theta) for desingularized time T, backward
    by default (the chart is a stable manifold), carrying the passing time.
    """
    aug, init = augment_passing_time(chart.field, reverse=reverse)
    x0 = Ball.from_intervals(chart.eval(theta))
    X = init(x0)
    integ = TaylorIntegrator(aug, order=order, domain=chart.field.spec if domain else None)
    traj = integ.integrate(X, T, stops=stops, until=until)
    traj.reverse = reverse
    return traj


# --------------------------------------------------------------------------
# attracting neighborhoods


@dataclass
class LyapunovNeighborhood:
    """{(x - p)^T M (x - p) <= rho} is forward invariant and attracted to p."""
    center: Ball
    M: np.ndarray
    rho: float
    delta: float

    def contains(self, box):
        k = self.center.shape[0]
        d = Ball(box.mid[:k], box.rad[:k]) - self.center
        V = (Ball(self.M) @ d) * d
        return float(V.sum().hi) < self.rho


def lyapunov_neighborhood(field, eq, deltas=(0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3, 3e-4, 1e-4)):
    """
    Certified attracting neighborhood of the sink eq of `field`.  Uses
    J^T M + M J = -I at the midpoint and the interval test that
    M Dg(xi) + Dg(xi)^T M is negative definite on the delta-box.
    """
    c = eq.box
    n = c.shape[0]
    J = field.jacobian_float(c.mid)
    M = solve_continuous_lyapunov(J.T, -np.eye(n))
    M = 0.5 * (M + M.T)
    if np.min(np.linalg.eigvalsh(M)) <= 0:
        raise DomainError("Lyapunov matrix is not positive definite (not a sink?)")
    Mi = _rigorous_inverse(M)
    diag = Mi.mag().diagonal()
    for delta in deltas:
        box = c.inflate(delta)
        Jb = field.jacobian_ball(box)
        MJ = Ball(M) @ Jb
        Sym = MJ + MJ.T
        margin = np.sqrt(np.sum(Sym.rad ** 2)) + 1e-10 * (1 + np.linalg.norm(Sym.mid))
        if np.max(np.linalg.eigvalsh(0.5 * (Sym.mid + Sym.mid.T))) + margin < 0:
            rho = float(np.min(delta ** 2 / diag)) * (1 - 1e-9)
            return LyapunovNeighborhood(c, M, rho, delta)
    raise DomainError(f"no certified neighborhood of {eq.name or 'equilibrium'}")


def connect_to_source(chart, theta, source, T=200.0, order=ORDER):
    """
    Certify that the backward orbit of P(theta) enters an attracting
    neighborhood of `source` for the reversed field.  Returns the trajectory
    with status 'event' on success.
    """
    nb = lyapunov_neighborhood(chart.field.reversed(), source)
    traj = extend_manifold(chart, theta, T, reverse=True, until=nb.contains, order=order)
    traj.neighborhood = nb
    return traj


def connect_to_sink(field, x0, sink, T=200.0, order=ORDER):
    """Forward orbit of the box x0 enters a certified neighborhood of `sink`."""
    nb = lyapunov_neighborhood(field, sink)
    integ = TaylorIntegrator(field, order=order, domain=field.spec)
    traj = integ.integrate(as_box(x0), T, until=nb.contains)
    traj.neighborhood = nb
    return traj


def as_box(x):
    if isinstance(x, Ball):
        return x
    return Ball.from_intervals([v if isinstance(v, Interval) else Interval(float(v)) for v in x])


# --------------------------------------------------------------------------
# chart inversion


def _tail_derivative_factor(rho):
    """max_{j>=1} j rho^(j-1): bound of a derivative of a unit l1 tail on |theta| <= rho."""
    if rho >= 1:
        return np.inf
    j = max(1, int(np.floor(-1.0 / np.log(rho))) if rho > 0 else 1)
    return max(k * rho ** (k - 1) for k in (j, j + 1, 1))


def invert_chart(chart, box, rho_max=0.95):
    """
    Ball enclosure of the unique theta with P(theta) = x for every x in box
    (m = n charts).  Raises NoContraction / DomainError if not certified.
    """
    from .field import krawczyk
    if chart.m != chart.n:
        raise DomainError("inversion needs a full-dimensional chart")
    n = chart.n
    xb = Ball(box.mid[:n], box.rad[:n])
    comps = list(chart.coeffs)
    dcomps = [[differentiate(s, k) for k in range(n)] for s in comps]
    r0 = chart.r0.hi

    def theta_list(T):
        out = [Interval(float(lo), float(hi)) for lo, hi in zip(T.lo, T.hi)]
        for t in out:
            if t.mag > rho_max:
                raise DomainError("theta leaves the inversion polydisc")
        return out

    def F(T):
        th = theta_list(T)
        vals = [eval_series(s, th).inflate(r0) for s in comps]
        return Ball.from_intervals(vals) - xb

    def DF(T):
        th = theta_list(T)
        rho = max(t.mag for t in th)
        e = r0 * _tail_derivative_factor(rho)
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for k in range(n):
                out[i, k] = eval_series(dcomps[i][k], th).inflate(e)
        return Ball.from_intervals(out)

    z = _float_inverse(chart, xb.mid)
    if z is None:
        raise DomainError("no approximate preimage in the unit polydisc")
    return krawczyk(F, DF, z)


def _peval(c, th):
    # float polynomial with coefficient array c[alpha] at theta
    res = c
    for t in reversed(th):
        res = np.polynomial.polynomial.polyval(t, res.T).T if res.ndim > 1 else \
            np.polynomial.polynomial.polyval(t, res)
    return float(res)


def _float_arrays(chart):
    cache = chart.__dict__.get("_float_arrays")
    if cache is None:
        vals = [s.coef.mid for s in chart.coeffs]
        ders = [[differentiate(s, k).coef.mid for k in range(chart.m)] for s in chart.coeffs]
        cache = chart.__dict__["_float_arrays"] = (vals, ders)
    return cache


def _float_inverse(chart, x, iters=50):
    """Newton for P(theta) = x from theta = 0; None if it leaves the unit polydisc."""
    vals, ders = _float_arrays(chart)
    th = np.zeros(chart.m)
    for _ in range(iters):
        P = np.array([_peval(c, th) for c in vals])
        D = np.array([[_peval(c, th) for c in row] for row in ders])
        try:
            step = np.linalg.solve(D, P - x)
        except np.linalg.LinAlgError:
            return None
        th = th - step
        if not np.all(np.abs(th) < 1):
            return None
        if np.max(np.abs(step)) < 1e-16:
            break
    return th


# --------------------------------------------------------------------------
# float helpers


def float_flow(field, x0, T, rtol=1e-13, atol=1e-15, events=None, dense=False):
    """scipy reference solution (non-rigorous)."""
    from scipy.integrate import solve_ivp
    return solve_ivp(lambda t, x: field.eval_float(x), (0.0, T), np.asarray(x0, float),
                     method="DOP853", rtol=rtol, atol=atol, events=events, dense_output=dense)
