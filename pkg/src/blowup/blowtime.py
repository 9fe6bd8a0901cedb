"""
Blow-up time enclosures on certified charts.

On a chart P with P(e^{Lambda tau} theta) = phi(tau, P(theta)) the local
blow-up time is

    t_max(theta) = int_0^inf S(P(e^{Lambda tau} theta)) dtau
                 = - sum_{|alpha| > 0} (S o P)_alpha theta^alpha / (alpha . lambda),

valid when (S o P)_0 = S(x*) = 0, i.e. the equilibrium is on the horizon.
The unknown part of the coefficients (from the chart radius r0) has l1 norm
at most T; every term has |alpha| >= 1, so it contributes at most
max|theta_i| T / min|lambda| on the polydisc (nothing at theta = 0).
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ball import Ball, _ub, gamma
from .compactify import horizon_value
from .interval import Interval, DomainError, from_digits
from .poly import QPoly, SeriesPowerCache
from .series import Series, cauchy_product, eval_series, total_degree, _check_polydisc


class ValidityError(DomainError):
    """The series expression does not apply at this theta."""


@dataclass
class BlowupTimeResult:
    local: Interval
    passing: Interval
    theta: tuple = ()

    @property
    def total(self):
        return self.local + self.passing


class TmaxSeries:
    """t_max(theta) = sum b_alpha theta^alpha + [-err, err] on the unit polydisc."""

    def __init__(self, coef, err, chart=None, check=None):
        # the sum runs over |alpha| > 0, so the constant term is exactly 0
        c0 = (0,) * coef.m
        coef.coef.mid[c0] = 0.0
        coef.coef.rad[c0] = 0.0
        self.coef = coef  # Series with tail 0
        self.err = float(err)
        self.chart = chart
        self.check = check

    def __call__(self, theta):
        theta = _theta_tuple(theta)
        _check_polydisc(theta)
        # theta = 0 is the certified horizon equilibrium itself
        if self.check is not None and _theta_mag(theta) > 0:
            self.check(theta)
        return self._value(theta)

    def unchecked(self, theta):
        """Series value without the domain check (for points on the horizon itself)."""
        theta = _theta_tuple(theta)
        _check_polydisc(theta)
        return self._value(theta)

    def _value(self, theta):
        t = _theta_mag(theta)
        if t == 0:
            return Interval(0.0)
        v = eval_series(self.coef, theta)
        return v.inflate(_ub(self.err * t, 1)) if self.err and t else v

    def eval_float(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        res = self.coef.coef.mid
        for t in reversed(theta):
            res = np.polynomial.polynomial.polyval(t, res.T).T if res.ndim > 1 else \
                np.polynomial.polynomial.polyval(t, res)
        return float(res)

    def derivative_float(self, theta, order=1):
        """m = 1 only: term-differentiated series."""
        c = self.coef.coef.mid
        if c.ndim != 1:
            raise ValueError("derivative_float is for m = 1 series")
        d = np.polynomial.polynomial.polyder(c, order)
        return float(np.polynomial.polynomial.polyval(theta, d))


def _theta_tuple(theta):
    if isinstance(theta, Interval):
        return (theta,)
    return tuple(theta) if np.ndim(theta) else (theta,)


def _theta_mag(theta):
    return max(t.mag if isinstance(t, Interval) else abs(float(t)) for t in theta)


def _divide_by_alpha_lambda(c, lam):
    """Ball coefficients c_alpha / (alpha . lambda) for |alpha| >= 1, zero at alpha = 0."""
    m = c.mid.ndim
    D = c.shape[0] - 1
    w = Ball(np.zeros(c.shape))
    lb = Ball.from_intervals(lam)
    for k in range(m):
        shape = [1] * m
        shape[k] = D + 1
        w = w + Ball(np.broadcast_to(np.arange(D + 1, dtype=float).reshape(shape), c.shape)) * lb[k]
    deg = total_degree(m, D)
    w.mid[deg == 0] = -1.0  # placeholder, zeroed below
    w.rad[deg == 0] = 0.0
    q = c / w
    q.mid[deg == 0] = 0.0
    q.rad[deg == 0] = 0.0
    return q


def compose_S(chart, S):
    """Rigorous S o P with the chart tail propagated."""
    comps = chart.coeffs.components
    cache = SeriesPowerCache(comps)
    return S.to_poly().eval_series(comps, cache)


def tmax_from_S(chart, S, check=None):
    """TmaxSeries for a polynomial integrand S vanishing on the horizon."""
    eq = chart.equilibrium
    if not eq.on_horizon:
        raise DomainError("equilibrium is not certified to lie on the horizon")
    SP = compose_S(chart, S)
    c0 = SP.coef.interval((0,) * SP.m)
    if not c0.contains(0.0):
        raise DomainError(f"(S o P)_0 = {c0} does not contain 0")
    b = -_divide_by_alpha_lambda(SP.coef, chart.Lambda)
    min_lam = min(l.mig for l in chart.Lambda)
    err = _ub(SP.tail / (min_lam * (1 - gamma(2))), 2)
    return TmaxSeries(Series(b, SP.N), err, chart, check)


def _inside_check(chart):
    spec = chart.field.spec

    def check(theta):
        x = chart.eval(theta)
        v = horizon_value(x, spec)
        if spec.kind == "directional":
            if v.lo < 0:
                raise ValidityError(f"s = {v} is not >= 0 at theta = {theta}")
        elif v.hi > 1:
            raise ValidityError(f"p(P(theta))^2c = {v} is not <= 1 at theta = {theta}")
    return check


def tmax_directional_series(chart, k=None, theta=None):
    """S = s^k with s the inverted coordinate of a directional chart."""
    spec = chart.field.spec
    k = spec.k if k is None else k
    S = QPoly.var(chart.n, spec.index) ** k
    ts = tmax_from_S(chart, S, _inside_check(chart))
    return ts if theta is None else ts(theta)


def tmax_poincare_homogeneous(chart, theta=None):
    """S = (1 - |x|^2)^{k/2} for the homogeneous Poincare compactification (k/2c integer)."""
    spec = chart.field.spec
    if spec.kind != "poincare" or spec.k % (2 * spec.c):
        raise DomainError("needs a homogeneous Poincare chart with k/2c a positive integer")
    n = chart.n
    r2 = QPoly(n)
    for i in range(n):
        r2 = r2 + QPoly.var(n, i) ** 2
    S = (1 - r2) ** (spec.k // (2 * spec.c))
    ts = tmax_from_S(chart, S, _inside_check(chart))
    return ts if theta is None else ts(theta)


def tmax_parabolic_example3(chart, theta=None):
    """
    Quasi-parabolic time factor S = H1 (1 - p^4), H1 = (1 + 3 p^4)/4, composed
    with the chart.  (The constant term of S o P vanishes on the horizon.)
    """
    n = chart.n
    x1, x2 = QPoly.var(n, 0), QPoly.var(n, 1)
    p4 = x1 ** 4 + x2 ** 2
    S = Fraction(1, 4) * (1 + 3 * p4) * (1 - p4)
    ts = tmax_from_S(chart, S, _inside_check(chart))
    return ts if theta is None else ts(theta)


def tmax_chart(chart):
    """The TmaxSeries matching the field's time factor."""
    num, den = chart.field.timefactor
    if den is not None:
        return tmax_rational_example1(chart)
    return tmax_from_S(chart, num, _inside_check(chart))


# --------------------------------------------------------------------------
# Example 1: S = x2 / x1^2 via the certified quotient R = Q / P1^2


@dataclass
class QuotientCertificate:
    Y0: float
    Z0: float
    Z1: float
    r_min: float
    N: int


def tmax_rational_example1(chart, theta=None, N=None):
    """
    t_max(theta) = -(1/lambda) sum r_n theta^{n+1}/(n+1) where R = Q/P1^2,
    Q(u) = P2(u)/u; R is certified by a linear radii-polynomial argument.
    """
    if chart.m != 1:
        raise DomainError("the quotient recipe is for one-dimensional charts")
    a1, a2 = chart.coeffs[0], chart.coeffs[1]
    N = chart.N if N is None else N
    r0 = chart.r0.hi
    c20 = a2.coef.interval(0)
    if not c20.contains(0.0):
        raise DomainError("second component does not vanish at the equilibrium")
    # q_n = (a2)_{n+1}
    qb = Ball(np.concatenate([a2.coef.mid[1:], [0.0]]), np.concatenate([a2.coef.rad[1:], [0.0]]))
    A1 = Series(a1.coef, a1.N)
    sq = cauchy_product(A1, A1)  # exact, degree 2N
    s0 = sq.coef.interval(0)
    if s0.contains(0.0):
        raise DomainError("P1 vanishes at the equilibrium")
    # float quotient
    sm = sq.coef.mid
    q = qb.mid
    rbar = np.zeros(N + 1)
    for k in range(N + 1):
        acc = q[k] if k < len(q) else 0.0
        acc -= np.dot(sm[1:k + 1][:k], rbar[:k][::-1]) if k else 0.0
        rbar[k] = acc / sm[0]
    # finite block of D psi: lower-triangular Toeplitz of (a1^2)_k
    idx = np.arange(N + 1)
    D = idx[:, None] - idx[None, :]
    valid = D >= 0
    Dc = np.where(valid, D, 0)
    T = Ball(np.where(valid, sq.coef.mid[Dc], 0.0), np.where(valid, sq.coef.rad[Dc], 0.0))
    A = np.linalg.inv(T.mid)
    Z0 = float(_ub(np.max(np.sum((Ball(np.eye(N + 1)) - Ball(A) @ T).mag(), axis=0)), N + 3))
    s0_inv = float(_ub(1.0 / s0.mig, 2))
    normA = max(float(_ub(np.max(np.sum(np.abs(A), axis=0)), N + 3)), s0_inv)
    # psi-bar(r-bar) = a1^2 * r - q
    psi = cauchy_product(sq, Series(Ball(rbar), N))
    full = psi.coef - Ball(np.concatenate([qb.mid, np.zeros(psi.N + 1 - len(qb.mid))]),
                           np.concatenate([qb.rad, np.zeros(psi.N + 1 - len(qb.rad))]))
    head = Ball(A) @ full[:N + 1]
    tail = full[N + 1:].norm1() * s0_inv
    norm_a1 = a1.coef.norm1()
    norm_r = float(np.sum(np.abs(rbar)))
    Y0 = float(_ub(head.norm1() + tail + normA * (2 * norm_a1 * norm_r + norm_r * r0 + 1.0) * r0, 8))
    beta = sq.coef[1:].norm1()
    Z1 = float(_ub(normA * (2 * r0 * norm_a1 + r0 * r0)
                   + s0_inv * (beta + 2 * norm_a1 * r0 + r0 * r0), 8))
    slack = 1 - Z0 - Z1
    if slack <= 0:
        from .manifold import VerificationFailed
        raise VerificationFailed("Z0+Z1", f"quotient certification failed ({Z0 + Z1:.3e})")
    r_min = float(_ub(Y0 / slack * (1 + 1e-6), 4))
    lam = chart.Lambda[0]
    n1 = np.arange(1, N + 2, dtype=float)
    coef = Ball(np.concatenate([[0.0], rbar / n1]),
                np.concatenate([[0.0], np.abs(rbar / n1) * 2 ** -52]))
    b = -(coef / Ball.from_interval(lam))
    err = r_min / lam.mig * (1 + 4 * 2 ** -52)
    ts = TmaxSeries(Series(b, N + 1), err, chart)
    ts.certificate = QuotientCertificate(Y0, Z0, Z1, r_min, N)
    return ts if theta is None else ts(theta)


def total_blowup_time(chart, theta_seed, traj=None, tseries=None):
    ts = tmax_chart(chart) if tseries is None else tseries
    local = ts(theta_seed)
    passing = Interval(0.0) if traj is None else traj.passing_time
    th = tuple(np.atleast_1d(theta_seed).tolist()) if not isinstance(theta_seed, tuple) else theta_seed
    return BlowupTimeResult(local, passing, th)


# --------------------------------------------------------------------------
# pipelines: blow-up times along integrated orbits

# (x1, x2) midpoints of sample points on W^s(p2) of Example 1, with the
# desingularized backward time at which the orbit from P(1) passes them
EX1_SAMPLE_POINTS = {
    "P2": ((1.971379977171242, 0.2226549022741960), 4.2494),
    "P3": ((1.895702934910388, 0.2414273500529820), 15.9045),
    "P4": ((1.897711586417846, 0.2503164490497678), 27.2437),
    "P5": ((1.899856004192508, 0.2501726525450568), 40.0),
}


# published total blow-up time enclosures for the same five points
EX1_PRINTED_TMAX = {
    "P1": from_digits("0.01945344745", "624", "758"),
    "P2": from_digits("0.1821531459", "776968", "806739"),
    "P3": from_digits("1.00170345745", "2293", "7477"),
    "P4": from_digits("1.78231786657", "067", "7252"),
    "P5": from_digits("2.6651422937", "42664", "50833"),
}


def locate_on_orbit(field, x0, targets, reverse=True, rtol=3e-14):
    """
    Float times tau_k where the orbit of x0 passes closest to each target
    (target point, rough time).  Used only to place sample points; the
    enclosures are computed rigorously at the returned times.
    """
    from scipy.integrate import solve_ivp
    from scipy.optimize import minimize_scalar
    sgn = -1.0 if reverse else 1.0
    T = max(t for _, t in targets) + 1.0
    sol = solve_ivp(lambda t, x: sgn * field.eval_float(x), (0.0, T), np.asarray(x0, float),
                    method="DOP853", rtol=rtol, atol=1e-16, dense_output=True)
    out = []
    for pt, guess in targets:
        pt = np.asarray(pt, float)
        r = minimize_scalar(lambda s: float(np.sum((sol.sol(s) - pt) ** 2)),
                            bracket=(guess - 0.01, guess + 0.01), tol=1e-14)
        out.append(float(r.x))
    return out


@dataclass
class TableRow:
    label: str
    tau: float
    point: list
    local: Interval
    passing: Interval

    @property
    def total(self):
        return self.local + self.passing


def example1_table(chart, theta=1.0, samples=None, tseries=None):
    """Blow-up times at the chart point P(theta) and at sample points backward along W^s."""
    from .integrate import extend_manifold
    samples = EX1_SAMPLE_POINTS if samples is None else samples
    ts = tmax_rational_example1(chart) if tseries is None else tseries
    local = ts(theta)
    x0 = chart.eval_float(theta)
    labels = list(samples)
    taus = locate_on_orbit(chart.field, x0, [samples[k] for k in labels])
    traj = extend_manifold(chart, theta, max(taus), stops=taus[:-1])
    snaps = dict(traj.snapshots)
    snaps.setdefault(max(taus), (traj.tau, traj.final_box))
    p1 = chart.eval(theta)
    rows = [TableRow("P1", 0.0, p1, local, Interval(0.0))]
    for lab, tau in zip(labels, taus):
        _, box = snaps[tau]
        rows.append(TableRow(lab, tau, list(box.intervals()[:chart.n]), local, box.interval(-1)))
    return rows, traj


# --------------------------------------------------------------------------
# separatrix scan


@dataclass
class ScanPoint:
    distance: float
    side: str
    outcome: str  # blowup | global | inconclusive
    tmax: Interval = None
    steps: int = 0
    seconds: float = 0.0
    message: str = ""

    @property
    def error(self):
        return None if self.tmax is None else self.tmax.width


def separatrix_segment(chart, theta=-1.0):
    """Boundary point p = P(theta) of a 1-d chart and the unit normal to W^s there."""
    p = chart.eval_float(theta)
    tan = chart.derivative_float(theta)
    tan = tan / np.linalg.norm(tan)
    return p, np.array([-tan[1], tan[0]])


def classify_point(x, field, sink_chart, sink_tseries, global_nbhds=(), T=300.0, integ=None):
    """
    Forward rigorous integration of the point x: 'blowup' with a t_max
    enclosure once the box maps into the sink chart, 'global' once it enters
    a certified attracting neighborhood of a bounded equilibrium.
    """
    import time
    from .integrate import TaylorIntegrator, augment_passing_time, invert_chart, _float_inverse
    if integ is None:
        aug, init = augment_passing_time(field, reverse=False)
        integ = TaylorIntegrator(aug, domain=field.spec)
    else:
        init = integ.init
    center = sink_chart.equilibrium.box.mid
    found = {}

    def until(box):
        for nb in global_nbhds:
            if nb.contains(box):
                found["outcome"] = "global"
                return True
        x = box.mid[:field.n]
        if np.linalg.norm(x - center) > 0.25:
            return False
        th = _float_inverse(sink_chart, x)
        if th is None or np.max(np.abs(th)) > 0.9:
            return False
        try:
            found["theta"] = invert_chart(sink_chart, box)
        except (DomainError, ArithmeticError):
            return False
        found["outcome"] = "blowup"
        return True

    t0 = time.time()
    X = init(Ball(np.asarray(x, dtype=float)))
    try:
        traj = integ.integrate(X, T, until=until)
    except (DomainError, ArithmeticError) as exc:
        return ScanPoint(0.0, "", "inconclusive", None, 0, time.time() - t0, f"{type(exc).__name__}: {exc}")
    res = ScanPoint(0.0, "", found.get("outcome", "inconclusive"), None, len(traj.records), 0.0)
    if res.outcome == "blowup":
        th = found["theta"]
        theta = tuple(Interval(float(a), float(b)) for a, b in zip(th.lo, th.hi))
        try:
            res.tmax = sink_tseries(theta) + traj.passing_time
        except DomainError as exc:
            res.outcome, res.message = "inconclusive", str(exc)
    elif res.outcome == "inconclusive":
        res.message = f"no classification by tau = {T}"
    res.seconds = time.time() - t0
    return res


def orient_segment(field, p, normal, sink, probe=0.025, T=200.0):
    """Sign s such that p + s*probe*normal flows to `sink` (float check, orientation only)."""
    from .integrate import float_flow
    for s in (1.0, -1.0):
        end = float_flow(field, p + s * probe * normal, T).y[:, -1]
        if np.linalg.norm(end - sink.box.mid) < 1e-3:
            return s
    raise DomainError("neither side of the segment flows to the sink")


def scan_workers():
    import os
    try:
        cap = int(os.environ.get("BLOWUP_THREADS", "0"))
    except ValueError:
        cap = 0
    n = os.cpu_count() or 1
    return max(1, min(n, cap) if cap > 0 else n)


def separatrix_scan(field, sep_chart, sink_chart, global_sink, theta=-1.0, n_points=200,
                    dmin=1e-10, dmax=5e-2, T=300.0, workers=None, sink_tseries=None):
    """
    Blow-up times on a segment through p = P(theta) orthogonal to the chart's
    stable manifold.  Half the points lie on each side, log-spaced in
    distance; the side flowing to the sink chart's equilibrium is 'r'.
    """
    from concurrent.futures import ThreadPoolExecutor
    from .integrate import TaylorIntegrator, augment_passing_time, lyapunov_neighborhood
    ts = tmax_chart(sink_chart) if sink_tseries is None else sink_tseries
    p, nrm = separatrix_segment(sep_chart, theta)
    sgn = orient_segment(field, p, nrm, sink_chart.equilibrium)
    nb = lyapunov_neighborhood(field, global_sink)
    k_r = (n_points + 1) // 2
    dists = {"r": np.geomspace(dmin, dmax, k_r), "l": np.geomspace(dmin, dmax, n_points - k_r)}
    jobs = [(side, float(d)) for side in ("r", "l") for d in dists[side]]

    def one(job):
        side, d = job
        aug, init = augment_passing_time(field, reverse=False)
        integ = TaylorIntegrator(aug, domain=field.spec)
        integ.init = init
        s = sgn if side == "r" else -sgn
        res = classify_point(p + s * d * nrm, field, sink_chart, ts, (nb,), T=T, integ=integ)
        res.distance, res.side = d, side
        return res

    nw = scan_workers() if workers is None else workers
    if nw == 1:
        results = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(nw) as ex:
            results = list(ex.map(one, jobs))
    return results, p, sgn * nrm


def scan_summary(results, max_error=1.9e-2):
    """Criteria on a scan: finite enclosures on the r side, global on the l side, monotone t_max."""
    r = sorted((x for x in results if x.side == "r"), key=lambda x: -x.distance)
    l = [x for x in results if x.side == "l"]
    r_ok = all(x.outcome == "blowup" and x.tmax.width <= max_error for x in r)
    l_ok = all(x.outcome == "global" for x in l)
    mids = [x.tmax.mid for x in r if x.tmax is not None]
    mono = len(mids) == len(r) and all(b > a for a, b in zip(mids, mids[1:]))
    worst = max((x.tmax.width for x in r if x.tmax is not None), default=float("nan"))
    return dict(r_ok=r_ok, l_ok=l_ok, monotone=mono, worst_error=worst,
                n_r=len(r), n_l=len(l))
