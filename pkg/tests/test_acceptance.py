"""
Acceptance criteria 1-7.  Each check is recorded through _support.record and
summarized as one PASS/FAIL line per criterion at the end of the run.
"""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from blowup.blowtime import (EX1_PRINTED_TMAX, example1_table, scan_summary, separatrix_scan,
                             tmax_chart)
from blowup.field import horizon_gradient
from blowup.integrate import connect_to_source
from blowup.interval import Interval, int_pow
from blowup.manifold import build_chart
from blowup.series import Series, cauchy_product

from _support import (chart, decay_exponent, equilibrium, field, five_point, quadrature_tmax,
                      record)


def _timed_chart(name, eq, N, sigma=None):
    t0 = time.perf_counter()
    ch = build_chart(field(name), equilibrium(name, eq), sigma=sigma, N=N, inward=sigma is None)
    return ch, time.perf_counter() - t0


def _agrees(enc, printed):
    """Printed decimals agree with the enclosure to one unit of the last digit."""
    unit = 10.0 ** -len(printed.split(".")[1])
    x = float(printed)
    return enc.inflate(unit).contains(x)


# ---------------------------------------------------------------- criterion 1

def test_criterion1_example1_charts():
    ok = True
    for N, bound in ((300, 1e-10), (100, 1e-6)):
        ch, secs = _timed_chart("example1", "p2", N)
        good = ch.r0.hi <= bound and secs < 60
        record(1, f"Example 1 chart N={N}", good, f"r0 = {ch.r0.hi:.3e} (<= {bound:g}), {secs:.2f} s")
        ok &= good
    assert ok


# ---------------------------------------------------------------- criterion 2

def test_criterion2_table():
    t0 = time.perf_counter()
    ch = build_chart(field("example1"), equilibrium("example1", "p2"), sigma=(0.09999,), N=300)
    rows, _ = example1_table(ch, 1.0)
    secs = time.perf_counter() - t0
    ok = secs < 300
    for r in rows:
        tot = r.total
        good = tot.intersects(EX1_PRINTED_TMAX[r.label]) and tot.width <= 1e-6
        record(2, f"Table row {r.label}", good, f"{tot} width {tot.width:.2e}")
        ok &= good
    record(2, "runtime", secs < 300, f"{secs:.1f} s (< 300 s)")
    assert ok


# ---------------------------------------------------------------- criterion 3

EX2_PRINTED = {
    "p0": (("0.9333789", "0.3588924", "0"), ["-1.74239248"], [("0.033880", "0.1430256")]),
    "p1": (("0.7180928", "0.6959473", "0"), ["-0.11437086", "0.1544775", "-1.0313145"], []),
    "p2": (("0.9985628", "-0.0535924", "0"), ["-1.994255", "-0.1870901", "0.26464449"], []),
    "pb": (("0.7071051816183367", "0.001504037399468", "-0.001504037399468"), [], []),
}


def test_criterion3_equilibria():
    ok = True
    for name, (coords, lams, pairs) in EX2_PRINTED.items():
        e = equilibrium("example2", name)
        good = all(_agrees(x, p) if "." in p else x.contains(0.0) for x, p in zip(e.location, coords))
        for p in lams:
            good &= any(_agrees(l, p) for l in e.eigenvalues)
        for re, im in pairs:
            good &= any(_agrees(a, re) and _agrees(b, im) for a, b in e.complex_pairs)
        record(3, f"Example 2 {name} location and eigenvalues", good,
               " ".join(f"{x.mid:.10f}" for x in e.location))
        ok &= good
    assert ok


def test_criterion3_charts():
    ok = True
    for eq, N, bound in (("p1", 50, 1e-7), ("p2", 60, 1e-8), ("p0", 160, 1e-11)):
        ch, secs = _timed_chart("example2", eq, N)
        good = ch.r0.hi <= bound
        record(3, f"Example 2 chart {eq} N={N}", good, f"r0 = {ch.r0.hi:.3e} (<= {bound:g}), {secs:.1f} s")
        ok &= good
    assert ok


# ---------------------------------------------------------------- criterion 4

EX3_PRINTED_TMAX = Interval(3.109637008391221, 3.109637008441572)


def test_criterion4_tmax_at_crossing_point():
    ts = tmax_chart(chart("example3", "pinf_s+", 100))
    v = ts(1.0)
    good = v.intersects(EX3_PRINTED_TMAX) and v.width <= 1e-9
    record(4, "t_max(p_0s) against the printed enclosure", good,
           f"{v} width {v.width:.2e}; printed {EX3_PRINTED_TMAX}")
    assert good


def test_criterion4_charts():
    ok = True
    for eq, bound in (("p0", 1e-12), ("pinf_s+", 1e-8)):
        ch, secs = _timed_chart("example3", eq, 100)
        good = ch.r0.hi <= bound
        record(4, f"Example 3 chart {eq} N=100", good, f"r0 = {ch.r0.hi:.3e} (<= {bound:g})")
        ok &= good
    assert ok


def test_criterion4_heteroclinics():
    src = equilibrium("example3", "pb+")
    ok = True
    for eq, label in (("pinf_s+", "pinf_s+ -> pb+"), ("p0", "pb+ -> p0")):
        traj = connect_to_source(chart("example3", eq, 100), 1.0, src)
        good = traj.status == "event"
        record(4, f"heteroclinic {label}", good, f"{traj.status} after {len(traj.records)} steps")
        ok &= good
    assert ok


# ---------------------------------------------------------------- criterion 5

@pytest.mark.slow
def test_criterion5_separatrix_scan():
    t0 = time.perf_counter()
    g = field("example3")
    sep = chart("example3", "pinf_s+", 100)
    sink = chart("example3", "pinf+", 30)
    res, _, _ = separatrix_scan(g, sep, sink, equilibrium("example3", "pb-"), theta=1.0,
                                n_points=200, dmin=1e-10, dmax=5e-2, T=300.0)
    secs = time.perf_counter() - t0
    s = scan_summary(res, max_error=1.9e-2)
    record(5, "l_r finite enclosures", s["r_ok"], f"{s['n_r']} points, worst error {s['worst_error']:.2e}")
    record(5, "l_l points global", s["l_ok"], f"{s['n_l']} points")
    record(5, "t_max increasing toward p_0s", s["monotone"], "")
    record(5, "runtime", secs < 600, f"{secs:.0f} s (< 600 s)")
    assert s["r_ok"] and s["l_ok"] and s["monotone"] and secs < 600


# ---------------------------------------------------------------- criterion 6

def _random_interval(rng):
    scale = 10.0 ** rng.integers(-8, 9)
    a, b = sorted(rng.normal(size=2) * scale)
    return Interval(float(a), float(b))


def _inner(rng, x):
    s, t = sorted(rng.uniform(size=2))
    lo = x.lo + s * (x.hi - x.lo)
    hi = x.lo + t * (x.hi - x.lo)
    return Interval(min(max(lo, x.lo), x.hi), min(max(hi, x.lo), x.hi))


def test_criterion6_interval_fuzz():
    rng = np.random.default_rng(2024)
    ops = [lambda a, b: a + b, lambda a, b: a - b, lambda a, b: a * b,
           lambda a, b: a / b, lambda a, b: int_pow(a, 3)]
    exact = [lambda p, q: p + q, lambda p, q: p - q, lambda p, q: p * q,
             lambda p, q: p / q, lambda p, q: p ** 3]
    bad = 0
    cases = 10_000
    for k in range(cases):
        i = k % len(ops)
        x, y = _random_interval(rng), _random_interval(rng)
        if i == 3 and y.contains(0.0):
            y = Interval(abs(y.hi) + 1.0, abs(y.hi) + 2.0)
        xs, ys = _inner(rng, x), _inner(rng, y)
        big, small = ops[i](x, y), ops[i](xs, ys)
        p = Fraction(xs.lo) + (Fraction(xs.hi) - Fraction(xs.lo)) * Fraction(int(rng.integers(0, 1000)), 1000)
        q = Fraction(ys.lo) + (Fraction(ys.hi) - Fraction(ys.lo)) * Fraction(int(rng.integers(0, 1000)), 1000)
        v = exact[i](p, q)
        if not (big.lo <= small.lo and small.hi <= big.hi):
            bad += 1
        elif not (Fraction(small.lo) <= v <= Fraction(small.hi)):
            bad += 1
    record(6, "interval inclusion fuzz", bad == 0, f"{cases} cases, {bad} violations")
    assert bad == 0


def test_criterion6_cauchy_oracle():
    rng = np.random.default_rng(5)
    bad = 0
    for m in (1, 2):
        for N in range(7):
            a = rng.integers(-9, 10, size=(N + 1,) * m).astype(float)
            b = rng.integers(-9, 10, size=(N + 1,) * m).astype(float)
            if m == 2:
                far = sum(np.indices(a.shape)) > N
                a[far] = b[far] = 0.0
            c = cauchy_product(Series(a, N), Series(b, N))
            for k in itertools.product(range(2 * N + 1), repeat=m):
                if sum(k) > 2 * N:
                    continue
                want = Fraction(0)
                for i in itertools.product(range(N + 1), repeat=m):
                    j = tuple(kk - ii for kk, ii in zip(k, i))
                    if min(j) >= 0 and max(j) <= N:
                        want += Fraction(a[i]) * Fraction(b[j])
                bad += Fraction(c.coef.mid[k]) != want
    record(6, "Cauchy product brute force (m <= 2, N <= 6)", bad == 0, f"{bad} mismatches")
    assert bad == 0


def test_criterion6_horizon_invariance():
    rng = np.random.default_rng(8)
    ok = True
    for name in ("example2", "example3"):
        g = field(name)
        h, _ = horizon_gradient(g.spec, g.n)
        dh = [h.diff(i).to_poly() for i in range(g.n)]
        worst = 0.0
        for _ in range(200):
            if name == "example2":
                x = rng.normal(size=3)
                x /= np.linalg.norm(x)
            else:
                phi = rng.uniform(0, 2 * np.pi)
                x = np.array([np.sign(np.cos(phi)) * np.sqrt(abs(np.cos(phi))), np.sin(phi)])
            worst = max(worst, abs(float(np.array([d.eval_float(x) for d in dh]) @ g.eval_float(x))))
        record(6, f"horizon invariance {name}", worst <= 1e-10, f"max |grad h . g| = {worst:.2e}")
        ok &= worst <= 1e-10
    assert ok


CERTIFIED = [("example1", "p2", 300), ("example1", "p2", 100), ("example2", "p0", 160),
             ("example2", "p1", 50), ("example2", "p2", 60), ("example3", "p0", 100),
             ("example3", "pinf_s+", 100), ("example3", "pinf+", 30)]


def test_criterion6_conjugacy():
    ok = True
    for key in CERTIFIED:
        ch = chart(*key)
        if ch.m == 1:
            grid = [np.array([t]) for t in np.linspace(-0.5, 0.5, 101)]
        else:
            ts = np.linspace(-0.5, 0.5, 10)
            grid = [np.array([a, b]) for a in ts for b in ts] + [np.zeros(2)]
        res = ch.conjugacy_residual(grid)
        record(6, f"conjugacy residual {key[0]} {key[1]} N={key[2]}", res <= 1e-8, f"{res:.2e}")
        ok &= res <= 1e-8
    assert ok


def test_criterion6_series_vs_quadrature():
    ok = True
    for key, th in ((("example1", "p2", 300), 0.9), (("example2", "p1", 50), (0.9, 0.0)),
                    (("example2", "p0", 160), 0.9), (("example3", "pinf_s+", 100), 0.9)):
        ch = chart(*key)
        q, _ = quadrature_tmax(ch, th)
        d = abs(tmax_chart(ch)(th).mid - q)
        record(6, f"series vs quadrature {key[0]} {key[1]} at {th}", d <= 1e-6, f"|diff| = {d:.2e}")
        ok &= d <= 1e-6
    assert ok


def test_criterion6_decay():
    ok = True
    for key in (("example1", "p2", 300), ("example2", "p1", 50), ("example3", "pinf_s+", 100)):
        ch = chart(*key)
        q = decay_exponent(tmax_chart(ch), ch.m)
        # the exponent is exactly 1 in the limit; 1e-6 absorbs the O(theta) approach from below
        record(6, f"decay exponent {key[0]} {key[1]}", q >= 1 - 1e-6, f"q = {q:.9f}")
        ok &= q >= 1 - 1e-6
    assert ok


# ---------------------------------------------------------------- criterion 7

def test_criterion7_derivatives():
    ok = True
    for key in (("example1", "p2", 300), ("example3", "pinf_s+", 100)):
        ts = tmax_chart(chart(*key))
        fd = five_point(ts.eval_float, 0.3, 1e-3)
        d = abs(fd - ts.derivative_float(0.3))
        record(7, f"derivative at 0.3 {key[0]}", d <= 1e-8, f"|FD - series| = {d:.2e}")
        ok &= d <= 1e-8
    assert ok
