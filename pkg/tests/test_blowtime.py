import numpy as np
import pytest

from blowup.blowtime import (EX1_PRINTED_TMAX, ValidityError, tmax_chart, tmax_directional_series,
                             tmax_parabolic_example3, tmax_poincare_homogeneous, tmax_rational_example1,
                             total_blowup_time)
from blowup.compactify import CompactificationSpec
from blowup.field import PolyField, verify_equilibrium
from blowup.interval import DomainError
from blowup.manifold import build_chart
from blowup.poly import QPoly

from _support import chart, decay_exponent, five_point, quadrature_tmax

HORIZON_CHARTS = [("example1", "p2", 300), ("example2", "p0", 160), ("example2", "p1", 50),
                  ("example3", "pinf_s+", 100)]


@pytest.mark.parametrize("key", HORIZON_CHARTS)
def test_zero_at_equilibrium(key):
    ch = chart(*key)
    v = tmax_chart(ch)((0.0,) * ch.m)
    assert v.lo == 0.0 and v.hi == 0.0


def test_linear_chart_closed_form():
    # x1' = x1, x2' = -x2 with the horizon {x2 = 0}; P(theta) = (0, sigma theta)
    x1, x2 = QPoly.var(2, 0), QPoly.var(2, 1)
    spec = CompactificationSpec(alpha=(0, 1), kind="directional", index=1, sign=1)
    g = PolyField([x1, -1 * x2], spec, x2, "linear", {"o": (0.0, 0.0)})
    eq = verify_equilibrium(g, (0.0, 0.0))
    ch = build_chart(g, eq, sigma=(0.5,), N=6)
    ts = tmax_directional_series(ch, k=1)
    for th in (0.1, 0.5, 1.0):
        assert ts(th).contains(0.5 * th)
        assert ts(th).width < 1e-14


def test_table_first_row():
    # P1 = P(1) at the eigenvector scale of the published table
    ch = chart("example1", "p2", 300, (0.09999,))
    ts = tmax_rational_example1(ch)
    v = ts(1.0)
    assert v.intersects(EX1_PRINTED_TMAX["P1"])
    assert v.width <= 1e-6
    assert total_blowup_time(ch, 1.0, tseries=ts).total.intersects(v)


def test_example1_monotone_grid():
    ts = tmax_rational_example1(chart("example1", "p2", 300))
    vals = [ts(t) for t in np.linspace(0.05, 1.0, 20)]
    assert all(b.lo > a.hi for a, b in zip(vals, vals[1:]))


def test_specialized_entry_points_agree():
    ch3 = chart("example3", "pinf_s+", 100)
    assert tmax_parabolic_example3(ch3, 0.5).intersects(tmax_chart(ch3)(0.5))
    ch2 = chart("example2", "p1", 50)
    assert tmax_poincare_homogeneous(ch2, (0.5, 0.2)).intersects(tmax_chart(ch2)((0.5, 0.2)))
    with pytest.raises(DomainError):
        tmax_poincare_homogeneous(ch3)


def test_outside_domain_rejected():
    ts = tmax_chart(chart("example3", "pinf_s+", 100))
    with pytest.raises(ValidityError):
        ts(-0.5)
    with pytest.raises(DomainError):
        ts(1.5)


def test_finite_equilibrium_rejected():
    with pytest.raises(DomainError):
        tmax_chart(chart("example3", "p0", 100))


@pytest.mark.parametrize("key,thetas", [
    (("example1", "p2", 300), [0.5, 0.9, -0.5]),
    (("example2", "p0", 160), [0.5, 0.9]),
    (("example2", "p1", 50), [(0.5, 0.0), (0.9, 0.0)]),
    (("example2", "p2", 60), [(0.5, 0.0), (0.9, 0.0)]),
    (("example3", "pinf_s+", 100), [0.5, 0.9]),
])
def test_series_vs_quadrature(key, thetas):
    ch = chart(*key)
    ts = tmax_chart(ch)
    for th in thetas:
        q, end = quadrature_tmax(ch, th)
        assert np.linalg.norm(end - ch.eval_float(th)) < 1e-7
        assert abs(ts(th).mid - q) <= 1e-6


@pytest.mark.parametrize("key", HORIZON_CHARTS)
def test_decay_to_zero(key):
    ch = chart(*key)
    ts = tmax_chart(ch)
    assert decay_exponent(ts, ch.m) >= 1 - 1e-6
    # rigorous linear bound: every term has |alpha| >= 1
    C = float(np.sum(np.abs(ts.coef.coef.mid)) + np.sum(ts.coef.coef.rad)) + ts.err
    for t in (1e-1, 1e-4, 1e-8):
        v = ts.unchecked((t,) * ch.m if ch.m > 1 else t)
        assert v.mag <= C * t * (1 + 1e-12)


@pytest.mark.parametrize("key", [("example1", "p2", 300), ("example3", "pinf_s+", 100)])
def test_finite_difference_derivatives(key):
    ts = tmax_chart(chart(*key))
    for order in (1, 2):
        if order == 1:
            fd = five_point(ts.eval_float, 0.3, 1e-3)
        else:
            fd = five_point(lambda t: ts.derivative_float(t), 0.3, 1e-3)
        assert abs(fd - ts.derivative_float(0.3, order)) <= 1e-8


@pytest.mark.parametrize("name,eq,N", [("example1", "p2", 100), ("example3", "pinf_s+", 80)])
def test_tail_bound_validity(name, eq, N):
    s = chart(name, eq, N + 20).sigma
    a = tmax_chart(chart(name, eq, N, s))(0.7)
    b = tmax_chart(chart(name, eq, N + 20, s))(0.7)
    assert a.intersects(b)
    assert b.width <= a.width * (1 + 1e-9)
