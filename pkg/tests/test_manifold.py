import numpy as np
import pytest

from blowup.field import PolyField, verify_equilibrium
from blowup.manifold import (build_chart, float_residual, newton_solve_projection, skeleton_from)
from blowup.poly import QPoly

from _support import chart, equilibrium, field


def _linear_field():
    x, y = QPoly.var(2, 0), QPoly.var(2, 1)
    return PolyField([-1 * x, 2 * y], None, None, "linear", {"o": (0.0, 0.0)})


def test_linear_field_exact():
    g = _linear_field()
    eq = verify_equilibrium(g, (0.0, 0.0))
    ch = build_chart(g, eq, sigma=(1.0,), N=8)
    # zero up to the underflow terms carried by the rigorous arithmetic
    assert ch.certificate.Y0.hi <= 1e-280
    assert ch.certificate.Z2.hi <= 1e-280
    assert ch.r0.hi < 1e-280
    a = ch.coeffs
    assert np.all(np.abs(a[0].coef.mid[2:]) < 1e-280) and np.all(np.abs(a[1].coef.mid) < 1e-280)


def test_example1_second_order_by_hand():
    g = field("example1")
    eq = equilibrium("example1", "p2")
    skel = skeleton_from(eq, 0.1)
    a = newton_solve_projection(g, skel, 5)
    lam = skel.lam[0].mid
    x0, v = skel.x0.mid, skel.vecs[0].mid
    # (2 lam I - Dg) a2 = second Taylor coefficient of g(x0 + v t) (a2 enters linearly)
    h = 1e-3
    g2 = (g.eval_float(x0 + v * h) - 2 * g.eval_float(x0) + g.eval_float(x0 - v * h)) / (2 * h * h)
    a2 = np.linalg.solve(2 * lam * np.eye(2) - g.jacobian_float(x0), g2)
    got = np.array([a[0][2], a[1][2]])
    assert np.max(np.abs(got - a2)) < 1e-7


def test_scaling_covariance():
    g = field("example1")
    eq = equilibrium("example1", "p2")
    a1 = newton_solve_projection(g, skeleton_from(eq, 0.1), 12)
    a2 = newton_solve_projection(g, skeleton_from(eq, 0.05), 12)
    for k in range(13):
        for i in range(2):
            assert abs(a2[i][k] - a1[i][k] * 0.5 ** k) <= 1e-13 * (abs(a1[i][k]) + 1e-300) + 1e-30


def test_float_residuals():
    g = field("example1")
    eq = equilibrium("example1", "p2")
    ch = chart("example1", "p2", 100)
    assert float_residual(g, skeleton_from(eq, ch.sigma), ch.abar_float, 100) < 1e-14
    ch3 = chart("example3", "pinf_s+", 100)
    g3 = field("example3")
    skel = skeleton_from(equilibrium("example3", "pinf_s+"), ch3.sigma)
    assert float_residual(g3, skel, ch3.abar_float, 100) < 1e-13


def test_example1_bounds_n100():
    ch = chart("example1", "p2", 100)
    assert ch.certificate.Z0.hi < 1e-10
    assert ch.certificate.Z1.hi + ch.certificate.Z0.hi < 1
    assert np.isfinite(ch.certificate.Z2.hi)


def test_example1_n300_radius():
    assert chart("example1", "p2", 300).r0.hi <= 4.2e-13
    assert chart("example1", "p2", 300, (0.09,)).r0.hi <= 4.2e-13


def test_example3_y0_and_z1_trends():
    s = chart("example3", "pinf_s+", 100).sigma
    certs = [chart("example3", "pinf_s+", N, s).certificate for N in (40, 60, 80, 100)]
    y0 = [c.Y0.hi for c in certs]
    z1 = [c.Z1.hi for c in certs]
    assert all(b < a for a, b in zip(y0, y0[1:]))
    assert all(b < a for a, b in zip(z1, z1[1:]))
    # Z1 ~ 1/N
    ratio = [z * N for z, N in zip(z1, (40, 60, 80, 100))]
    assert max(ratio) / min(ratio) < 2


def test_example3_printed_radii():
    assert chart("example3", "p0", 100).r0.hi <= 5.171e-14
    assert chart("example3", "pinf_s+", 100).r0.hi <= 1.381e-10


def test_example2_p1_printed_radius():
    assert chart("example2", "p1", 50).r0.hi <= 8.2e-9


@pytest.mark.parametrize("key", [("example1", "p2", 300), ("example2", "p0", 160), ("example2", "p1", 50),
                                 ("example3", "p0", 100), ("example3", "pinf_s+", 100),
                                 ("example3", "pinf+", 30)])
def test_conjugacy_residual(key):
    ch = chart(*key)
    if ch.m == 1:
        grid = [np.array([t]) for t in np.linspace(-0.5, 0.5, 101)]
    else:
        # 101 points: a 10 x 10 grid plus the origin
        ts = np.linspace(-0.5, 0.5, 10)
        grid = [np.array([a, b]) for a in ts for b in ts] + [np.zeros(2)]
    assert ch.conjugacy_residual(grid) <= 1e-8


def test_chart_point_matches_float():
    ch = chart("example1", "p2", 300)
    box = ch.eval(-1.0)
    fl = ch.eval_float(-1.0)
    assert all(b.lo - 1e-15 <= f <= b.hi + 1e-15 for b, f in zip(box, fl))
    # tail ball plus evaluation rounding of a degree-300 sum
    assert max(b.width for b in box) <= 2 * ch.r0.hi + 1e-12


def test_json_certificate():
    import json
    ch = chart("example3", "p0", 100)
    data = json.loads(ch.to_json())
    assert data["certificate"]["N"] == 100
    assert data["tail_radius"][1] == ch.r0.hi
