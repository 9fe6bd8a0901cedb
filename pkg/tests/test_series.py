import itertools
from fractions import Fraction

import numpy as np
import pytest

from blowup.ball import Ball
from blowup.interval import DomainError, Interval
from blowup.series import (Series, ShapeError, TaylorCoeffs, cauchy_product, count, differentiate,
                           ell1_norm, eval_enclosure, multi_indices, series_pow)

rng = np.random.default_rng(7)


def _rand_series(m, N, lo=-9, hi=10):
    c = rng.integers(lo, hi, size=(N + 1,) * m).astype(float)
    if m > 1:
        d = sum(np.indices(c.shape))
        c[d > N] = 0.0
    return Series(c, N)


def _brute_product(a, b, N=None):
    """Exact product over all index pairs with Fractions."""
    out = {}
    for ia in itertools.product(range(a.N + 1), repeat=a.m):
        if sum(ia) > a.N:
            continue
        for ib in itertools.product(range(b.N + 1), repeat=b.m):
            if sum(ib) > b.N:
                continue
            k = tuple(x + y for x, y in zip(ia, ib))
            out[k] = out.get(k, 0) + Fraction(a.coef.mid[ia]) * Fraction(b.coef.mid[ib])
    return {k: v for k, v in out.items() if N is None or sum(k) <= N}


def test_count():
    assert count(1, 5) == 6
    assert count(2, 3) == 10
    assert len(multi_indices(2, 3)) == 10


def test_zero_annihilates():
    a = Series.zeros(2, 4)
    b = _rand_series(2, 4)
    assert np.all(cauchy_product(a, b).coef.mid == 0)


def test_theta_squared():
    a = Series(np.array([0.0, 1.0, 0.0]), 2)
    c = cauchy_product(a, a)
    assert c.coef.mid[2] == 1.0 and np.sum(np.abs(c.coef.mid)) == 1.0


@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("Na,Nb", [(0, 0), (1, 3), (3, 3), (6, 6), (6, 2), (4, 5)])
def test_cauchy_brute_force(m, Na, Nb):
    for _ in range(5):
        a, b = _rand_series(m, Na), _rand_series(m, Nb)
        c = cauchy_product(a, b)
        want = _brute_product(a, b)
        for k in itertools.product(range(c.N + 1), repeat=m):
            if sum(k) > c.N:
                continue
            exact = want.get(k, Fraction(0))
            assert Fraction(c.coef.mid[k]) == exact
            assert c.coef.interval(k).contains(exact)


@pytest.mark.parametrize("m", [1, 2])
def test_truncated_product_tail(m):
    a, b = _rand_series(m, 6), _rand_series(m, 6)
    c = cauchy_product(a, b, N=4)
    want = _brute_product(a, b)
    dropped = sum(abs(v) for k, v in want.items() if sum(k) > 4)
    assert c.N == 4
    assert c.tail >= float(dropped)


def test_series_pow_matches_brute_force():
    a = _rand_series(2, 2, -3, 4)
    c = series_pow(a, 3)
    want = _brute_product(_brute_series(_brute_product(a, a), 2, 4), a)
    for k, v in want.items():
        assert Fraction(c.coef.mid[k]) == v


def _brute_series(d, m, N):
    c = np.zeros((N + 1,) * m)
    for k, v in d.items():
        c[k] = float(v)
    return Series(c, N)


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        cauchy_product(_rand_series(1, 3), _rand_series(2, 3))


def test_ell1():
    assert ell1_norm(Series.zeros(1, 3)).hi == 0.0
    r = ell1_norm(Series(np.array([1.0, -2.0, 3.0]), 2))
    assert r.contains(6.0) and r.width <= 16 * np.spacing(6.0)
    s = Series(np.array([1.0, -2.0, 3.0]), 2, tail=1e-3)
    assert s.norm1() >= 6.001


def test_banach_algebra():
    for m in (1, 2):
        for _ in range(20):
            a, b = _rand_series(m, 5), _rand_series(m, 4)
            assert cauchy_product(a, b).norm1() <= a.norm1() * b.norm1() * (1 + 1e-15)


def test_eval_constant_and_linear():
    P = TaylorCoeffs([Series(np.array([2.0, 3.0]), 1, tail=1e-12)])
    assert eval_enclosure(P, 0.0)[0].contains(2.0)
    assert eval_enclosure(P, 0.0)[0].width >= 2e-12
    assert eval_enclosure(P, 1.0)[0].contains(5.0)
    with pytest.raises(DomainError):
        eval_enclosure(P, 1.5)


def test_eval_bivariate_float_oracle():
    a = Series(rng.normal(size=(6, 6)) * (sum(np.indices((6, 6))) <= 5), 5)
    th = (0.3, -0.7)
    want = sum(a.coef.mid[i, j] * th[0] ** i * th[1] ** j for i in range(6) for j in range(6))
    assert abs(eval_enclosure(a, th).mid - want) < 1e-14


def test_differentiate():
    a = Series(np.array([1.0, 2.0, 3.0, 4.0]), 3)
    d = differentiate(a)
    assert list(d.coef.mid) == [2.0, 6.0, 12.0, 0.0]


def test_json_round_trip():
    P = TaylorCoeffs([_rand_series(2, 3), _rand_series(2, 3)])
    Q = TaylorCoeffs.from_json(P.to_json())
    for p, q in zip(P, Q):
        assert np.all(p.coef.lo >= q.coef.lo) and np.all(p.coef.hi <= q.coef.hi)
