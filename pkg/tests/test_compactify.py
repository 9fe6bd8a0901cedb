import numpy as np
import pytest

from blowup.compactify import (CompactificationSpec, HorizonError, directional_forward,
                               directional_inverse, horizon_p, parabolic_forward, parabolic_inverse,
                               poincare_forward, poincare_inverse, to_compact, to_original)
from blowup.interval import DomainError

EX3 = CompactificationSpec(alpha=(1, 2), beta=(2, 1), c=2, k=1, kind="parabolic")
EX1 = CompactificationSpec(alpha=(0, 1), kind="directional", index=1, sign=1)
PC = CompactificationSpec(alpha=(1, 1, 1), beta=(1, 1, 1), c=1, k=2, kind="poincare")
rng = np.random.default_rng(3)


def _mid(v):
    return np.array([x.mid for x in v])


def test_horizon_p():
    assert horizon_p([0, 0], EX3).hi == 0.0
    assert horizon_p([1, 0], EX3).contains(1.0)
    y = rng.normal(size=2)
    assert horizon_p(list(y), EX3).contains(y[0] ** 4 + y[1] ** 2) or \
        abs(horizon_p(list(y), EX3).mid - (y[0] ** 4 + y[1] ** 2)) < 1e-15


def test_directional_two_phase_point():
    x = directional_forward([1.9, 4.0], EX1)
    assert x[0].contains(1.9) and x[1].contains(0.25)


def test_directional_unit():
    spec = CompactificationSpec(alpha=(1, 1), kind="directional", index=0, sign=1)
    x = directional_forward([1.0, 0.0], spec)
    assert x[0].contains(1.0) and x[1].contains(0.0)


def test_directional_round_trip_and_errors():
    for _ in range(50):
        y = [rng.uniform(-5, 5), rng.uniform(0.1, 10)]
        back = _mid(directional_inverse(directional_forward(y, EX1), EX1))
        assert np.max(np.abs(back - y)) < 1e-12
    with pytest.raises(DomainError):
        directional_forward([1.0, -2.0], EX1)
    with pytest.raises(HorizonError):
        directional_inverse([1.0, 0.0], EX1)


def test_parabolic_origin_and_printed_point():
    x = parabolic_forward([0.0, 0.0], EX3)
    assert x[0].contains(0.0) and x[1].contains(0.0)
    x = _mid(parabolic_forward([0.36072017, 0.40662201], EX3))
    assert np.max(np.abs(x - 0.32)) < 1e-6


def test_parabolic_inverse_printed_point():
    y = _mid(parabolic_inverse([0.83, 0.53], EX3))
    # u agrees with the printed 3.39444993; the printed v = 4.69501202 is
    # (x2 / (1 - p^4))^2 rather than x2 / (1 - p^4)^2 (see the decisions log)
    assert abs(y[0] - 3.39444993) < 1e-8
    p4 = 0.83 ** 4 + 0.53 ** 2
    assert abs(y[1] - 0.53 / (1 - p4) ** 2) < 1e-12
    assert abs((0.53 / (1 - p4)) ** 2 - 4.69501202) < 5e-3
    back = _mid(parabolic_forward(list(y), EX3))
    assert np.max(np.abs(back - [0.83, 0.53])) < 1e-12


def test_parabolic_round_trip_and_image():
    for _ in range(50):
        y = rng.normal(size=2) * 10 ** rng.uniform(-2, 3)
        x = parabolic_forward(list(y), EX3)
        assert horizon_p(x, EX3).hi < 1
        back = _mid(parabolic_inverse(_mid(x), EX3))
        assert np.max(np.abs(back - y) / (1 + np.abs(y))) < 1e-10
    with pytest.raises(HorizonError):
        parabolic_inverse([1.0, 0.0], EX3)


def test_poincare():
    x = poincare_forward([0, 0, 0], PC)
    assert all(v.contains(0.0) for v in x)
    y = _mid(poincare_inverse([1 - 1e-8, 0, 0], PC))
    assert np.linalg.norm(y) > 1e3
    for _ in range(50):
        y = rng.normal(size=3) * 10 ** rng.uniform(-2, 2)
        back = _mid(to_original(_mid(to_compact(list(y), PC)), PC))
        assert np.max(np.abs(back - y) / (1 + np.abs(y))) < 1e-12
    with pytest.raises(HorizonError):
        poincare_inverse([1.0, 0.0, 0.0], PC)


def test_spec_validation():
    with pytest.raises(ValueError):
        CompactificationSpec(alpha=(1, 2), beta=(1, 1), c=2)
    with pytest.raises(ValueError):
        CompactificationSpec(alpha=(2, 1), kind="directional", index=0)
