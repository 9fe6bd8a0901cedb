"""
Directional, quasi-Poincare and quasi-parabolic compactifications.

Everything is written in terms of p(y)^{2c} = sum y_i^{2 beta_i}; the 2c-th
root is never taken.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

from .interval import Interval, DomainError, as_interval, int_pow, interval_newton_scalar


class HorizonError(DomainError):
    """Point lies on or beyond the horizon p(x) = 1."""


KINDS = ("directional", "poincare", "parabolic")


@dataclass(frozen=True)
class CompactificationSpec:
    alpha: Tuple[int, ...]
    beta: Tuple[int, ...] = ()
    c: int = 1
    k: int = 1
    kind: str = "parabolic"
    index: Optional[int] = None  # directional: inverted coordinate
    sign: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown compactification kind {self.kind!r}")
        if self.kind != "directional":
            if len(self.alpha) != len(self.beta):
                raise ValueError("alpha and beta lengths differ")
            for a, b in zip(self.alpha, self.beta):
                if a * b != self.c:
                    raise ValueError("alpha_i * beta_i must equal c for every i")
            if self.kind == "poincare" and not all(a == 1 for a in self.alpha):
                raise ValueError("only the homogeneous Poincare compactification is supported")
        else:
            if self.index is None or self.alpha[self.index] != 1:
                raise ValueError("directional chart needs alpha_i = 1 on the inverted coordinate")
            if self.sign not in (1, -1):
                raise ValueError("sign must be +1 or -1")
        if self.k <= 0 or self.c <= 0:
            raise ValueError("c and k must be positive")

    @property
    def n(self):
        return len(self.alpha)


def _iv(v):
    return [as_interval(x) for x in v]


def horizon_p(y, spec):
    """Enclosure of p(y)^{2c}."""
    total = Interval(0.0)
    for yi, b in zip(_iv(y), spec.beta):
        total = total + int_pow(yi, 2 * b)
    return total


def directional_forward(y, spec):
    """(s, x_hat) with s at position `index`: s = 1/y_i, x_j = y_j s^alpha_j."""
    y = _iv(y)
    i = spec.index
    yi = y[i] * spec.sign
    if yi.lo <= 0:
        raise DomainError("directional chart needs sign*y_i > 0")
    s = 1 / yi
    out = []
    for j, yj in enumerate(y):
        out.append(s if j == i else yj * int_pow(s, spec.alpha[j]))
    return out


def directional_inverse(x, spec):
    x = _iv(x)
    i = spec.index
    s = x[i]
    if s.lo <= 0:
        raise HorizonError("s must be positive (s = 0 is the horizon)")
    out = []
    for j, xj in enumerate(x):
        out.append(spec.sign / s if j == i else xj / int_pow(s, spec.alpha[j]))
    return out


def parabolic_kappa(R, c):
    """Unique kappa >= 1 with kappa^{2c} - kappa^{2c-1} = R (R = p(y)^{2c})."""
    R = as_interval(R)
    q = 2 * c
    f = lambda K: int_pow(K, q) - int_pow(K, q - 1) - R
    df = lambda K: int_pow(K, q - 2) * (q * K - (q - 1))  # factored: >= 1 on K >= 1
    bracket = Interval(1.0, (1 + R).hi)
    return interval_newton_scalar(f, df, bracket, tol=0.0)


def parabolic_forward(y, spec):
    y = _iv(y)
    K = parabolic_kappa(horizon_p(y, spec), spec.c)
    return [yi / int_pow(K, a) for yi, a in zip(y, spec.alpha)]


def parabolic_inverse(x, spec):
    x = _iv(x)
    P = horizon_p(x, spec)
    if P.hi >= 1.0:
        raise HorizonError(f"p(x)^2c = {P} is not < 1")
    d = 1 - P
    return [xi / int_pow(d, a) for xi, a in zip(x, spec.alpha)]


def poincare_forward(y, spec):
    y = _iv(y)
    den = (1 + horizon_p(y, spec)).sqrt()
    return [yi / den for yi in y]


def poincare_inverse(x, spec):
    x = _iv(x)
    P = horizon_p(x, spec)
    if P.hi >= 1.0:
        raise HorizonError(f"|x|^2 = {P} is not < 1")
    den = (1 - P).sqrt()
    return [xi / den for xi in x]


def to_compact(y, spec):
    if spec.kind == "parabolic":
        return parabolic_forward(y, spec)
    if spec.kind == "poincare":
        return poincare_forward(y, spec)
    return directional_forward(y, spec)


def to_original(x, spec):
    if spec.kind == "parabolic":
        return parabolic_inverse(x, spec)
    if spec.kind == "poincare":
        return poincare_inverse(x, spec)
    return directional_inverse(x, spec)


def horizon_value(x, spec):
    """p(x)^{2c} for global charts, s for directional ones."""
    if spec.kind == "directional":
        return as_interval(x[spec.index])
    return horizon_p(x, spec)
