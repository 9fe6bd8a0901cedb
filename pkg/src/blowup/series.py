"""
Taylor series in m variables with rigorous (Ball) coefficients.

Internally a scalar series is a dense m-dimensional coefficient array
indexed by the multi-index itself (entries with |alpha| > N are zero); the
public flat layout and the JSON format use graded-lex order: by total
degree, then descending in the first variable.
"""

import json
from math import comb

import numpy as np

from .ball import Ball, as_ball, conv, _ub
from .interval import Interval, DomainError


class ShapeError(ValueError):
    pass


# --------------------------------------------------------------------------
# multi-indices


def count(m, N):
    """Number of multi-indices of m variables with |alpha| <= N."""
    return comb(N + m, m)


def kappa(m, N):
    """#{alpha : 2 <= |alpha| <= N}."""
    return count(m, N) - count(m, 1) if N >= 2 else 0


def _compositions(m, d):
    if m == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _compositions(m - 1, d - first):
            yield (first,) + rest


def multi_indices(m, N, lo=0):
    """Graded-lex list of multi-indices with lo <= |alpha| <= N."""
    out = []
    for d in range(lo, N + 1):
        out.extend(_compositions(m, d))
    return out


def degree_mask(m, N, D=None):
    """Boolean dense mask of |alpha| <= N inside a cube of side D+1."""
    D = N if D is None else D
    grids = np.indices((D + 1,) * m).sum(axis=0)
    return grids <= N


def total_degree(m, D):
    return np.indices((D + 1,) * m).sum(axis=0)


# --------------------------------------------------------------------------
# scalar series


class Series:
    """
    Scalar m-variate series: Ball coefficients on |alpha| <= N plus an l1
    tail bound `tail` covering everything not stored.
    """

    __slots__ = ("coef", "N", "m", "tail")

    def __init__(self, coef, N=None, tail=0.0):
        coef = as_ball(coef)
        self.m = coef.mid.ndim
        side = coef.shape[0]
        if any(s != side for s in coef.shape):
            raise ShapeError("dense coefficient array must be a cube")
        self.N = side - 1 if N is None else int(N)
        if side - 1 != self.N:
            raise ShapeError("cube side must be N+1")
        self.coef = coef
        self.tail = float(tail)

    @classmethod
    def zeros(cls, m, N):
        return cls(Ball.zeros((N + 1,) * m), N)

    @classmethod
    def constant(cls, m, N, value):
        s = cls.zeros(m, N)
        v = as_ball(value)
        s.coef.mid[(0,) * m] = v.mid
        s.coef.rad[(0,) * m] = v.rad
        return s

    @classmethod
    def from_flat(cls, m, N, flat, tail=0.0):
        flat = as_ball(flat)
        idx = multi_indices(m, N)
        if len(idx) != flat.shape[0]:
            raise ShapeError("flat length does not match count(m, N)")
        c = Ball.zeros((N + 1,) * m)
        for k, a in enumerate(idx):
            c.mid[a] = flat.mid[k]
            c.rad[a] = flat.rad[k]
        return cls(c, N, tail)

    def flat(self):
        idx = multi_indices(self.m, self.N)
        mid = np.array([self.coef.mid[a] for a in idx])
        rad = np.array([self.coef.rad[a] for a in idx])
        return Ball(mid, rad)

    def __getitem__(self, alpha):
        if isinstance(alpha, int):
            alpha = (alpha,)
        if sum(alpha) > self.N:
            return Interval(0.0)
        return self.coef.interval(tuple(alpha))

    @property
    def tail_radius(self):
        return Interval(0.0, self.tail)

    # --- structure ---
    def resize(self, N):
        """Exact re-embedding when growing; truncation folds mass into tail."""
        if N == self.N:
            return self
        side = N + 1
        c = Ball.zeros((side,) * self.m)
        k = min(N, self.N) + 1
        sl = (slice(0, k),) * self.m
        c.mid[sl] = self.coef.mid[sl]
        c.rad[sl] = self.coef.rad[sl]
        tail = self.tail
        if N < self.N:
            mask = total_degree(self.m, N) > N
            c.mid[mask] = 0.0
            c.rad[mask] = 0.0
            dropped = ~degree_mask(self.m, N, self.N)
            tail = _ub(tail + Ball(self.coef.mid[dropped], self.coef.rad[dropped]).norm1(), 2)
        return Series(c, N, tail)

    def truncate(self, N):
        return self.resize(N) if N < self.N else self

    def degree_part(self, lo, hi=None):
        """Coefficients with lo <= |alpha| <= hi (others zeroed, tail dropped)."""
        hi = self.N if hi is None else hi
        d = total_degree(self.m, self.N)
        keep = (d >= lo) & (d <= hi)
        return Series(Ball(np.where(keep, self.coef.mid, 0.0),
                           np.where(keep, self.coef.rad, 0.0)), self.N)

    def midpoint(self):
        return self.coef.mid

    # --- algebra ---
    def _aligned(self, other):
        other = other if isinstance(other, Series) else Series.constant(self.m, self.N, other)
        if other.m != self.m:
            raise ShapeError("variable count mismatch")
        N = max(self.N, other.N)
        return self.resize(N), other.resize(N)

    def __add__(self, other):
        a, b = self._aligned(other)
        return Series(a.coef + b.coef, a.N, _ub(a.tail + b.tail, 1))

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._aligned(other)
        return Series(a.coef - b.coef, a.N, _ub(a.tail + b.tail, 1))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Series(-self.coef, self.N, self.tail)

    def scale(self, c):
        c = as_ball(c)
        cmag = float(np.max(c.mag())) if c.mid.size else 0.0
        return Series(self.coef * c, self.N, _ub(self.tail * cmag, 1))

    def __mul__(self, other):
        if isinstance(other, Series):
            return cauchy_product(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def norm1(self):
        """Upper bound of the l1 norm including the tail."""
        n = self.coef.norm1()
        return n if self.tail == 0.0 else _ub(n + self.tail, 1)

    def __repr__(self):
        return f"Series(m={self.m}, N={self.N}, tail={self.tail:.3e})"


def cauchy_product(a, b, N=None):
    """
    Product over multi-indices.  Exact up to degree Na+Nb; if N is given the
    result is re-truncated to N and the dropped mass added to the tail.
    """
    if not (isinstance(a, Series) and isinstance(b, Series)):
        raise ShapeError("cauchy_product expects Series operands")
    if a.m != b.m:
        raise ShapeError("variable count mismatch")
    c = conv(a.coef, b.coef)
    Nc = a.N + b.N
    if a.m > 1:
        mask = total_degree(a.m, Nc) > Nc
        c.mid[mask] = 0.0
        c.rad[mask] = 0.0
    tail = 0.0
    if a.tail or b.tail:
        na, nb = a.coef.norm1(), b.coef.norm1()
        tail = _ub(na * b.tail + a.tail * nb + a.tail * b.tail, 5)
    s = Series(c, Nc, tail)
    if N is not None:
        s = s.resize(N)
    return s


def series_pow(a, k, N=None):
    """k-fold Cauchy product by repeated squaring."""
    k = int(k)
    if k < 0:
        raise ValueError("negative power")
    if k == 0:
        return Series.constant(a.m, 0 if N is None else N, 1.0)
    result = None
    base = a
    while True:
        if k & 1:
            result = base if result is None else cauchy_product(result, base, N)
        k >>= 1
        if not k:
            break
        base = cauchy_product(base, base, N)
    return result if N is None else result.resize(N) if result.N != N else result


def ell1_norm(a):
    lo = a.coef.norm1_lower()
    return Interval(max(lo, 0.0), a.norm1())


def _as_theta(theta):
    if isinstance(theta, (Interval, int, float, np.floating)):
        return (theta,)
    return tuple(theta)


def _check_polydisc(theta):
    for t in _as_theta(theta):
        t = t if isinstance(t, Interval) else Interval(t)
        if t.lo < -1.0 or t.hi > 1.0:
            raise DomainError(f"theta {t} outside the unit polydisc")


def _powers(t, N):
    """Ball vector (1, t, ..., t^N) for an Interval t."""
    out = [Interval(1.0)]
    for _ in range(N):
        out.append(out[-1] * t)
    return Ball.from_intervals(out)


def eval_series(a, theta):
    """Enclosure of the stored polynomial part at theta (Intervals)."""
    theta = [t if isinstance(t, Interval) else Interval(float(t)) for t in _as_theta(theta)]
    if len(theta) != a.m:
        raise ShapeError("theta dimension mismatch")
    c = a.coef
    if a.m == 1:
        v = _powers(theta[0], a.N)
        return (c @ v).interval()
    if a.m == 2:
        v1 = _powers(theta[0], a.N)
        v2 = _powers(theta[1], a.N)
        return ((c @ v2) @ v1).interval()
    # generic: contract one axis at a time
    res = c
    for t in reversed(theta):
        res = res @ _powers(t, a.N)
    return res.interval()


def eval_enclosure(P, theta):
    """
    Enclosure of a (vector or scalar) series at theta in the closed unit
    polydisc, widened by the tail radius.
    """
    _check_polydisc(theta)
    comps = P.components if isinstance(P, TaylorCoeffs) else [P]
    out = [eval_series(s, theta).inflate(s.tail) for s in comps]
    return out if isinstance(P, TaylorCoeffs) else out[0]


def differentiate(a, axis=0):
    """Term-wise partial derivative (tail is not differentiable: set to 0)."""
    N = a.N
    idx = np.arange(N + 1, dtype=float)
    shape = [1] * a.m
    shape[axis] = N + 1
    w = idx.reshape(shape)
    mid = a.coef.mid * w
    rad = _ub(a.coef.rad * w + np.abs(mid) * 2 ** -53, 2)
    mid = np.roll(mid, -1, axis=axis)
    rad = np.roll(rad, -1, axis=axis)
    sl = [slice(None)] * a.m
    sl[axis] = N
    mid[tuple(sl)] = 0.0
    rad[tuple(sl)] = 0.0
    return Series(Ball(mid, rad), N)


# --------------------------------------------------------------------------
# vector-valued series


class TaylorCoeffs:
    """R^n-valued series: a list of n scalar Series with common m and N."""

    def __init__(self, components):
        comps = list(components)
        if not comps:
            raise ShapeError("need at least one component")
        m, N = comps[0].m, comps[0].N
        for c in comps:
            if c.m != m:
                raise ShapeError("components disagree on m")
        N = max(c.N for c in comps)
        self.components = [c.resize(N) for c in comps]
        self.m = m
        self.N = N
        self.n = len(comps)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return self.n

    @property
    def tail_radius(self):
        return Interval(0.0, max(c.tail for c in self.components))

    def to_json(self):
        data = {
            "m": self.m,
            "n": self.n,
            "N": self.N,
            "coefficients": [],
            "tail_radius": [0.0, max(c.tail for c in self.components)],
        }
        flats = [c.flat() for c in self.components]
        lo = [f.lo for f in flats]
        hi = [f.hi for f in flats]
        for k in range(count(self.m, self.N)):
            data["coefficients"].append(
                [[float(lo[i][k]), float(hi[i][k])] for i in range(self.n)])
        return json.dumps(data)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else text
        m, n, N = data["m"], data["n"], data["N"]
        coef = np.asarray(data["coefficients"], dtype=float)  # (count, n, 2)
        tail = float(data["tail_radius"][1])
        comps = []
        for i in range(n):
            flat = Ball.from_lohi(coef[:, i, 0], coef[:, i, 1])
            comps.append(Series.from_flat(m, N, flat, tail))
        return cls(comps)
