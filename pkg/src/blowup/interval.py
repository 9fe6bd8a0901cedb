"""
Outward-rounded interval arithmetic.

Rounding policy (global): endpoints are computed in round-to-nearest and
pushed one ulp outward with math.nextafter unless an error-free transform
(TwoSum, Dekker's TwoProduct) shows the rounded value already lies on the
safe side.  Round-to-nearest is within half an ulp of the exact result, so
one ulp outward always contains it; exact results stay exact.  Bulk
array arithmetic in blowup.ball uses midpoint-radius form with explicit
a-priori floating point error terms, which is the same guarantee stated
differently.
"""

import math
import re
from fractions import Fraction

INF = math.inf


class DomainError(ValueError):
    """Operation undefined on (part of) the operand."""


class NoContraction(ArithmeticError):
    """Interval Newton failed to contract into the bracket."""


def _dn(x):
    return math.nextafter(x, -INF)


def _up(x):
    return math.nextafter(x, INF)


def _two_sum_err(a, b, s):
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _add_dn(a, b):
    s = a + b
    if not math.isfinite(s):
        return s if s == -INF or math.isnan(s) else _dn(s)
    e = _two_sum_err(a, b, s)
    return s if e >= 0 else _dn(s)


def _add_up(a, b):
    s = a + b
    if not math.isfinite(s):
        return s if s == INF or math.isnan(s) else _up(s)
    e = _two_sum_err(a, b, s)
    return s if e <= 0 else _up(s)


_SPLIT = 134217729.0  # 2^27 + 1


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _prod_err(a, b, p):
    """Sign source: exact a*b - p, or None when the transform is unsafe."""
    if a == 0.0 or b == 0.0:
        return 0.0
    if not (1e-280 < abs(p) < 1e300) or abs(a) > 1e150 or abs(b) > 1e150:
        return None
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


_MAXF = Fraction(1.7976931348623157e308)


def _round_fraction(q, up):
    """Directed rounding of an exact rational (slow path for under/overflow)."""
    if q > _MAXF:
        return INF if up else 1.7976931348623157e308
    if q < -_MAXF:
        return -1.7976931348623157e308 if up else -INF
    f = float(q)
    if up and Fraction(f) < q:
        return _up(f)
    if not up and Fraction(f) > q:
        return _dn(f)
    return f


def _mul_dn(a, b):
    p = a * b
    e = _prod_err(a, b, p)
    if e is None:
        if math.isinf(a) or math.isinf(b):
            return p
        return _round_fraction(Fraction(a) * Fraction(b), False)
    return p if e >= 0 else _dn(p)


def _mul_up(a, b):
    p = a * b
    e = _prod_err(a, b, p)
    if e is None:
        if math.isinf(a) or math.isinf(b):
            return p
        return _round_fraction(Fraction(a) * Fraction(b), True)
    return p if e <= 0 else _up(p)


class Interval:
    """Closed interval [lo, hi] with lo <= hi.  Immutable."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        if isinstance(lo, Fraction) or isinstance(hi, Fraction):
            lo, hi = _frac_lo(Fraction(lo)), _frac_hi(Fraction(hi))
        lo = float(lo)
        hi = float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("NaN endpoint")
        if lo > hi:
            raise ValueError(f"empty interval [{lo!r}, {hi!r}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    @classmethod
    def exact(cls, q):
        """Tightest float enclosure of a rational (or decimal string)."""
        q = Fraction(q)
        return cls(_frac_lo(q), _frac_hi(q))

    @classmethod
    def hull(cls, *items):
        items = [as_interval(x) for x in items]
        return cls(min(x.lo for x in items), max(x.hi for x in items))

    # --- queries ---
    @property
    def mid(self):
        m = 0.5 * (self.lo + self.hi)
        if not math.isfinite(m):
            m = 0.5 * self.lo + 0.5 * self.hi
        return m

    @property
    def rad(self):
        m = self.mid
        return _up(max(self.hi - m, m - self.lo))

    @property
    def width(self):
        return _up(self.hi - self.lo)

    @property
    def mag(self):
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self):
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x):
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    __contains__ = contains

    def interior_contains(self, other):
        other = as_interval(other)
        return self.lo < other.lo and other.hi < self.hi

    def intersects(self, other):
        other = as_interval(other)
        return self.lo <= other.hi and other.lo <= self.hi

    def intersect(self, other):
        other = as_interval(other)
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def inflate(self, r):
        return Interval(_dn(self.lo - r), _up(self.hi + r))

    # --- arithmetic ---
    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = as_interval(other)
        return Interval(_add_dn(self.lo, o.lo), _add_up(self.hi, o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = as_interval(other)
        return Interval(_add_dn(self.lo, -o.hi), _add_up(self.hi, -o.lo))

    def __rsub__(self, other):
        return as_interval(other) - self

    def __mul__(self, other):
        o = as_interval(other)
        pairs = ((self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi))
        # 0 * inf counts as 0 (the zero endpoint is an exact zero)
        pairs = [(a, b) for a, b in pairs if a != 0.0 and b != 0.0]
        if len(pairs) < 4:
            pairs.append((0.0, 0.0))
        lo = min(_mul_dn(a, b) for a, b in pairs)
        hi = max(_mul_up(a, b) for a, b in pairs)
        return Interval(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = as_interval(other)
        if o.lo <= 0.0 <= o.hi:
            raise DomainError(f"division by interval containing zero {o}")
        q = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return Interval(_dn(min(q)), _up(max(q)))

    def __rtruediv__(self, other):
        return as_interval(other) / self

    def __pow__(self, k):
        return int_pow(self, k)

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    def sqr(self):
        return int_pow(self, 2)

    def sqrt(self):
        if self.hi < 0:
            raise DomainError("sqrt of negative interval")
        lo = max(self.lo, 0.0)
        return Interval(max(_dn(math.sqrt(lo)), 0.0), _up(math.sqrt(self.hi)))

    # --- comparison helpers (certain relations only) ---
    def __lt__(self, other):
        return self.hi < as_interval(other).lo

    def __gt__(self, other):
        return self.lo > as_interval(other).hi

    def __le__(self, other):
        return self.hi <= as_interval(other).lo

    def __ge__(self, other):
        return self.lo >= as_interval(other).hi

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __str__(self):
        return format_interval(self)


def as_interval(x):
    if isinstance(x, Interval):
        return x
    if isinstance(x, Fraction):
        return Interval.exact(x)
    if isinstance(x, int) and abs(x) > 2**53:
        return Interval.exact(Fraction(x))
    return Interval(float(x), float(x))


def _frac_lo(q):
    f = float(q)
    if Fraction(f) > q:
        f = _dn(f)
    return f


def _frac_hi(q):
    f = float(q)
    if Fraction(f) < q:
        f = _up(f)
    return f


def int_pow(a, k):
    """Enclosure of {x**k : x in a} for integer k >= 0, by monotone cases."""
    a = as_interval(a)
    k = int(k)
    if k < 0:
        raise DomainError("negative exponent")
    if k == 0:
        return Interval(1.0, 1.0)
    if k == 1:
        return a
    lo_abs, hi_abs = a.mig, a.mag
    # |x|**k for a nonnegative range, rounded outward step by step
    lo_p, hi_p = 1.0, 1.0
    for _ in range(k):
        lo_p = _mul_dn(lo_p, lo_abs)
        hi_p = _mul_up(hi_p, hi_abs)
    lo_p = max(lo_p, 0.0)
    if k % 2 == 0:
        return Interval(lo_p, hi_p)
    # odd: monotone increasing
    def odd(x, down):
        r = 1.0
        ax = abs(x)
        for _ in range(k):
            r = _mul_dn(r, ax) if (down == (x >= 0)) else _mul_up(r, ax)
        return r if x >= 0 else -r
    return Interval(odd(a.lo, True), odd(a.hi, False))


def interval_newton_scalar(f, df, bracket, tol=1e-15, maxiter=100):
    """
    Enclose the unique zero of f in bracket by the interval Newton operator
    N(X) = m - f(m)/df(X), intersected with X.

    f and df take and return Intervals.  Raises NoContraction when the
    sign change cannot be certified, when df(bracket) contains 0, or when the
    iteration does not shrink below tol within maxiter steps.
    """
    X = as_interval(bracket)
    flo = f(Interval(X.lo))
    fhi = f(Interval(X.hi))
    if not ((flo.hi < 0 and fhi.lo > 0) or (flo.lo > 0 and fhi.hi < 0)):
        if not (flo.contains(0.0) or fhi.contains(0.0)):
            raise NoContraction("no certified sign change on bracket")
    d = df(X)
    if d.lo < 0.0 < d.hi:
        raise NoContraction("derivative enclosure contains zero")
    # a derivative touching zero at an end of its range: bisect (off-centre,
    # so exact roots at the midpoint cannot stall it) keeping the sign change
    for _ in range(60):
        if not d.contains(0.0):
            break
        c = X.lo + 0.4375 * (X.hi - X.lo)
        fc = f(Interval(c))
        fl = f(Interval(X.lo))
        if fc.contains(0.0):
            raise NoContraction("cannot certify a sign change while refining")
        X = Interval(X.lo, c) if (fl.hi < 0) != (fc.hi < 0) or fl.contains(0.0) else Interval(c, X.hi)
        d = df(X)
    else:
        raise NoContraction("derivative enclosure contains zero")
    for _ in range(maxiter):
        m = Interval(X.mid)
        Nx = m - f(m) / df(X)
        Y = Nx.intersect(X)
        if Y is None:
            raise NoContraction("Newton image misses the bracket")
        if Y.width <= tol or Y == X:
            return Y
        X = Y
    raise NoContraction("iteration cap reached")


def format_interval(x, digits=17):
    return f"[{x.lo:.{digits}g}, {x.hi:.{digits}g}]"


_PARSE = re.compile(r"^\s*\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]\s*$")


def parse_interval(text):
    """Parse "[lo, hi]"; decimal endpoints are rounded outward."""
    m = _PARSE.match(text)
    if not m:
        raise ValueError(f"not an interval literal: {text!r}")
    lo = Fraction(m.group(1).strip())
    hi = Fraction(m.group(2).strip())
    return Interval(_frac_lo(lo), _frac_hi(hi))


def from_digits(common, lo_tail, hi_tail):
    """Interval from the subscript/superscript notation 1.0017_{2293}^{7477}."""
    return Interval(_frac_lo(Fraction(common + lo_tail)),
                    _frac_hi(Fraction(common + hi_tail)))
