"""
Midpoint-radius interval arrays for bulk work (series, matrices).

A Ball array represents the set {m + e : |e| <= r} elementwise.  Every
operation computes the midpoint in round-to-nearest and adds an a-priori
bound on the rounding error to the radius; radii themselves are computed in
round-to-nearest and then scaled up by a safety factor that dominates the
relative error of the (nonnegative) sums that produced them.  For a sum of k
products evaluated in any order the error is at most gamma_k * sum|terms|
with gamma_k = k*u/(1-k*u); this covers BLAS matmul and direct convolution.
"""

import numpy as np

from .interval import Interval

U = 2.0 ** -53
ETA = 2.0 ** -1074
TINY = 2.0 ** -1000  # absolute slack per entry, dominates underflow losses


def gamma(k):
    k = max(int(k), 1)
    ku = k * U
    if ku >= 0.5:
        raise OverflowError("too many terms for the rounding error model")
    return ku / (1.0 - ku)


def _ub(x, k=4):
    """Upper bound for a nonnegative quantity computed with <= k roundings."""
    g = gamma(k + 2)
    return x * (1.0 + 2.0 * g) + TINY


class Ball:
    """Elementwise enclosure m +- r over numpy arrays."""

    __slots__ = ("mid", "rad")

    def __init__(self, mid, rad=None):
        self.mid = np.asarray(mid, dtype=float)
        if rad is None:
            self.rad = np.zeros_like(self.mid)
        else:
            rad = np.asarray(rad, dtype=float)
            if rad.shape != self.mid.shape:
                rad = np.broadcast_to(rad, self.mid.shape)
            self.rad = rad.copy()
        # min(...) < 0 is False for nan, the negated form catches both
        if self.mid.size and not (np.min(self.rad) >= 0 and np.min(np.abs(self.mid)) >= 0):
            raise ValueError("invalid ball")

    # --- construction / conversion ---
    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape))

    @classmethod
    def from_lohi(cls, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        m = 0.5 * lo + 0.5 * hi
        r = np.maximum(hi - m, m - lo)
        return cls(m, _ub(r, 2))

    @classmethod
    def from_intervals(cls, items):
        arr = np.asarray(items, dtype=object)
        lo = np.vectorize(lambda x: x.lo, otypes=[float])(arr) if arr.size else np.zeros(arr.shape)
        hi = np.vectorize(lambda x: x.hi, otypes=[float])(arr) if arr.size else np.zeros(arr.shape)
        return cls.from_lohi(lo, hi)

    @classmethod
    def from_interval(cls, x, shape=()):
        return cls.from_lohi(np.full(shape, x.lo), np.full(shape, x.hi))

    @property
    def lo(self):
        return np.nextafter(self.mid - self.rad, -np.inf)

    @property
    def hi(self):
        return np.nextafter(self.mid + self.rad, np.inf)

    @property
    def shape(self):
        return self.mid.shape

    def __len__(self):
        return len(self.mid)

    def interval(self, idx=()):
        return Interval(float(self.lo[idx]), float(self.hi[idx]))

    def intervals(self):
        lo, hi = self.lo, self.hi
        out = np.empty(self.shape, dtype=object)
        for i in np.ndindex(self.shape):
            out[i] = Interval(lo[i], hi[i])
        return out

    def __getitem__(self, idx):
        return Ball(self.mid[idx], self.rad[idx])

    def copy(self):
        return Ball(self.mid.copy(), self.rad.copy())

    def reshape(self, *shape):
        return Ball(self.mid.reshape(*shape), self.rad.reshape(*shape))

    @property
    def T(self):
        return Ball(self.mid.T, self.rad.T)

    def mag(self):
        """Upper bound of |x| elementwise."""
        return _ub(np.abs(self.mid) + self.rad, 1)

    def mig(self):
        return np.maximum(np.nextafter(np.abs(self.mid) - self.rad, -np.inf), 0.0)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.all((self.lo <= x) & (x <= self.hi))

    def contains_zero(self):
        return (self.lo <= 0) & (self.hi >= 0)

    def hull(self, other):
        other = as_ball(other)
        return Ball.from_lohi(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def inflate(self, r):
        return Ball(self.mid, _ub(self.rad + r, 1))

    # --- arithmetic ---
    def __neg__(self):
        return Ball(-self.mid, self.rad)

    def __add__(self, other):
        o = as_ball(other)
        m = self.mid + o.mid
        return Ball(m, _ub(self.rad + o.rad + U * np.abs(m), 3))

    __radd__ = __add__

    def __sub__(self, other):
        o = as_ball(other)
        m = self.mid - o.mid
        return Ball(m, _ub(self.rad + o.rad + U * np.abs(m), 3))

    def __rsub__(self, other):
        return as_ball(other) - self

    def __mul__(self, other):
        o = as_ball(other)
        m = self.mid * o.mid
        r = (np.abs(self.mid) * o.rad + self.rad * (np.abs(o.mid) + o.rad)
             + U * np.abs(m))
        return Ball(m, _ub(r, 5))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = as_ball(other)
        if np.any(o.contains_zero()):
            from .interval import DomainError
            raise DomainError("division by ball containing zero")
        alo, ahi, blo, bhi = self.lo, self.hi, o.lo, o.hi
        alo, ahi, blo, bhi = np.broadcast_arrays(alo, ahi, blo, bhi)
        q = np.stack([alo / blo, alo / bhi, ahi / blo, ahi / bhi])
        return Ball.from_lohi(np.nextafter(q.min(axis=0), -np.inf),
                              np.nextafter(q.max(axis=0), np.inf))

    def __rtruediv__(self, other):
        return as_ball(other) / self

    def sum(self, axis=None):
        n = self.mid.size if axis is None else self.mid.shape[axis]
        m = np.sum(self.mid, axis=axis)
        r = np.sum(self.rad, axis=axis) + gamma(n) * np.sum(np.abs(self.mid), axis=axis)
        return Ball(m, _ub(r, n + 2))

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(as_ball(other), self)

    def norm1(self):
        """Upper bound of sum |x| over all entries."""
        a = np.abs(self.mid) + self.rad
        total = np.sum(a)
        if total == 0.0:  # every entry is an exact zero
            return 0.0
        return float(_ub(total, a.size + 2))

    def norm1_lower(self):
        return float(np.sum(self.mig()) * (1 - gamma(self.mid.size + 2)))

    def __repr__(self):
        return f"Ball(mid={self.mid!r}, rad={self.rad!r})"


def as_ball(x):
    if isinstance(x, Ball):
        return x
    if isinstance(x, Interval):
        return Ball.from_interval(x)
    return Ball(np.asarray(x, dtype=float))


def matmul(A, B):
    """Rigorous product of ball matrices (or matrix-vector) via BLAS."""
    A, B = as_ball(A), as_ball(B)
    k = A.mid.shape[-1]
    m = A.mid @ B.mid
    absA = np.abs(A.mid)
    absB = np.abs(B.mid)
    g = gamma(k + 2)
    r = absA @ (B.rad + g * absB)
    if np.any(A.rad):
        r = r + A.rad @ (absB + B.rad)
    return Ball(m, _ub(r, k + 4))


# --------------------------------------------------------------------------
# convolution


def _toeplitz_stack(b, rows_out, cols_in):
    """T[l] has T[l][i, k] = b[i - k, l]; stacked along axis 0."""
    nb0, nb1 = b.shape
    T = np.zeros((nb1, rows_out, cols_in))
    for k in range(cols_in):
        T[:, k:k + nb0, k] = b.T
    return T


def conv_float(a, b):
    """Full (untruncated) direct convolution of 1-D or 2-D float arrays."""
    if a.ndim == 1:
        return np.convolve(a, b)
    if a.ndim != 2:
        raise ValueError("only m in {1, 2} supported")
    if b.size > a.size:
        a, b = b, a
    na0, na1 = a.shape
    nb0, nb1 = b.shape
    out = np.zeros((na0 + nb0 - 1, na1 + nb1 - 1))
    T = _toeplitz_stack(b, na0 + nb0 - 1, na0)
    Y = T.reshape(nb1 * (na0 + nb0 - 1), na0) @ a
    Y = Y.reshape(nb1, na0 + nb0 - 1, na1)
    for l in range(nb1):
        out[:, l:l + na1] += Y[l]
    return out


def _conv_terms(a_shape, b_shape):
    if len(a_shape) == 1:
        return min(a_shape[0], b_shape[0]) + 2
    # summation tree of the Toeplitz/BLAS scheme, zeros included
    big, small = (a_shape, b_shape) if np.prod(a_shape) >= np.prod(b_shape) else (b_shape, a_shape)
    return big[0] * small[1] + small[1] + 2


def _pair_counts(na, nb):
    """Number of index pairs (p, q), p < na, q < nb, with p + q = i."""
    i = np.arange(na + nb - 1)
    return np.minimum(np.minimum(i + 1, na), np.minimum(nb, na + nb - 1 - i)).astype(float)


def _conv_gamma(a_shape, b_shape):
    """Per-coefficient gamma: exact zeros add no rounding, so a coefficient
    summing p products is a tree with p nonzero leaves."""
    cnt = _pair_counts(a_shape[0], b_shape[0])
    if len(a_shape) == 2:
        cnt = np.multiply.outer(cnt, _pair_counts(a_shape[1], b_shape[1]))
    ku = (cnt + 1.0) * U
    if np.max(ku) >= 0.5:
        raise OverflowError("too many terms for the rounding error model")
    return ku / (1.0 - ku)


def conv(a, b):
    """Rigorous full convolution of two Ball arrays (1-D or 2-D)."""
    a, b = as_ball(a), as_ball(b)
    k = _conv_terms(a.shape, b.shape)
    m = conv_float(a.mid, b.mid)
    absa, absb = np.abs(a.mid), np.abs(b.mid)
    r = _conv_gamma(a.shape, b.shape) * conv_float(absa, absb)
    if np.any(b.rad):
        r = r + conv_float(absa, b.rad)
    if np.any(a.rad):
        r = r + conv_float(a.rad, absb + b.rad)
    return Ball(m, _ub(np.maximum(r, 0.0), k + 4))
