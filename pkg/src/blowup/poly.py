"""
Multivariate polynomials.

QPoly holds exact rational coefficients and is used to build models;
Poly holds Ball coefficients (each rational rounded outward once) and is
what every rigorous evaluation uses.
"""

from fractions import Fraction

import numpy as np
from scipy.signal import fftconvolve

from .ball import Ball, as_ball, _ub
from .interval import Interval
from .series import Series, cauchy_product, total_degree


class QPoly:
    """Exact polynomial in n variables: {exponent tuple: Fraction}."""

    __slots__ = ("n", "terms")

    def __init__(self, n, terms=None):
        self.n = n
        self.terms = {}
        for e, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                self.terms[tuple(e)] = c

    @classmethod
    def const(cls, n, c):
        return cls(n, {(0,) * n: Fraction(c)})

    @classmethod
    def var(cls, n, i):
        e = [0] * n
        e[i] = 1
        return cls(n, {tuple(e): Fraction(1)})

    def _coerce(self, other):
        if isinstance(other, QPoly):
            return other
        return QPoly.const(self.n, Fraction(other))

    def __add__(self, other):
        o = self._coerce(other)
        t = dict(self.terms)
        for e, c in o.terms.items():
            t[e] = t.get(e, 0) + c
        return QPoly(self.n, t)

    __radd__ = __add__

    def __neg__(self):
        return QPoly(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in o.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return QPoly(self.n, t)

    __rmul__ = __mul__

    def __pow__(self, k):
        r = QPoly.const(self.n, 1)
        for _ in range(int(k)):
            r = r * self
        return r

    def __eq__(self, other):
        return isinstance(other, QPoly) and self.n == other.n and self.terms == other.terms

    def diff(self, i):
        t = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                t[tuple(e2)] = c * e[i]
        return QPoly(self.n, t)

    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def __call__(self, *x):
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for xi, k in zip(x, e):
                v *= Fraction(xi) ** k
            total += v
        return total

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: (-sum(t[0]), tuple(-k for k in t[0])))

    def to_poly(self):
        items = self.sorted_terms()
        exps = np.array([e for e, _ in items], dtype=int).reshape(len(items), self.n)
        coefs = [Interval.exact(c) for _, c in items]
        return Poly(self.n, exps, Ball.from_intervals(coefs) if coefs else Ball(np.zeros(0)), self)


class Poly:
    """Polynomial with Ball coefficients; optional exact source kept for derivatives."""

    def __init__(self, n, exps, coef, exact=None):
        self.n = n
        self.exps = np.asarray(exps, dtype=int).reshape(-1, n)
        self.coef = as_ball(coef)
        self.exact = exact

    @property
    def nterms(self):
        return self.exps.shape[0]

    def degree(self):
        return int(self.exps.sum(axis=1).max()) if self.nterms else 0

    def max_exponents(self):
        if not self.nterms:
            return np.zeros(self.n, dtype=int)
        return self.exps.max(axis=0)

    def diff(self, i):
        if self.exact is not None:
            return self.exact.diff(i).to_poly()
        keep = self.exps[:, i] > 0
        e = self.exps[keep].copy()
        c = self.coef[keep] * e[:, i].astype(float)
        e[:, i] -= 1
        return Poly(self.n, e, c)

    def is_zero(self):
        return self.nterms == 0

    # --- point / box evaluation ---
    def eval_ball(self, x):
        """x: Ball of shape (n,) -> Ball scalar."""
        x = as_ball(x)
        if not self.nterms:
            return Ball(0.0)
        maxe = self.max_exponents()
        acc = self.coef
        for i in range(self.n):
            if maxe[i] == 0:
                continue
            pw = _ball_powers(x[i], maxe[i])
            acc = acc * pw[self.exps[:, i]]
        return acc.sum()

    def eval(self, x):
        xb = Ball.from_intervals([xi if isinstance(xi, Interval) else Interval(xi) for xi in x])
        return self.eval_ball(xb).interval()

    def eval_float(self, x):
        x = np.asarray(x, dtype=float)
        if not self.nterms:
            return 0.0
        return float(np.sum(self.coef.mid * np.prod(x[None, :] ** self.exps, axis=1)))

    def norm_bound(self, norms):
        """Upper bound of sum |c| prod norms_i^e_i (Banach-algebra bound)."""
        if not self.nterms:
            return 0.0
        norms = np.asarray(norms, dtype=float)
        mags = self.coef.mag()
        vals = mags * np.prod(norms[None, :] ** self.exps, axis=1)
        return float(_ub(np.sum(vals), self.nterms + 2 * int(self.exps.sum()) + 2))

    # --- series evaluation ---
    def eval_series(self, a, cache=None, N=None):
        """Rigorous composition with a list of n Series (Cauchy products)."""
        if cache is None:
            cache = SeriesPowerCache(a, N)
        m = a[0].m
        out = None
        for t in range(self.nterms):
            mono = cache.monomial(tuple(self.exps[t]))
            term = mono.scale(self.coef[t])
            out = term if out is None else out + term
        if out is None:
            out = Series.zeros(m, a[0].N)
        return out

    def eval_series_float(self, a, D, cache=None):
        """Float composition with dense arrays a[i], truncated at degree D."""
        if cache is None:
            cache = FloatPowerCache(a, D)
        out = np.zeros((D + 1,) * a[0].ndim)
        for t in range(self.nterms):
            out += self.coef.mid[t] * cache.monomial(tuple(self.exps[t]))
        return out


def _ball_powers(xi, k):
    """Ball vector (xi^0..xi^k) for scalar Ball xi, even powers kept >= 0."""
    iv = xi.interval()
    vals = [Interval(1.0)]
    for j in range(1, k + 1):
        vals.append(iv ** j)
    return Ball.from_intervals(vals)


class SeriesPowerCache:
    """Shared powers and monomials of a list of Series (rigorous)."""

    def __init__(self, a, N=None):
        self.a = list(a)
        self.N = N
        self.pw = {}
        self.mono = {}

    def power(self, i, e):
        key = (i, e)
        if key not in self.pw:
            if e == 0:
                self.pw[key] = Series.constant(self.a[i].m, 0, 1.0)
            elif e == 1:
                self.pw[key] = self.a[i] if self.N is None else self.a[i].truncate(self.N)
            else:
                h = e // 2
                if e % 2 == 0:
                    self.pw[key] = cauchy_product(self.power(i, h), self.power(i, h), self.N)
                else:
                    self.pw[key] = cauchy_product(self.power(i, e - 1), self.power(i, 1), self.N)
        return self.pw[key]

    def monomial(self, e):
        e = tuple(int(k) for k in e)
        if e in self.mono:
            return self.mono[e]
        nz = [i for i, k in enumerate(e) if k]
        if not nz:
            s = Series.constant(self.a[0].m, 0, 1.0)
        elif len(nz) == 1:
            s = self.power(nz[0], e[nz[0]])
        else:
            last = nz[-1]
            prefix = list(e)
            prefix[last] = 0
            s = cauchy_product(self.monomial(tuple(prefix)), self.power(last, e[last]), self.N)
        self.mono[e] = s
        return s


def _fconv(x, y, D):
    if x.ndim == 1:
        c = np.convolve(x, y)
        out = np.zeros(D + 1)
        k = min(D + 1, len(c))
        out[:k] = c[:k]
        return out
    c = fftconvolve(x, y)
    out = np.zeros((D + 1, D + 1))
    k0, k1 = min(D + 1, c.shape[0]), min(D + 1, c.shape[1])
    out[:k0, :k1] = c[:k0, :k1]
    out[total_degree(2, D) > D] = 0.0
    return out


class FloatPowerCache:
    """Float analogue of SeriesPowerCache with dense arrays truncated at D."""

    def __init__(self, a, D):
        self.D = D
        self.a = []
        for ai in a:
            z = np.zeros((D + 1,) * ai.ndim)
            k = min(D + 1, ai.shape[0])
            z[(slice(0, k),) * ai.ndim] = ai[(slice(0, k),) * ai.ndim]
            if ai.ndim > 1:
                z[total_degree(ai.ndim, D) > D] = 0.0
            self.a.append(z)
        self.pw = {}
        self.mono = {}

    def power(self, i, e):
        key = (i, e)
        if key not in self.pw:
            if e == 0:
                z = np.zeros_like(self.a[0])
                z[(0,) * z.ndim] = 1.0
                self.pw[key] = z
            elif e == 1:
                self.pw[key] = self.a[i]
            else:
                h = e // 2
                if e % 2 == 0:
                    self.pw[key] = _fconv(self.power(i, h), self.power(i, h), self.D)
                else:
                    self.pw[key] = _fconv(self.power(i, e - 1), self.a[i], self.D)
        return self.pw[key]

    def monomial(self, e):
        e = tuple(int(k) for k in e)
        if e in self.mono:
            return self.mono[e]
        nz = [i for i, k in enumerate(e) if k]
        if not nz:
            s = self.power(0, 0)
        elif len(nz) == 1:
            s = self.power(nz[0], e[nz[0]])
        else:
            last = nz[-1]
            prefix = list(e)
            prefix[last] = 0
            s = _fconv(self.monomial(tuple(prefix)), self.power(last, e[last]), self.D)
        self.mono[e] = s
        return s
