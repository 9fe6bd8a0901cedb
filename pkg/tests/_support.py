"""Cached fields, equilibria and charts shared across test modules."""

from functools import lru_cache

from blowup import build_chart, load_model, verify_equilibrium


@lru_cache(maxsize=None)
def field(name):
    return load_model(name)


@lru_cache(maxsize=None)
def equilibrium(name, eq):
    g = field(name)
    return verify_equilibrium(g, g.seeds[eq], name=eq)


@lru_cache(maxsize=None)
def chart(name, eq, N, sigma=None):
    return build_chart(field(name), equilibrium(name, eq), sigma=sigma, N=N, inward=sigma is None)


# criterion -> list of (check, passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def record(criterion, check, passed, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))


def _time_factor(g):
    num, den = g.timefactor
    n = num.to_poly()
    d = None if den is None else den.to_poly()
    return lambda x: n.eval_float(x) / (1.0 if d is None else d.eval_float(x))


def quadrature_tmax(ch, theta, eps=1e-8):
    """
    Non-rigorous t_max(theta) by quadrature of S along an orbit.  Forward
    orbits peel off a saddle's stable manifold, so the orbit is run backward
    from the linearized manifold point x* + sum theta'_i v_i (theta'_i ~ eps),
    which is stable, plus the linear estimate of t_max(theta').
    Returns (value, end point of the orbit).
    """
    import numpy as np
    from scipy.integrate import solve_ivp
    g = ch.field
    S = _time_factor(g)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    lam = np.array([l.mid for l in ch.Lambda])
    xs = ch.equilibrium.box.mid
    lin = []
    for i in range(th.size):
        e = [0] * th.size
        e[i] = 1
        lin.append(np.array([c.coef.mid[tuple(e)] for c in ch.coeffs]))
    T = max(np.log(eps / abs(t)) / l for t, l in zip(th, lam) if t != 0)
    thp = th * np.exp(lam * T)
    y0 = xs + sum(t * v for t, v in zip(thp, lin))
    sol = solve_ivp(lambda t, y: np.concatenate([-g.eval_float(y[:-1]), [S(y[:-1])]]), (0.0, T),
                    np.concatenate([y0, [0.0]]), method="DOP853", rtol=1e-13, atol=1e-16)
    h = 1e-7
    grad = np.array([(S(xs + h * e) - S(xs - h * e)) / (2 * h) for e in np.eye(g.n)])
    rest = sum(-(grad @ v) * t / l for v, t, l in zip(lin, thp, lam))
    return float(sol.y[-1, -1] + rest), sol.y[:-1, -1]


def decay_exponent(ts, m, ks=range(6, 13)):
    """Least-squares slope of log|t_max| against log theta on theta = 10^-k (diagonal for m > 1)."""
    import numpy as np
    th = np.array([10.0 ** -k for k in ks])
    vals = np.array([abs(ts.unchecked((t,) * m if m > 1 else t).mid) for t in th])
    return float(np.polyfit(np.log(th), np.log(vals), 1)[0])


def five_point(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)
