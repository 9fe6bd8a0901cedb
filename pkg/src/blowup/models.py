"""
Built-in example systems and the plain-text model file format.

Model file layout (``#`` starts a comment)::

    name: example3
    dim: 2
    kind: parabolic
    alpha: 1 2
    beta: 2 1
    c: 2
    k: 1
    equilibrium p0: 0 0
    [g1]
    -3/4 5 0
    ...
    [S]            # or [S_num] and [S_den] for a rational time factor

Each monomial line is ``coefficient e_1 ... e_n`` with an exact rational
coefficient (``p/q`` or a terminating decimal).
"""

from fractions import Fraction
from pathlib import Path

from .compactify import CompactificationSpec
from .field import PolyField
from .poly import QPoly

MODEL_DIR = Path(__file__).parent / "data"
BUILTIN = ("example1", "example2", "example3")


class ModelError(ValueError):
    pass


# --------------------------------------------------------------------------
# Example 1: two-phase flow, directional chart (x1, s) = (beta, 1/v)

EX1_RHO = (Fraction(1), Fraction(2))
EX1_LEFT = (Fraction(19, 10), Fraction(4))
EX1_RIGHT = (Fraction(3, 2), Fraction(5))


def example1_constants(rho=EX1_RHO, left=EX1_LEFT, right=EX1_RIGHT):
    """Exact (c, c1, c2) of the shock speed and the two integration constants."""
    r1, r2 = rho
    bL, vL = left
    bR, vR = right
    B1 = lambda b: (b - r1) * (b - r2) / b
    B2 = lambda b: (b * b - r1 * r2) / (2 * b * b)
    c = (vR * B1(bR) - vL * B1(bL)) / (bR - bL)
    c1 = vL * B1(bL) - c * bL
    c2 = vL ** 2 * B2(bL) - c * vL
    return c, c1, c2


def build_example1():
    r1, r2 = EX1_RHO
    c, c1, c2 = example1_constants()
    x1, x2 = QPoly.var(2, 0), QPoly.var(2, 1)
    g1 = x1 ** 3 - (r1 + r2) * x1 ** 2 + r1 * r2 * x1 - c * x1 ** 3 * x2 - c1 * x1 ** 2 * x2
    g2 = (Fraction(-1, 2) * x1 ** 2 * x2 + Fraction(1, 2) * r1 * r2 * x2
          + c * x1 ** 2 * x2 ** 2 + c2 * x1 ** 2 * x2 ** 3)
    spec = CompactificationSpec(alpha=(0, 1), kind="directional", index=1, sign=1, k=1)
    return PolyField([g1, g2], spec, (x2, x1 ** 2), "example1",
                     {"p2": (2.0, 0.0)})


# --------------------------------------------------------------------------
# Example 2: Nagumo-type cubic system, Poincare compactification

EX2_PARAMS = dict(a=Fraction(3, 10), c=Fraction(7, 10), delta=Fraction(9), w=Fraction(1, 50))


def build_example2(params=None):
    p = dict(EX2_PARAMS)
    p.update(params or {})
    a, c, d, w = p["a"], p["c"], p["delta"], p["w"]
    x = [QPoly.var(3, i) for i in range(3)]
    r2 = x[0] ** 2 + x[1] ** 2 + x[2] ** 2
    f1 = x[0] ** 3 - (1 - r2) * x[0]
    f2 = x[0] ** 2 * x[1] + x[0] ** 2 * x[2]
    f3 = x[0] ** 2 * x[2] + (c * x[0] ** 2 * x[2] - x[1] * (x[1] - a * x[0]) * (x[0] - x[1])
                            + w * x[0] ** 3) * (1 / d)
    f = [f1, f2, f3]
    G = x[0] * f1 + x[1] * f2 + x[2] * f3
    g = [fi - xi * G for fi, xi in zip(f, x)]
    spec = CompactificationSpec(alpha=(1, 1, 1), beta=(1, 1, 1), c=1, k=2, kind="poincare")
    seeds = {
        "p0": (0.9333789, 0.3588924, 0.0),
        "p1": (0.7180928, 0.6959473, 0.0),
        "p2": (0.9985628, -0.0535924, 0.0),
        "pb": (0.7071051816183367, 0.001504037399468, -0.001504037399468),
    }
    return PolyField(g, spec, 1 - r2, "example2", seeds)


# --------------------------------------------------------------------------
# Example 3: planar quasi-homogeneous system, quasi-parabolic compactification


def build_example3():
    x1, x2 = QPoly.var(2, 0), QPoly.var(2, 1)
    q = Fraction
    p4 = x1 ** 4 + x2 ** 2
    H1 = q(1, 4) * (1 + 3 * p4)
    f1 = x1 ** 2 - x2
    f2 = q(1, 3) * x1 ** 3 - (1 - p4) ** 2 * x1
    H2 = x1 ** 3 * f1 + q(1, 2) * x2 * f2
    g1 = f1 * H1 - x1 * H2
    g2 = f2 * H1 - 2 * x2 * H2
    spec = CompactificationSpec(alpha=(1, 2), beta=(2, 1), c=2, k=1, kind="parabolic")
    seeds = {
        "p0": (0.0, 0.0),
        "pb+": (0.7328506362011802, 0.5370700549804747),
        "pb-": (-0.7328506362011802, 0.5370700549804747),
        "pinf_s+": (0.8861081289780320, 0.6192579489210105),
        "pinf_s-": (-0.8861081289780320, 0.6192579489210105),
        "pinf+": (0.989136995894977, 0.206758557005180),
        "pinf-": (-0.989136995894977, 0.206758557005180),
    }
    return PolyField([g1, g2], spec, H1 * (1 - p4), "example3", seeds)


BUILDERS = {"example1": build_example1, "example2": build_example2, "example3": build_example3}


# --------------------------------------------------------------------------
# model files


def _ints(text):
    return tuple(int(t) for t in text.split())


def _fmt_frac(c):
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def dump_model(g):
    """Text of a model file describing the PolyField g."""
    s = g.spec
    lines = [f"name: {g.name}", f"dim: {g.n}"]
    if s is not None:
        lines += [f"kind: {s.kind}", "alpha: " + " ".join(map(str, s.alpha))]
        if s.beta:
            lines.append("beta: " + " ".join(map(str, s.beta)))
        lines += [f"c: {s.c}", f"k: {s.k}"]
        if s.kind == "directional":
            lines += [f"index: {s.index}", f"sign: {s.sign}"]
    for key, val in g.seeds.items():
        lines.append(f"equilibrium {key}: " + " ".join(repr(float(v)) for v in val))

    def block(title, poly):
        lines.append(f"[{title}]")
        for e, c in poly.sorted_terms():
            lines.append(_fmt_frac(c) + " " + " ".join(map(str, e)))

    for i, c in enumerate(g.q):
        block(f"g{i + 1}", c)
    if g.timefactor is not None:
        num, den = g.timefactor
        if den is None:
            block("S", num)
        else:
            block("S_num", num)
            block("S_den", den)
    return "\n".join(lines) + "\n"


def parse_model(text):
    head = {}
    seeds = {}
    blocks = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            blocks[current] = {}
            continue
        if current is None:
            if ":" not in line:
                raise ModelError(f"line {lineno}: expected 'key: value'")
            key, val = (t.strip() for t in line.split(":", 1))
            if key.startswith("equilibrium "):
                seeds[key.split(None, 1)[1]] = tuple(float(v) for v in val.split())
            else:
                head[key] = val
            continue
        parts = line.split()
        try:
            coef = Fraction(parts[0])
            exps = tuple(int(t) for t in parts[1:])
        except ValueError as e:
            raise ModelError(f"line {lineno}: bad monomial {line!r}") from e
        blocks[current][exps] = blocks[current].get(exps, 0) + coef

    if "dim" not in head:
        raise ModelError("missing 'dim'")
    n = int(head["dim"])
    for b in blocks.values():
        for e in b:
            if len(e) != n:
                raise ModelError(f"monomial {e} does not have {n} exponents")
    comps = []
    for i in range(n):
        if f"g{i + 1}" not in blocks:
            raise ModelError(f"missing block [g{i + 1}]")
        comps.append(QPoly(n, blocks[f"g{i + 1}"]))
    spec = None
    if "kind" in head:
        kind = head["kind"]
        kw = dict(alpha=_ints(head["alpha"]), c=int(head.get("c", 1)),
                  k=int(head.get("k", 1)), kind=kind)
        if "beta" in head:
            kw["beta"] = _ints(head["beta"])
        if kind == "directional":
            kw["index"] = int(head["index"])
            kw["sign"] = int(head.get("sign", 1))
        spec = CompactificationSpec(**kw)
    tf = None
    if "S" in blocks:
        tf = QPoly(n, blocks["S"])
    elif "S_num" in blocks:
        tf = (QPoly(n, blocks["S_num"]), QPoly(n, blocks["S_den"]) if "S_den" in blocks else None)
    return PolyField(comps, spec, tf, head.get("name", ""), seeds)


def load_model(name_or_path):
    """Builtin name (example1/2/3) or path of a model file."""
    if name_or_path in BUILTIN:
        path = MODEL_DIR / f"{name_or_path}.model"
        if path.exists():
            return parse_model(path.read_text())
        return BUILDERS[name_or_path]()
    path = Path(name_or_path)
    if not path.is_file():
        raise FileNotFoundError(f"model file not found: {name_or_path}")
    return parse_model(path.read_text())


def write_builtin_models(directory=MODEL_DIR):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, build in BUILDERS.items():
        (directory / f"{name}.model").write_text(dump_model(build()))
