"""
Command line front end.

    blowup chart   --model M --N n --out DIR [--eq NAME] [--sigma-eig s] [--rstar r]
    blowup table   --model example1 --N 300 --out DIR
    blowup surface --model M --eq NAME --N n --out DIR [--grid k]
    blowup scan    --model example3 --out DIR [--points 200]

A config file (``--config FILE``) holds ``key = value`` lines using the
long option names (dashes or underscores); explicit options win.  Exit
status is 0 only when every certification succeeded, 1 otherwise, 2 for
usage errors such as a missing model file.
"""

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .interval import DomainError, Interval
from .models import ModelError, load_model

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def read_config(path):
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _common(p):
    p.add_argument("--config", help="key = value file with defaults for these options")
    p.add_argument("--model", help="example1|example2|example3 or a model file path")
    p.add_argument("--N", type=int, help="truncation degree of the chart")
    p.add_argument("--out", help="output directory")
    p.add_argument("--sigma-eig", type=float, help="eigenvector scale (all directions)")
    p.add_argument("--rstar", type=float, help="a priori radius r* for the Z2 bound")
    p.add_argument("--eq", help="equilibrium name from the model file")
    p.add_argument("--order", type=int, help="Taylor order of the integrator")


def build_parser():
    ap = argparse.ArgumentParser(prog="blowup", description="Validated saddle-type blow-up solutions")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("chart", help="verify equilibria and certify stable-manifold charts")
    _common(p)
    p = sub.add_parser("table", help="blow-up times along an extended stable manifold")
    _common(p)
    p.add_argument("--theta", type=float, help="chart parameter of the seed point")
    p.add_argument("--taus", help="comma-separated backward times (default: built-in sample points)")
    p = sub.add_parser("surface", help="t_max over a grid of the chart polydisc")
    _common(p)
    p.add_argument("--grid", type=int, help="points per axis")
    p = sub.add_parser("scan", help="blow-up times on a segment across the separatrix")
    _common(p)
    p.add_argument("--points", type=int, help="number of points (split between both sides)")
    p.add_argument("--dmin", type=float, help="smallest distance from the boundary point")
    p.add_argument("--half-length", type=float, help="half length of the segment")
    p.add_argument("--sep-eq", help="saddle whose chart boundary is the crossing point")
    p.add_argument("--sink-eq", help="sink on the horizon (blow-up side)")
    p.add_argument("--global-eq", help="bounded sink (global side)")
    p.add_argument("--tau-max", type=float, help="integration horizon per point")
    return ap


DEFAULTS = {
    "model": "example1", "N": None, "out": ".", "sigma_eig": None, "rstar": 1e-6, "eq": None,
    "order": 15, "theta": None, "taus": None, "grid": 21, "points": 200, "dmin": 1e-10,
    "half_length": 0.05, "sep_eq": "pinf_s+", "sink_eq": "pinf+", "global_eq": "pb-", "tau_max": 300.0,
}
TYPES = {"N": int, "sigma_eig": float, "rstar": float, "order": int, "theta": float, "grid": int,
         "points": int, "dmin": float, "half_length": float, "tau_max": float}


def resolve(args):
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    opts = {}
    for key, default in DEFAULTS.items():
        val = getattr(args, key, None)
        if val is None and key in cfg:
            val = TYPES.get(key, str)(cfg[key])
        opts[key] = default if val is None else val
    return opts


# --------------------------------------------------------------------------
# helpers


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _iv(x):
    return [repr(x.lo), repr(x.hi)]


def _verify_all(field, names=None):
    from .field import verify_equilibrium
    out, failed = {}, []
    for name, seed in field.seeds.items():
        if names and name not in names:
            continue
        try:
            out[name] = verify_equilibrium(field, seed, name=name)
        except (DomainError, ArithmeticError) as exc:
            failed.append((name, str(exc)))
    return out, failed


def _chart_for(field, eq, opts, N_default):
    from .manifold import build_chart
    N = opts["N"] or N_default
    lam, _ = eq.stable
    sigma = None if opts["sigma_eig"] is None else (opts["sigma_eig"],) * len(lam)
    return build_chart(field, eq, sigma=sigma, N=N, r_star=opts["rstar"], inward=sigma is None)


def _log(msg):
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# commands


def cmd_chart(opts):
    field = load_model(opts["model"])
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    names = [opts["eq"]] if opts["eq"] else None
    eqs, failed = _verify_all(field, names)
    rows = []
    for name, err in failed:
        rows.append([name, "", "", "", "failed", err])
    for name, eq in eqs.items():
        lam = " ".join(f"{l.mid:.10g}" for l in eq.eigenvalues)
        pairs = " ".join(f"{re.mid:.8g}+-{im.mid:.8g}i" for re, im in eq.complex_pairs)
        status, r0, msg = "verified", "", ""
        if eq.stable_count and (eq.on_horizon or eq.kind == "saddle"):
            try:
                ch = _chart_for(field, eq, opts, 50)
                (out / f"chart_{name}.json").write_text(ch.to_json())
                (out / f"certificate_{name}.txt").write_text(
                    f"{field.name} {name} sigma={list(ch.sigma)}\n{ch.certificate.report()}\n")
                r0 = repr(ch.r0.hi)
                status = "chart"
            except (DomainError, ArithmeticError) as exc:
                bound = getattr(exc, "bound", None)
                status = "failed"
                msg = f"{type(exc).__name__}: {exc}" + (f" (bound {bound})" if bound else "")
                failed.append((name, msg))
        rows.append([name, eq.kind, (lam + " " + pairs).strip(), r0, status, msg])
        _log(f"{name}: {eq.kind} {status} {r0}")
    _write_csv(out / "equilibria.csv", ["name", "kind", "eigenvalues", "r0", "status", "message"], rows)
    return EXIT_FAILED if failed else EXIT_OK


def cmd_table(opts):
    from .blowtime import EX1_PRINTED_TMAX, example1_table, tmax_chart
    from .integrate import extend_manifold
    field = load_model(opts["model"])
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    eqs, failed = _verify_all(field, [opts["eq"]] if opts["eq"] else None)
    if failed or not eqs:
        _log(f"equilibrium verification failed: {failed}")
        return EXIT_FAILED
    name, eq = next((k, e) for k, e in eqs.items() if e.on_horizon and e.stable_count)
    theta = 1.0 if opts["theta"] is None else opts["theta"]
    if field.name == "example1" and opts["sigma_eig"] is None:
        opts = dict(opts, sigma_eig=0.09999)
    ch = _chart_for(field, eq, opts, 300 if field.name == "example1" else 100)
    if field.name == "example1" and not opts["taus"]:
        rows, traj = example1_table(ch, theta)
        table = [(r.label, r.tau, r.point, r.local, r.passing, r.total) for r in rows]
    else:
        taus = [float(t) for t in (opts["taus"] or "").split(",") if t.strip()]
        ts = tmax_chart(ch)
        local = ts(theta)
        table = [("P1", 0.0, ch.eval(theta), local, Interval(0.0), local)]
        if taus:
            traj = extend_manifold(ch, theta, max(taus), stops=sorted(taus)[:-1], order=opts["order"])
            snaps = dict(traj.snapshots)
            snaps.setdefault(max(taus), (traj.tau, traj.final_box))
            for i, tau in enumerate(sorted(taus)):
                box = snaps[tau][1]
                table.append((f"P{i + 2}", tau, list(box.intervals()[:field.n]), local,
                              box.interval(-1), local + box.interval(-1)))
        else:
            traj = None
    header = ["label", "tau"] + [f"x{i + 1}_{s}" for i in range(field.n) for s in ("lo", "hi")] + \
             ["local_lo", "local_hi", "passing_lo", "passing_hi", "total_lo", "total_hi", "width", "printed", "pass"]
    printed = EX1_PRINTED_TMAX if field.name == "example1" and not opts["taus"] else {}
    csv_rows, failed = [], []
    for lab, tau, pt, loc, pas, tot in table:
        ref = printed.get(lab)
        verdict = "" if ref is None else ("PASS" if tot.intersects(ref) else "FAIL")
        if verdict == "FAIL":
            failed.append(lab)
        csv_rows.append([lab, repr(tau)] + sum((_iv(x) for x in pt), []) + _iv(loc) + _iv(pas)
                        + _iv(tot) + [repr(tot.width), "" if ref is None else str(ref), verdict])
        _log(f"{lab}: t_max in {tot} {verdict}")
    _write_csv(out / "table.csv", header, csv_rows)
    if traj is not None:
        traj.to_csv(out / "trajectory.csv")
    (out / "chart.json").write_text(ch.to_json())
    return EXIT_FAILED if failed else EXIT_OK


def cmd_surface(opts):
    from .blowtime import tmax_chart, ValidityError
    from .compactify import horizon_value
    field = load_model(opts["model"])
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    eqs, failed = _verify_all(field, [opts["eq"]] if opts["eq"] else None)
    cands = [(k, e) for k, e in eqs.items() if e.on_horizon and e.stable_count]
    if not cands:
        _log("surface needs an equilibrium on the horizon with stable directions")
        return EXIT_FAILED
    name, eq = cands[0]
    ch = _chart_for(field, eq, opts, 30)
    ts = tmax_chart(ch)
    k = opts["grid"]
    grid = np.linspace(-1.0, 1.0, k)
    rows = []
    pts = np.array(np.meshgrid(*([grid] * ch.m), indexing="ij")).reshape(ch.m, -1).T
    for th in pts:
        x = ch.eval_float(th)
        theta = tuple(float(v) for v in th)
        try:
            t, status = ts(theta), "ok"
        except ValidityError:
            # enclosure of p^2c straddling 1: the cell sits on the horizon
            on_e = horizon_value(ch.eval(theta), field.spec).lo <= 1.0
            t, status = (ts.unchecked(theta), "horizon") if on_e else (None, "outside")
        vals = _iv(t) if t is not None else ["", ""]
        rows.append([*map(repr, th.tolist()), *map(repr, x.tolist()), *vals, status])
    header = [f"theta{i + 1}" for i in range(ch.m)] + [f"x{i + 1}" for i in range(ch.n)] + \
             ["tmax_lo", "tmax_hi", "status"]
    _write_csv(out / f"surface_{name}.csv", header, rows)
    (out / f"chart_{name}.json").write_text(ch.to_json())
    return EXIT_OK


def cmd_scan(opts):
    from .blowtime import separatrix_scan, scan_summary
    from .manifold import build_chart
    field = load_model(opts["model"])
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    names = [opts["sep_eq"], opts["sink_eq"], opts["global_eq"]]
    eqs, failed = _verify_all(field, names)
    if failed or len(eqs) < 3:
        _log(f"equilibrium verification failed: {failed or 'missing names'}")
        return EXIT_FAILED
    t0 = time.time()
    sep = build_chart(field, eqs[opts["sep_eq"]], N=opts["N"] or 100, inward=True)
    sink = build_chart(field, eqs[opts["sink_eq"]], N=30, inward=True)
    res, p, nrm = separatrix_scan(field, sep, sink, eqs[opts["global_eq"]], theta=1.0,
                                  n_points=opts["points"], dmin=opts["dmin"],
                                  dmax=opts["half_length"], T=opts["tau_max"])
    rows = []
    for r in res:
        t = _iv(r.tmax) if r.tmax is not None else ["", ""]
        rows.append([r.side, repr(r.distance), *t, r.outcome, r.steps, r.message])
    _write_csv(out / "scan.csv", ["side", "distance", "tmax_lo", "tmax_hi", "outcome", "steps",
                                  "message"], rows)
    summ = scan_summary(res)
    summ.update(point=p.tolist(), normal_r=nrm.tolist())
    (out / "scan_summary.json").write_text(json.dumps(summ, indent=1))
    _log(json.dumps(summ) + f" ({time.time() - t0:.1f} s)")
    ok = summ["r_ok"] and summ["l_ok"]
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {"chart": cmd_chart, "table": cmd_table, "surface": cmd_surface, "scan": cmd_scan}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        opts = resolve(args)
        if opts["model"] not in ("example1", "example2", "example3") and not os.path.isfile(opts["model"]):
            raise FileNotFoundError(f"model file not found: {opts['model']}")
        return COMMANDS[args.command](opts)
    except (FileNotFoundError, ModelError, ValueError) as exc:
        print(f"blowup: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
