"""Command-line front end: evaluate, search for deals, dualise, test properties, reproduce fixtures."""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np
from scipy.integrate import quad

from . import __version__
from .deals import deal_report
from .dual import classify, dual_value, quasiconvex_dual_value
from .errors import InstanceError
from .io import fixture_names, fixture_path, load_instance
from .properties import PROPERTIES, check_property
from .risk import SearchConfig, c_membership, extended, rho

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2
SIG_DIGITS = 12
REPRO_TRIALS = 200


# -- report formatting -------------------------------------------------------------------

def _round(obj):
    """Fix floats at 12 significant digits and make arrays and infinities JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            return extended(v) if not np.isnan(v) else "nan"
        return float(f"{v:.{SIG_DIGITS}g}") + 0.0
    return obj


def render(report):
    return json.dumps(_round(report), sort_keys=True, indent=1) + "\n"


def _emit(report, args, lines):
    # keep stdout machine-readable when the report goes there
    human = sys.stderr if args.json == "-" else sys.stdout
    for line in lines:
        print(line, file=human)
    if args.json:
        text = render(report)
        if args.json == "-":
            sys.stdout.write(text)
        else:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(text)


def _cfg(args):
    return SearchConfig(h=args.grid, seed=args.seed, tol=args.tol)


def _config_echo(args):
    return {"seed": args.seed, "tol": args.tol, "grid": args.grid}


def _fmt(v):
    v = extended(v)
    return v if isinstance(v, str) else f"{v:.10g}"


# -- helpers ----------------------------------------------------------------------------

def _resolve(source):
    """A path, or the name of a packaged fixture."""
    if source is None:
        raise InstanceError("--instance is required for this command", ())
    if source in fixture_names():
        return fixture_path(source)
    return source


def _positions(loaded, names):
    space = loaded.instance.space
    if not names:
        return dict(loaded.positions) or {"zero": np.zeros(space.size)}
    out = {}
    for name in names:
        if name in loaded.positions:
            out[name] = loaded.positions[name]
            continue
        try:
            vec = np.array([float(t) for t in name.split(",")])
        except ValueError:
            raise InstanceError(f"unknown position {name!r}", ("positions", name)) from None
        if vec.size != space.size:
            raise InstanceError(f"position has {vec.size} entries, the space has {space.size}",
                                ("positions", name))
        out[name] = vec
    return out


def integral_selftest(exponents=(0.25, 0.5, 1.0, 2.0, 3.5)):
    """Largest error of the quadrature of x w^(x-1) on [0, 1] against its exact value 1."""
    worst = 0.0
    for x in exponents:
        val, _ = quad(lambda w, x=x: x * w ** (x - 1), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
        worst = max(worst, abs(val - 1.0))
    return worst


# -- commands -----------------------------------------------------------------------------

def cmd_eval(args):
    loaded = load_instance(_resolve(args.instance))
    cfg = _cfg(args)
    results, lines = {}, []
    for name, X in _positions(loaded, args.position).items():
        rep = rho(loaded.instance, X, cfg)
        results[name] = dict(rep.to_dict(), position=X)
        lines.append(f"{name}: rho = {_fmt(rep.value)}  [{rep.status}, {rep.path}]")
    report = {"command": "eval", "instance": loaded.source, "config": _config_echo(args),
              "results": results}
    _emit(report, args, lines)
    everywhere_inf = all(r["value"] == "+inf" for r in results.values())
    return EXIT_DEGENERATE if everywhere_inf else EXIT_OK


def cmd_deals(args):
    loaded = load_instance(_resolve(args.instance))
    rep = deal_report(loaded.instance, _cfg(args))
    d = rep.to_dict()
    lines = [f"deal: {d['kind']}" + (f"  witness {d['witness']}" if d["witness"] else ""),
             f"L: {d['l_status']}" + (f"  witnesses {d['l_witnesses']}" if d["l_witnesses"] else ""),
             "sufficient conditions: " + ", ".join(f"{k}={d['sufficient_conditions'][k]}"
                                                   for k in ("i", "ii", "iii"))]
    report = {"command": "deals", "instance": loaded.source, "config": _config_echo(args), "results": d}
    _emit(report, args, lines)
    return EXIT_OK


def _domain_counts(inst, samples, seed):
    rng = np.random.default_rng(seed)
    W = rng.dirichlet(np.ones(inst.n_outcomes), size=samples)
    counts = {"in_B": 0, "in_D": 0, "in_B_str": 0, "in_D_str": 0}
    for w in W:
        for k, v in classify(inst, w).items():
            counts[k] += int(v)
    counts["sampled"] = samples
    return counts


def cmd_dual(args):
    loaded = load_instance(_resolve(args.instance))
    inst, cfg = loaded.instance, _cfg(args)
    results, lines = {}, []
    for name, X in _positions(loaded, args.position).items():
        primal = rho(inst, X, cfg)
        conv = dual_value(inst, X, cfg)
        entry = {"rho": extended(primal.value), "convex_dual": conv.to_dict(),
                 "convex_gap": extended(primal.value - conv.value)
                 if np.isfinite(primal.value) or np.isfinite(conv.value) else None}
        line = f"{name}: rho = {_fmt(primal.value)}  convex dual = {_fmt(conv.value)}"
        if conv.psi is not None and np.isfinite(conv.value):
            line += f"  psi = {np.round(conv.psi, 6).tolist()}"
        if not args.skip_quasiconvex:
            q = quasiconvex_dual_value(inst, X, cfg)
            entry["quasiconvex_dual"] = q.to_dict()
            line += f"  quasiconvex dual = {_fmt(q.value)}"
        results[name] = entry
        lines.append(line)
    counts = _domain_counts(inst, args.samples, args.seed)
    lines.append("sampled weights: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    report = {"command": "dual", "instance": loaded.source, "config": _config_echo(args),
              "results": results, "domain_counts": counts}
    _emit(report, args, lines)
    return EXIT_OK


def cmd_props(args):
    loaded = load_instance(_resolve(args.instance))
    props = args.property or list(PROPERTIES)
    results, lines = {}, []
    for p in props:
        v = check_property(loaded.instance, p, args.trials, args.seed, _cfg(args))
        results[p] = v.to_dict()
        note = "" if v.premise else f"  (premise not satisfied: {', '.join(v.premise_notes)})"
        lines.append(f"{p}: {v.result} after {v.trials} trials{note}")
    report = {"command": "props", "instance": loaded.source, "config": _config_echo(args),
              "trials": args.trials, "results": results}
    _emit(report, args, lines)
    return EXIT_OK


def _expected_value(v):
    return {"+inf": np.inf, "-inf": -np.inf}.get(v, v) if isinstance(v, str) else float(v)


def _close(a, b, tol):
    if np.isinf(a) or np.isinf(b):
        return a == b
    return abs(a - b) <= tol


def _vec_close(a, b, tol=1e-8):
    return a is not None and b is not None and np.allclose(a, b, atol=tol, rtol=0)


def _repro_one(loaded, cfg, trials):
    """Compare every stored expectation of one fixture; returns (checks, failures)."""
    inst, exp = loaded.instance, loaded.expected
    tol = exp.get("tol", 1e-6)
    checks = []

    def record(what, ok, expected, got):
        checks.append({"check": what, "ok": bool(ok), "expected": expected, "computed": got})

    for name, want in sorted(exp.get("rho", {}).items()):
        got = rho(inst, loaded.positions[name], cfg).value
        record(f"rho[{name}]", _close(got, _expected_value(want), tol), want, extended(got))
    for k, item in enumerate(exp.get("c_membership", [])):
        got = c_membership(inst, item["X"], item["m"], cfg)
        record(f"c_membership[{k}]", got == item["member"], item["member"], got)
    if "deals" in exp:
        d = deal_report(inst, cfg).to_dict()
        for key, want in sorted(exp["deals"].items()):
            got = d[key]
            if key == "witness":
                ok = _vec_close(got, want)
            elif key == "l_witnesses":
                ok = len(got) == len(want) and all(_vec_close(g, w) for g, w in zip(got, want))
            else:
                ok = got == want
            record(f"deals.{key}", ok, want, got)
    if "dual" in exp:
        spec = exp["dual"]
        rep = dual_value(inst, loaded.positions[spec["position"]], cfg)
        record("dual.value", _close(rep.value, spec["value"], spec.get("tol", 1e-4)), spec["value"],
               extended(rep.value))
        if "psi" in spec:
            record("dual.psi", _vec_close(rep.psi, spec["psi"], spec.get("tol", 1e-6)), spec["psi"],
                   None if rep.psi is None else rep.psi.tolist())
    for prop, want in sorted(exp.get("props", {}).items()):
        got = check_property(inst, prop, trials, cfg.seed, cfg).result
        record(f"props.{prop}", got == want, want, got)
    return checks


def cmd_repro(args):
    if args.instance:
        sources = [(s, _resolve(s)) for s in args.instance]
    else:
        names = args.only or fixture_names()
        unknown = sorted(set(names) - set(fixture_names()))
        if unknown:
            raise InstanceError(f"no packaged fixture named {unknown[0]!r}", ())
        sources = [(n, fixture_path(n)) for n in names]
    cfg = _cfg(args)
    results, lines, failed = {}, [], 0
    t0 = time.perf_counter()
    for label, src in sources:
        try:
            loaded = load_instance(src)
        except InstanceError as err:
            results[label] = {"load_error": str(err)}
            lines.append(f"{label}: LOAD ERROR {err}")
            failed += 1
            continue
        checks = _repro_one(loaded, cfg, args.trials)
        bad = [c for c in checks if not c["ok"]]
        failed += bool(bad)
        results[loaded.source] = {"checks": checks, "passed": not bad}
        lines.append(f"{loaded.source}: {len(checks) - len(bad)}/{len(checks)} checks pass")
        lines += [f"  MISMATCH {c['check']}: expected {c['expected']}, computed {c['computed']}" for c in bad]
    err = integral_selftest()
    results["integral_selftest"] = {"max_error": err, "passed": err <= 1e-10}
    failed += err > 1e-10
    lines.append(f"integral self-test: max error {err:.2e}")
    lines.append(f"{'all fixtures reproduce' if not failed else f'{failed} failure(s)'} "
                 f"in {time.perf_counter() - t0:.1f}s")
    report = {"command": "repro", "config": _config_echo(args), "trials": args.trials, "results": results}
    _emit(report, args, lines)
    return EXIT_INPUT if failed else EXIT_OK


COMMANDS = {"eval": cmd_eval, "deals": cmd_deals, "dual": cmd_dual, "props": cmd_props, "repro": cmd_repro}


def build_parser():
    parser = argparse.ArgumentParser(prog="frictional-risk",
                                     description="Capital requirements with trading frictions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9, help="solver tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for every randomised step")
    common.add_argument("--grid", type=float, default=2.0**-6, help="grid step of the global search")
    common.add_argument("--json", metavar="PATH", help="write the machine report here ('-' for stdout)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("eval", "evaluate rho at named positions"),
                        ("deals", "search for acceptable and scalable deals"),
                        ("dual", "dual representations and domain counts"),
                        ("props", "randomised property checks"),
                        ("repro", "re-run the fixture corpus against stored values")]:
        p = sub.add_parser(name, parents=[common], help=help_)
        if name == "repro":
            p.add_argument("--instance", action="append", help="fixture file(s) instead of the corpus")
            p.add_argument("--only", action="append", help="restrict to these packaged fixtures")
            p.add_argument("--trials", type=int, default=REPRO_TRIALS)
        else:
            p.add_argument("--instance", required=True, help="instance file or packaged fixture name")
        if name in ("eval", "dual"):
            p.add_argument("--position", action="append",
                           help="position name from the file, or comma-separated values")
        if name == "dual":
            p.add_argument("--samples", type=int, default=200, help="weights sampled for domain counts")
            p.add_argument("--skip-quasiconvex", action="store_true")
        if name == "props":
            p.add_argument("--property", action="append", choices=PROPERTIES)
            p.add_argument("--trials", type=int, default=500)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InstanceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
