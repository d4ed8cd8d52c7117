"""Command-line front end.

Subcommands: volume, integrate, norm, catalog, verify.  Reports are
emitted as JSON (schema "hq/1", floats at 17 significant digits so
identical runs are byte-identical), CSV (integrate traces), or text.
Exit codes: 0 success, 1 computation failure, 2 usage error.
"""

import argparse
import sys

from . import catalog as cat, expr, normspace, verify as verify_mod
from .config import INTEGRATE_DEFAULTS, VOLUME_DEFAULTS
from .errors import HilbertCubeError, ParseError
from .funcspace import CoordinateFunction, SampleBudget, \
    check_truncation_cauchy
from .integrator import integrate
from .rectangle import from_selector, volume

SCHEMA = "hq/1"


# --------------------------------------------------------------------------
# Deterministic JSON (17 significant digits, fixed key order)
# --------------------------------------------------------------------------

def _json(obj):
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if obj != obj:
            return "NaN"
        if obj in (float("inf"), float("-inf")):
            return '"Infinity"' if obj > 0 else '"-Infinity"'
        return format(obj, ".17g")
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(obj, dict):
        inner = ", ".join(f"{_json(str(k))}: {_json(v)}"
                          for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json(v) for v in obj) + "]"
    return _json(str(obj))


def emit(payload, args):
    text = _json({"schema": SCHEMA, **payload}) \
        if args.format == "json" else None
    if args.format == "text":
        text = "\n".join(f"{k}: {v}" for k, v in payload.items())
    if args.format == "csv":
        trace = payload.get("trace") or []
        lines = ["n,I_n,delta"]
        prev = None
        for n, v in trace:
            d = "" if prev is None else format(abs(v - prev), ".17g")
            lines.append(f"{n},{format(v, '.17g')},{d}")
            prev = v
        text = "\n".join(lines)
    out = sys.stdout
    if args.out:
        out = open(args.out, "w")
    try:
        out.write(text + "\n")
    finally:
        if args.out:
            out.close()


def _integrand(spec_text, rect, force=False):
    if spec_text.startswith("catalog:"):
        return cat.integrand(spec_text[len("catalog:"):], rect)
    if spec_text in cat.integrand_names() or spec_text.startswith("const:"):
        return cat.integrand(spec_text, rect)
    ast = expr.parse(spec_text)
    return CoordinateFunction(ast, rect, None, False, None, None, spec_text)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_volume(args):
    rect = from_selector(args.rect)
    cfg = VOLUME_DEFAULTS.with_(tol=args.tol or VOLUME_DEFAULTS.tol,
                                max_terms=args.max_terms
                                or VOLUME_DEFAULTS.max_terms)
    rep = volume(rect, cfg)
    emit({"value": rep.value, "classification": rep.classification,
          "n_terms": rep.n_terms, "residual": rep.residual}, args)
    return 0 if rep.classification == "nondegenerate" or \
        rep.classification == "degenerate" else 1


def cmd_integrate(args):
    rect = from_selector(args.rect)
    cfg = INTEGRATE_DEFAULTS.with_(
        tol=args.tol or INTEGRATE_DEFAULTS.tol,
        seed=args.seed if args.seed is not None else INTEGRATE_DEFAULTS.seed,
        max_dims=args.dims or INTEGRATE_DEFAULTS.max_dims)
    f = _integrand(args.f, rect, force=args.force)
    res = integrate(f, rect, cfg, engine=args.engine, force=args.force)
    emit({"value": res.value, "n_dims": res.n_dims_used,
          "engine": res.engine, "error_estimate": res.error_estimate,
          "stderr": res.stderr, "status": res.status,
          "trace": [[n, v] for n, v in res.trace]}, args)
    return 0 if res.status in ("converged", "degenerate_zero") else 1


def cmd_norm(args):
    rect = from_selector(args.rect)
    f = _integrand(args.f, rect)
    cfg = INTEGRATE_DEFAULTS.with_(tol=args.tol or INTEGRATE_DEFAULTS.tol)
    res = normspace.norm(f, args.p, cfg)
    emit({"p": res.p, "value": res.value,
          "status": res.integral.status,
          "error_estimate": res.integral.error_estimate}, args)
    return 0 if res.integral.status in ("converged", "degenerate_zero") \
        else 1


def cmd_catalog(args):
    rects = cat.rectangles()
    if args.show:
        name = args.show
        if name in rects:
            rep = volume(rects[name])
            emit({"name": name, "kind": "rectangle",
                  "volume": rep.value,
                  "classification": rep.classification}, args)
            return 0
        rect = rects["unit"]
        f = cat.integrand(name, rect)
        res = integrate(f, rect, INTEGRATE_DEFAULTS)
        emit({"name": name, "kind": "integrand",
              "formula": cat.describe(name),
              "bound_on_unit_cube": f.bound,
              "integral_on_unit_cube": res.value}, args)
        return 0
    emit({"rectangles": sorted(rects),
          "integrands": cat.integrand_names()}, args)
    return 0


def cmd_verify(args):
    budget = SampleBudget(points=args.points)
    if args.suite == "cauchy" and args.f:
        rect = from_selector(args.rect)
        f = _integrand(args.f, rect)
        rep = check_truncation_cauchy(f, budget, label=f.label)
        emit(rep.as_dict(), args)
        return 0 if rep.verdict != "fail" else 1
    if args.suite == "all":
        results, elapsed = verify_mod.verify_all(budget)
    else:
        suite_fn = {"cauchy": lambda: verify_mod.verify_cauchy(budget),
                    "norms": verify_mod.verify_norms,
                    "integrals": verify_mod.verify_integrals,
                    "rectangles": verify_mod.verify_rectangles}[args.suite]
        import time
        t0 = time.monotonic()
        results = suite_fn()
        elapsed = time.monotonic() - t0
    ok = all(r.passed for r in results)
    if args.format == "text":
        for r in results:
            line = f"[{'PASS' if r.passed else 'FAIL'}] {r.suite}.{r.name}"
            print(line)
        print(f"{sum(r.passed for r in results)}/{len(results)} checks "
              f"passed in {elapsed:.1f}s")
    else:
        emit({"passed": ok, "elapsed_seconds": elapsed,
              "checks": [r.as_dict() for r in results]}, args)
    return 0 if ok else 1


# --------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="hq",
        description="Integration over infinite-dimensional rectangles "
                    "by truncation limits.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, fmt=("json", "text")):
        sp.add_argument("--format", choices=fmt, default="json")
        sp.add_argument("--out", default=None)
        sp.add_argument("--tol", type=float, default=None)

    sp = sub.add_parser("volume", help="classify a rectangle's volume")
    sp.add_argument("--rect", required=True)
    sp.add_argument("--max-terms", type=int, default=None, dest="max_terms")
    common(sp)
    sp.set_defaults(fn=cmd_volume)

    sp = sub.add_parser("integrate", help="integrate over a rectangle")
    sp.add_argument("--f", required=True,
                    help="expression or catalog:<name>")
    sp.add_argument("--rect", required=True)
    sp.add_argument("--engine", choices=("auto", "analytic", "quad", "mc"),
                    default="auto")
    sp.add_argument("--dims", type=int, default=None,
                    help="truncation-dimension ladder cap")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--force", action="store_true",
                    help="integrate unbounded integrands off the unit cube")
    common(sp, fmt=("json", "csv", "text"))
    sp.set_defaults(fn=cmd_integrate)

    sp = sub.add_parser("norm", help="p-norm on the unit cube")
    sp.add_argument("--f", required=True)
    sp.add_argument("--p", type=float, default=1.0)
    sp.add_argument("--rect", default="unit")
    common(sp)
    sp.set_defaults(fn=cmd_norm)

    sp = sub.add_parser("catalog", help="list or show built-ins")
    sp.add_argument("--show", default=None)
    common(sp)
    sp.set_defaults(fn=cmd_catalog)

    sp = sub.add_parser("verify", help="run property suites")
    sp.add_argument("suite", choices=("cauchy", "norms", "integrals",
                                      "rectangles", "all"))
    sp.add_argument("--f", default=None,
                    help="single integrand for 'verify cauchy'")
    sp.add_argument("--rect", default="unit")
    sp.add_argument("--points", type=int, default=4096)
    common(sp)
    sp.set_defaults(fn=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except HilbertCubeError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
