"""Executable property suites over the built-in catalog.

Each check returns a CheckResult with a pass flag and enough detail to
debug a failure (witness points, both sides of an inequality, ...).
`hq verify all` runs every suite; exit code 0 means everything passed.

Analytic identities run at tight tolerance; checks that lean on the
sampling engines (triangle inequality on sign-changing integrands,
distance transitivity, ...) use a coarse budget commensurate with
Monte Carlo noise, as recorded in each check's detail dict.
"""

import time
from dataclasses import dataclass
from math import factorial, pi

import numpy as np

from . import catalog, normspace, structure as struct_mod
from .config import ConvergenceConfig
from .errors import HilbertCubeError
from .funcspace import (SampleBudget, TruncationSequence, as_sequence,
                        check_truncation_cauchy, check_truncation_uniform,
                        combine_abs, combine_scale, combine_sum,
                        compose_lipschitz, restricted, sample_points,
                        truncated)
from .integrator import (check_bound, check_partial_integration,
                         check_uniqueness, integrate,
                         monte_carlo_truncated)
from .rectangle import (NONDEGENERATE, TailRule, ConvergentRectangle,
                        builtin_catalog, tail_product_bound, volume,
                        wallis_rectangle)

__all__ = ["CheckResult", "verify_cauchy", "verify_integrals",
           "verify_norms", "verify_rectangles", "verify_all"]

# Tight budget for analytic identities, coarse one for sampled checks,
# and an extra-tight one for the gap checks that need 1e-9 headroom.
CFG_ANALYTIC = ConvergenceConfig(tol=1e-6)
CFG_SAMPLED = ConvergenceConfig(tol=1e-2, mc_samples=2**16, quad_max_dims=6,
                                max_dims=32)
CFG_TIGHT = ConvergenceConfig(tol=3e-7, max_dims=2**24)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    details: dict

    def as_dict(self):
        return {"suite": self.suite, "name": self.name,
                "passed": self.passed, "details": self.details}


def _catalog_on_default_rects():
    rects = builtin_catalog()
    return [
        catalog.integrand("wallis-sum", rects["wallis"]),
        catalog.integrand("sec9-ex1", rects["unit"]),
        catalog.integrand("sec9-ex2", rects["unit"]),
    ]


def _unit_functions():
    unit = builtin_catalog()["unit"]
    return [
        catalog.integrand("wallis-sum", unit),
        catalog.integrand("sec9-ex1", unit),
        catalog.integrand("sec9-ex2", unit),
        catalog.integrand("const:0.8", unit),
    ]


# --------------------------------------------------------------------------
# Rectangle properties
# --------------------------------------------------------------------------

def verify_rectangles():
    out = []
    rects = builtin_catalog()

    # tail products approach 1: for every eps a ladder level works
    for name in ("unit", "wallis"):
        rect = rects[name]
        rows = []
        ok = True
        for eps in (1e-1, 1e-2, 1e-3):
            found = None
            for npow in range(0, 14):
                n = 2**npow + 1
                worst = max(tail_product_bound(rect, n, m)
                            for m in (n, 2 * n, 4 * n, 8 * n))
                if worst < eps:
                    found = n
                    break
            rows.append({"eps": eps, "n_found": found})
            ok = ok and found is not None
        out.append(CheckResult("rectangle", f"tail-products-shrink[{name}]",
                               ok, {"rows": rows}))

    # representation invariance: peeling bounds off the front leaves
    # vol = (peeled product) * vol(remaining-tail rectangle)
    w = rects["wallis"]
    moved = float(np.prod([w.upper(i) for i in (1, 2, 3)]))
    remaining = ConvergentRectangle(
        tail=TailRule.from_source("4*(i+3)^2/(4*(i+3)^2 - 1)"),
        name="wallis-from-4")
    v_direct = volume(w).value
    v_rebuilt = moved * volume(remaining, ConvergenceConfig(tol=1e-6)).value
    ok = abs(v_direct - v_rebuilt) <= 1e-5 * max(1.0, abs(v_direct))
    out.append(CheckResult("rectangle", "prefix-representation-invariance",
                           ok, {"direct": v_direct, "rebuilt": v_rebuilt}))

    # analytic tail value vs numerically accumulated counterpart
    cfg = ConvergenceConfig(tol=1e-6)
    numeric = ConvergentRectangle(prefix=w.prefix,
                                  tail=TailRule(formula=w.tail.formula),
                                  name="wallis-numeric")
    v_num = volume(numeric, cfg)
    ok = (v_num.classification == NONDEGENERATE
          and abs(v_num.value - pi / 2) <= 10 * cfg.tol * (pi / 2))
    out.append(CheckResult("rectangle", "analytic-vs-numeric-volume", ok,
                           {"numeric": v_num.value, "analytic": pi / 2,
                            "n_terms": v_num.n_terms}))
    return out


# --------------------------------------------------------------------------
# Truncation-convergence properties
# --------------------------------------------------------------------------

def verify_cauchy(budget: SampleBudget = SampleBudget()):
    out = []
    for f in _catalog_on_default_rects():
        seq = TruncationSequence(f)
        rc = check_truncation_cauchy(seq, budget, label=f.label)
        ru = check_truncation_uniform(seq, budget, label=f.label)
        agree = rc.verdict == ru.verdict
        out.append(CheckResult(
            "cauchy", f"cauchy-uniform-agreement[{f.label}]",
            agree and rc.verdict != "fail",
            {"cauchy": rc.verdict, "uniform": ru.verdict,
             "per_eps_cauchy": [e.verdict for e in rc.entries],
             "per_eps_uniform": [e.verdict for e in ru.entries]}))

    # constructed counterexample: a shift alternating along the doubling
    # ladder (f, f+1, f, f+1, ...) never settles; unit gap witnessed
    rects = builtin_catalog()
    f = catalog.integrand("wallis-sum", rects["wallis"])
    bad = TruncationSequence(f, shift_fn=lambda n: float(n.bit_length() % 2))
    rb = check_truncation_cauchy(bad, budget, label="alternating")
    wit = next((e.witness for e in rb.entries if e.verdict == "fail"), None)
    out.append(CheckResult(
        "cauchy", "alternating-counterexample-fails",
        rb.verdict == "fail" and wit is not None
        and abs(wit["gap"] - 1.0) < 1e-2,
        {"verdict": rb.verdict, "witness": wit}))

    # displayed tail bound for the wallis sum: gaps <= (4/3) sum 1/i^2
    w = rects["wallis"]
    pts = sample_points(w, 512, 64)
    seq = TruncationSequence(catalog.integrand("wallis-sum", w))
    tailp = w.tail_provider()
    ok = True
    rows = []
    for (m, n) in ((4, 16), (16, 64), (8, 512)):
        vm = truncated(seq, m).eval_batch(pts, tail=tailp)
        vn = truncated(seq, n).eval_batch(pts, tail=tailp)
        gap = float(np.max(np.abs(vn - vm)))
        bnd = (4.0 / 3.0) * float(np.sum(1.0 / np.arange(m + 1, n + 1) ** 2))
        rows.append({"m": m, "n": n, "max_gap": gap, "bound": bnd})
        ok = ok and gap <= bnd * (1 + 1e-12)
    out.append(CheckResult("cauchy", "wallis-sum-gap-bound", ok,
                           {"rows": rows}))

    # consistency of the two truncation views on padded points
    for f in _catalog_on_default_rects():
        seq = TruncationSequence(f)
        rect = f.domain
        pts = sample_points(rect, 256, 32)
        ok = True
        for n in (1, 3, 8, 32):
            full = truncated(seq, n).eval_batch(pts)
            box = restricted(seq, n).eval_batch(pts[:, :n])
            if not np.array_equal(full, box):
                ok = False
        out.append(CheckResult("cauchy", f"padded-vs-box-view[{f.label}]",
                               ok, {"dims_checked": [1, 3, 8, 32]}))

    # abs contracts gaps pointwise: | |u| - |v| | <= |u - v| on the
    # sampled truncations of a sign-changing sequence
    f = catalog.integrand("wallis-sum", rects["wallis"])
    base = combine_sum(TruncationSequence(
        catalog.integrand("const:-0.5", rects["wallis"])),
        TruncationSequence(f, shift_fn=lambda n: (-0.5) ** n))
    pts = sample_points(rects["wallis"], 256, 64)
    worst = 0.0
    for (m, n) in ((2, 8), (8, 64)):
        vm = truncated(base, m).eval_batch(pts)
        vn = truncated(base, n).eval_batch(pts)
        worst = max(worst, float(np.max(np.abs(np.abs(vn) - np.abs(vm))
                                        - np.abs(vn - vm))))
    out.append(CheckResult("cauchy", "abs-contracts-gaps", worst <= 1e-12,
                           {"worst_excess": worst}))

    # combine_abs on a regular sign-changing function matches |f|
    shifted = combine_sum(f, catalog.integrand("const:-0.75",
                                               rects["wallis"]))
    av = combine_abs(shifted)
    va = av.limit.eval_batch(pts)
    vs = shifted.limit.eval_batch(pts)
    out.append(CheckResult("cauchy", "abs-values-match",
                           bool(np.array_equal(va, np.abs(vs))), {}))

    # Lipschitz composition contracts gaps by the modulus
    u = rects["unit"]
    inner = catalog.integrand("wallis-sum", u)
    g2 = compose_lipschitz(lambda t: 2.0 * t, 2.0,
                           TruncationSequence(inner), label="2t")
    pts = sample_points(u, 256, 64)
    ok = True
    for (m, n) in ((2, 16), (16, 128)):
        g0 = np.abs(truncated(TruncationSequence(inner), n).eval_batch(pts)
                    - truncated(TruncationSequence(inner), m).eval_batch(pts))
        g1 = np.abs(truncated(g2, n).eval_batch(pts)
                    - truncated(g2, m).eval_batch(pts))
        if np.any(g1 > 2.0 * g0 + 1e-12):
            ok = False
    out.append(CheckResult("cauchy", "lipschitz-contracts-gaps", ok, {}))
    return out


# --------------------------------------------------------------------------
# Integral properties
# --------------------------------------------------------------------------

def verify_integrals():
    out = []
    rects = builtin_catalog()
    unit, wallis, half = (rects["unit"], rects["wallis"],
                          rects["degenerate_half"])
    cfg = CFG_ANALYTIC

    # additivity and homogeneity on structured pairs
    pairs = [
        (catalog.integrand("wallis-sum", wallis),
         catalog.integrand("const:1", wallis)),
        (catalog.integrand("sec9-ex1", unit),
         catalog.integrand("sec9-ex2", unit)),
    ]
    for fa, fb in pairs:
        va = integrate(fa, fa.domain, cfg).value
        vb = integrate(fb, fb.domain, cfg).value
        vs = integrate(combine_sum(fa, fb).limit, fa.domain, cfg).value
        ok = abs(vs - (va + vb)) <= 10 * cfg.tol * max(1.0, abs(va + vb))
        out.append(CheckResult(
            "integrals", f"additivity[{fa.label}+{fb.label}]", ok,
            {"sum_of_integrals": va + vb, "integral_of_sum": vs}))
    f = catalog.integrand("wallis-sum", wallis)
    v1 = integrate(f, wallis, cfg).value
    v2 = integrate(combine_scale(2.0, f).limit, wallis, cfg).value
    ok = abs(v2 - 2 * v1) <= 10 * cfg.tol * max(1.0, abs(2 * v1))
    out.append(CheckResult("integrals", "homogeneity[k=2]", ok,
                           {"k_integral": v2, "k_times_integral": 2 * v1}))

    z = integrate(catalog.integrand("const:0", wallis), wallis, cfg)
    out.append(CheckResult("integrals", "zero-function", z.value == 0.0,
                           {"value": z.value}))

    # positivity and monotonicity
    for f in _catalog_on_default_rects():
        v = integrate(f, f.domain, cfg).value
        out.append(CheckResult("integrals", f"positivity[{f.label}]",
                               v >= -10 * cfg.tol, {"value": v}))
    lo = catalog.integrand("const:0.5", unit)
    mid = catalog.integrand("sec9-ex1", unit)
    hi = catalog.integrand("const:1", unit)
    pts = sample_points(unit, 512, 32)
    dominated = bool(np.all(lo.eval_batch(pts) <= mid.eval_batch(pts))
                     and np.all(mid.eval_batch(pts) <= hi.eval_batch(pts)))
    vlo = integrate(lo, unit, cfg).value
    vmid = integrate(mid, unit, cfg).value
    vhi = integrate(hi, unit, cfg).value
    ok = dominated and vlo <= vmid + 10 * cfg.tol and \
        vmid <= vhi + 10 * cfg.tol
    out.append(CheckResult("integrals", "monotonicity-chain", ok,
                           {"values": [vlo, vmid, vhi],
                            "sampled_dominance": dominated}))

    # |integral| <= integral of |f| on a sign-changing integrand
    scfg = CFG_SAMPLED
    fsum = catalog.integrand("wallis-sum", unit)
    shiftd = combine_sum(fsum, catalog.integrand("const:-0.75", unit))
    vf = integrate(shiftd.limit, unit, scfg)
    vabs = integrate(combine_abs(shiftd).limit, unit, scfg)
    ok = abs(vf.value) <= vabs.value + 10 * scfg.tol
    out.append(CheckResult("integrals", "triangle-inequality", ok,
                           {"abs_of_integral": abs(vf.value),
                            "integral_of_abs": vabs.value,
                            "tol": scfg.tol}))

    # declared-bound inequality
    rows = []
    ok = True
    for f, rect in ((catalog.integrand("wallis-sum", wallis), wallis),
                    (catalog.integrand("const:1", unit), unit),
                    (catalog.integrand("const:-1", unit), unit)):
        rep = check_bound(f, rect, cfg)
        rows.append({"f": f.label, "integral": rep.integral.value,
                     "bound_times_volume": rep.bound_times_volume,
                     "holds": rep.holds})
        ok = ok and rep.holds
    out.append(CheckResult("integrals", "bound-times-volume", ok,
                           {"rows": rows}))

    # engine cross-validation at matched truncation dimension
    for name in ("sec9-ex1", "sec9-ex2"):
        f = catalog.integrand(name, unit)
        n = 12
        exact = struct_mod.truncated_integral(f.structure, unit, n)
        mc_cfg = ConvergenceConfig(seed=20260809)
        mc, se = monte_carlo_truncated(restricted(as_sequence(f), n)
                                       .eval_batch, unit, n, mc_cfg)
        ok = abs(mc - exact) <= 3.0 * se
        out.append(CheckResult(
            "integrals", f"engine-cross-validation[{name}]", ok,
            {"n_dims": n, "analytic": exact, "monte_carlo": mc,
             "stderr": se, "z": (mc - exact) / se if se else 0.0}))

    # vanishing on the degenerate rectangle, with trace envelope
    for name in ("wallis-sum", "sec9-ex1", "sec9-ex2", "const:1"):
        f = catalog.integrand(name, half)
        res = integrate(f, half, cfg)
        m = f.bound
        env_ok = all(abs(v) <= (m + 1.0) * 0.5**n for n, v in res.trace)
        out.append(CheckResult(
            "integrals", f"degenerate-zero[{name}]",
            res.status == "degenerate_zero" and res.value == 0.0 and env_ok,
            {"trace": [[n, v] for n, v in res.trace], "bound": m}))

    # sequence-independence of the value
    f = catalog.integrand("wallis-sum", wallis)
    reg = TruncationSequence(f)
    pert = TruncationSequence(f, shift_fn=lambda n: 2.0**-n)
    scaled = TruncationSequence(f, scale_fn=lambda n: 1.0 + 1.0 /
                                factorial(min(n, 170)))
    g1 = check_uniqueness(reg, pert, wallis, CFG_TIGHT)
    g2 = check_uniqueness(reg, scaled, wallis, CFG_TIGHT)
    out.append(CheckResult("integrals", "sequence-independence",
                           g1 < 1e-6 and g2 < 1e-6,
                           {"shift_gap": g1, "scale_gap": g2}))

    # integrating out leading coordinates preserves the value
    uf = catalog.integrand("wallis-sum", unit)
    rows = []
    ok = True
    for r in (1, 2, 3):
        rep = check_partial_integration(uf, r, CFG_TIGHT, engine="analytic")
        rows.append({"r": r, "gap": rep.gap})
        ok = ok and rep.gap < 1e-9
    cgap = check_partial_integration(catalog.integrand("const:2.5", unit),
                                     2, cfg).gap
    out.append(CheckResult("integrals", "partial-integration-invariance",
                           ok and cgap == 0.0,
                           {"rows": rows, "const_gap": cgap}))
    return out


# --------------------------------------------------------------------------
# Norm properties
# --------------------------------------------------------------------------

def verify_norms():
    out = []
    cfg = CFG_ANALYTIC
    funcs = _unit_functions()
    rep = normspace.check_norm_axioms(funcs, cfg)
    out.append(CheckResult("norms", "norm-axioms", rep["passed"], rep))

    unit = builtin_catalog()["unit"]
    f = catalog.integrand("wallis-sum", unit)
    g = catalog.integrand("const:0.8", unit)
    h = catalog.integrand("sec9-ex1", unit)
    scfg = CFG_SAMPLED

    refl = normspace.equivalent(f, f, scfg)
    dfg = normspace.equivalent(f, g, scfg)["distance"]
    dgf = normspace.equivalent(g, f, scfg)["distance"]
    dfh = normspace.equivalent(f, h, scfg)["distance"]
    dgh = normspace.equivalent(g, h, scfg)["distance"]
    ok = (refl["equivalent"] and refl["distance"] == 0.0
          and dfg == dgf
          and dfh <= dfg + dgh + 10 * scfg.tol)
    out.append(CheckResult("norms", "equivalence-relation", ok,
                           {"reflexive_distance": refl["distance"],
                            "d(f,g)": dfg, "d(g,f)": dgf,
                            "d(f,h)": dfh, "d(g,h)": dgh,
                            "tol": scfg.tol}))

    # zero distance forces equal norms
    eps_shift = combine_sum(f, catalog.integrand("const:1e-9", unit))
    n1 = normspace.norm(f, 1.0, cfg).value
    n2 = normspace.norm(eps_shift.limit, 1.0, cfg).value
    d = normspace.equivalent(f, eps_shift.limit, cfg)["distance"]
    ok = d <= cfg.tol and abs(n1 - n2) <= 10 * cfg.tol
    out.append(CheckResult("norms", "zero-distance-equal-norms", ok,
                           {"distance": d, "norm_gap": abs(n1 - n2)}))

    # p-monotonicity on the probability cube
    rows = []
    ok = True
    for fn in funcs[:3]:
        use = cfg if fn.structure is not None and \
            struct_mod.square_structure(fn.structure) is not None else \
            CFG_SAMPLED
        v1 = normspace.norm(fn, 1.0, use).value
        v2 = normspace.norm(fn, 2.0, use).value
        rows.append({"f": fn.label, "p1": v1, "p2": v2})
        ok = ok and v1 <= v2 + 10 * use.tol
    out.append(CheckResult("norms", "p-monotonicity", ok, {"rows": rows}))
    return out


# --------------------------------------------------------------------------
# Umbrella
# --------------------------------------------------------------------------

def verify_all(budget: SampleBudget = SampleBudget()):
    """Run every suite; returns (results, elapsed_seconds)."""
    t0 = time.monotonic()
    results = []
    for fn in (verify_rectangles, lambda: verify_cauchy(budget),
               verify_integrals, verify_norms):
        try:
            results.extend(fn())
        except HilbertCubeError as e:
            results.append(CheckResult("harness", type(e).__name__, False,
                                       {"error": str(e)}))
    return results, time.monotonic() - t0
