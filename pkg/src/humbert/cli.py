"""Command-line front end: ``humbert <verb> ...``.

Verbs: eval, compare, asym, identities, constraint, sweep.  Output is JSON
(with ``"schema": 1``) or headered CSV; floats are printed with 17
significant digits.  Exit status: 0 on success, 1 when an evaluation fails
or a requested residual threshold is missed, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from typing import Any, Callable, Sequence

import numpy as np

from . import asymptotics, euler_reps, laplace_bridge, series_core, spherical_model
from .errors import DomainError, HumbertError
from .types import FAMILY_FIELDS, EvalPoint, Family, ParamSet, ValueEstimate

SCHEMA = 1
PARAM_FLAGS = ("alpha", "alpha_p", "beta", "beta_p", "gamma", "gamma_p", "lam")
ROUTES = ("series", "oracle", "euler", "ilt", "asym")


class UsageError(Exception):
    pass


class EvalFailure(Exception):
    def __init__(self, operation: str, err: Exception):
        super().__init__(f"{operation}: {type(err).__name__}: {err}")
        self.operation = operation


# ---------------------------------------------------------------------------
# formatting


def fmt_float(v: float) -> str:
    if v is None:
        return "null"
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    s = format(v, ".17g")
    return s if any(c in s for c in ".eEn") else s + ".0"


def to_json(obj: Any, indent: int | None = 0) -> str:
    """JSON text with floats at 17 significant digits; ``indent=None`` gives one line."""
    if isinstance(obj, np.bool_):
        obj = bool(obj)
    if isinstance(obj, bool) or obj is None:
        return "true" if obj is True else ("false" if obj is False else "null")
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if indent is None:
        if isinstance(obj, dict):
            return "{" + ", ".join(f"{to_json(str(k))}: {to_json(v, None)}" for k, v in obj.items()) + "}"
        if isinstance(obj, (list, tuple)):
            return "[" + ", ".join(to_json(v, None) for v in obj) + "]"
    pad, inner = "  " * (indent or 0), "  " * ((indent or 0) + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}{to_json(str(k))}: {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(to_json(v, None) for v in obj) + "]"
    try:
        return fmt_float(float(obj))
    except (TypeError, ValueError):
        return to_json(str(obj))


def to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else ("" if v is None else v) for v in r])
    return buf.getvalue()


def emit(doc: dict, fmt: str, header: Sequence[str] | None = None, rows: Sequence[Sequence[Any]] | None = None) -> str:
    if fmt == "csv":
        if header is None:
            header = list(doc.keys())
            rows = [[doc[k] if not isinstance(doc[k], (list, dict)) else to_json(doc[k], None) for k in header]]
        return to_csv(header, rows or [])
    return to_json({"schema": SCHEMA, **doc}) + "\n"


# ---------------------------------------------------------------------------
# shared argument handling


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", required=True, help="phi2, phi3, xi1, xi2, f3, phi2i, phi3i, f2, psi1, psi2")
    for name in PARAM_FLAGS:
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=float)


def _add_point(p: argparse.ArgumentParser, grid: bool = False) -> None:
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    if not grid:
        p.add_argument("--t", type=float, default=1.0)


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _params(ns: argparse.Namespace) -> ParamSet:
    try:
        fam = Family.parse(ns.family)
    except ValueError as e:
        raise UsageError(str(e)) from None
    kw = {k: getattr(ns, k) for k in FAMILY_FIELDS[fam] if getattr(ns, k, None) is not None}
    if fam in (Family.Phi2i, Family.Phi3i):
        kw.setdefault("lam", 1.0)
    extra = [k for k in PARAM_FLAGS if getattr(ns, k, None) is not None and k not in FAMILY_FIELDS[fam]]
    if extra:
        raise UsageError(f"{fam.value} does not take {', '.join(extra)}")
    try:
        return ParamSet.make(fam, **kw)
    except (TypeError, ValueError) as e:
        if isinstance(e, HumbertError):
            raise EvalFailure("params", e) from None
        raise UsageError(str(e)) from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _estimate_doc(est: ValueEstimate) -> dict:
    return est.as_dict()


def _route_eval(route: str, params: ParamSet, pt: EvalPoint, variant: str | None = None) -> ValueEstimate:
    if route == "series":
        return series_core.eval_series(params, pt)
    if route == "oracle":
        return series_core.eval_oracle(params, pt)
    if route == "euler":
        return euler_reps.eval_euler(params, pt)
    if route == "ilt":
        return laplace_bridge.eval_ilt(params, pt)
    if route == "asym":
        return asymptotics.asym_value(params, pt.x, pt.y, pt.t, variant or "corrected").estimate
    raise UsageError(f"unknown route {route!r}")


def _default_routes(params: ParamSet) -> list[str]:
    if params.family in (Family.F2, Family.Psi1, Family.Psi2):
        return ["series", "oracle", "euler"]
    return ["series", "oracle", "euler", "ilt"]


# ---------------------------------------------------------------------------
# verbs; each returns (text, ok)


def cmd_eval(ns) -> tuple[str, bool]:
    params = _params(ns)
    pt = EvalPoint(ns.x, ns.y, ns.t)
    try:
        est = _route_eval(ns.route, params, pt, ns.variant)
    except HumbertError as e:
        raise EvalFailure(f"eval/{ns.route}", e) from None
    doc = {"family": params.family.value, "params": params.as_dict(), "x": pt.x, "y": pt.y, "t": pt.t,
           "route": ns.route, **_estimate_doc(est)}
    return emit(doc, ns.format), True


def cmd_compare(ns) -> tuple[str, bool]:
    params = _params(ns)
    pt = EvalPoint(ns.x, ns.y, ns.t)
    routes = ns.routes.split(",") if ns.routes else _default_routes(params)
    vals: dict[str, ValueEstimate] = {}
    skipped: dict[str, str] = {}
    for r in routes:
        try:
            vals[r] = _route_eval(r, params, pt)
        except DomainError as e:
            skipped[r] = str(e)
        except HumbertError as e:
            raise EvalFailure(f"compare/{r}", e) from None
    pairs = []
    worst = 0.0
    for a, b in itertools.combinations(vals, 2):
        va, vb = vals[a].value, vals[b].value
        dev = abs(va - vb) / max(abs(va), abs(vb), 1e-300)
        worst = max(worst, dev)
        pairs.append({"a": a, "b": b, "rel_dev": dev})
    ok = ns.threshold is None or worst <= ns.threshold
    if ns.format == "csv":
        rows = [[r, vals[r].value, vals[r].abs_err, ""] for r in vals] + [[r, None, None, why] for r, why in skipped.items()]
        return to_csv(["route", "value", "abs_err", "skipped"], rows), ok
    doc = {"family": params.family.value, "params": params.as_dict(), "x": pt.x, "y": pt.y, "t": pt.t,
           "routes": {r: _estimate_doc(v) for r, v in vals.items()}, "skipped": skipped,
           "pairs": pairs, "max_rel_dev": worst}
    return emit(doc, ns.format), ok


def cmd_asym(ns) -> tuple[str, bool]:
    params = _params(ns)
    grid = _floats(ns.t_grid)
    try:
        probe = asymptotics.ratio_probe(params, ns.x, ns.y, grid, variant=ns.variant, crest=not ns.no_crest)
    except HumbertError as e:
        raise EvalFailure("asym", e) from None
    if ns.format == "csv":
        return probe.to_csv(), True
    rows = [{"t": t, "exact": None if e is None else float(e), "asym": float(a), "ratio": r}
            for t, e, a, r in zip(probe.t_grid, probe.exact, probe.asym, probe.ratios)]
    doc = {"family": params.family.value, "params": params.as_dict(), "x": ns.x, "y": ns.y,
           "variant": ns.variant, "branch": probe.branch, "trend": probe.trend, "decreasing": probe.decreasing,
           "flags": list(probe.flags), "rows": rows}
    return emit(doc, ns.format), True


SUITES = ("beta", "lambda", "corollary2", "addition", "laplace")


def _suite_rows(ns) -> list[tuple[str, dict, float]]:
    rows = []
    suites = SUITES if ns.suite == "all" else (ns.suite,)
    g = ns.gamma if ns.gamma is not None else 2.0
    for s in suites:
        if s == "beta":
            m, n = ns.m if ns.m is not None else 3, ns.n if ns.n is not None else 2
            eps = ns.eps if ns.eps is not None else g / 2
            rows.append((s, {"m": m, "n": n, "gamma": g, "eps": eps}, euler_reps.beta_decoupling_check(m, n, g, eps)))
        elif s == "lambda":
            b, bp = ns.beta if ns.beta is not None else 0.5, ns.beta_p if ns.beta_p is not None else 0.7
            pt = EvalPoint(ns.x if ns.x is not None else 0.3, ns.y if ns.y is not None else 0.5, 1.0)
            rows.append((s, {"beta": b, "beta_p": bp, "gamma": g, "x": pt.x, "y": pt.y},
                         series_core.lambda_gamma_reduction_check(b, bp, g, pt)))
        elif s == "corollary2":
            b, bp = ns.beta if ns.beta is not None else 0.5, ns.beta_p if ns.beta_p is not None else 0.7
            lam = ns.lam if ns.lam is not None else 1.0
            mu = ns.mu if ns.mu is not None else 0.8
            x = ns.x if ns.x is not None else 0.5
            rows.append((s, {"beta": b, "beta_p": bp, "gamma": g, "lam": lam, "mu": mu, "x": x},
                         euler_reps.corollary2_check(b, bp, g, lam, mu, x)))
        elif s == "addition":
            x, y = ns.x if ns.x is not None else 0.3, ns.y if ns.y is not None else 0.5
            rows.append((s, {"gamma": g, "x": x, "y": y}, euler_reps.addition_theorem_check(g, x, y)))
        elif s == "laplace":
            y = ns.y if ns.y is not None else 0.7
            grid = _floats(ns.p_grid)
            for kind, par in (("lapFa", {"a": 1.5}), ("lapFb", {"a": 1.5, "b": 2.0}),
                              ("lapFc", {"a": 1.5, "b": 0.5, "c": 2.0}),
                              ("eq29", {"upper": [0.5], "lower": [1.5], "mu": 2.0})):
                rows.append((f"laplace/{kind}", {**par, "y": y}, laplace_bridge.laplace_pair_check(kind, par, y, grid)))
    return rows


def cmd_identities(ns) -> tuple[str, bool]:
    try:
        rows = _suite_rows(ns)
    except HumbertError as e:
        raise EvalFailure(f"identities/{ns.suite}", e) from None
    ok = all(bool(r <= ns.threshold) for _, _, r in rows)
    if ns.format == "csv":
        return to_csv(["suite", "inputs", "residual", "pass"],
                      [[s, to_json(p, None), r, "yes" if r <= ns.threshold else "no"] for s, p, r in rows]), ok
    doc = {"threshold": ns.threshold,
           "results": [{"suite": s, "inputs": p, "residual": r, "pass": bool(r <= ns.threshold)} for s, p, r in rows]}
    return emit(doc, ns.format), ok


def cmd_constraint(ns) -> tuple[str, bool]:
    try:
        mc = spherical_model.ModelConstants(ns.d, ns.g, ns.gamma_diss, ns.C)
    except ValueError as e:
        raise UsageError(str(e)) from None
    try:
        if ns.t_grid:
            rep = spherical_model.scaling_probe(mc, _floats(ns.t_grid), ns.backend, ns.swapped)
            if ns.format == "csv":
                return spherical_model.states_csv(rep.states), True
            return emit(rep.as_dict() | {"states": [s.as_dict() for s in rep.states]}, "json"), True
        if ns.t is None:
            raise UsageError("constraint needs --t or --t-grid")
        if ns.Z is not None:
            r = spherical_model.constraint_residual(ns.Z, ns.t, mc, ns.backend, ns.swapped)
            doc = {"t": ns.t, "Z": ns.Z, "residual": r, "backend": ns.backend}
            return emit(doc, ns.format), True
        bracket = tuple(_floats(ns.bracket)) if ns.bracket else None
        st = spherical_model.solve_z(ns.t, mc, bracket, ns.backend, ns.swapped)
    except HumbertError as e:
        raise EvalFailure("constraint", e) from None
    if ns.format == "csv":
        return spherical_model.states_csv([st]), True
    return emit(st.as_dict(), "json"), True


def cmd_sweep(ns, parser: argparse.ArgumentParser) -> tuple[str, bool]:
    grids = []
    for spec in ns.grid:
        if "=" not in spec:
            raise UsageError(f"--grid expects NAME=v1,v2,..., got {spec!r}")
        name, values = spec.split("=", 1)
        grids.append((name.strip().replace("-", "_"), _floats(values)))
    if not grids:
        raise UsageError("sweep needs at least one --grid")
    base = ns.rest
    if not base or base[0] not in ("eval", "compare", "identities", "constraint"):
        raise UsageError("sweep maps one of: eval, compare, identities, constraint")
    results = []
    ok_all = True
    names = [g[0] for g in grids]
    for combo in itertools.product(*(g[1] for g in grids)):
        argv = list(base)
        for name, val in zip(names, combo):
            argv += ["--" + name.replace("_", "-") if len(name) > 1 else "--" + name, repr(val)]
        sub = parser.parse_args(argv + ["--format", "json"])
        text, ok = VERBS[sub.verb](sub)
        doc = json.loads(text)
        doc.pop("schema", None)
        results.append({"point": dict(zip(names, combo)), "ok": ok, "result": doc})
        ok_all &= ok
    if ns.format == "csv":
        header = names + ["ok", "value"]
        rows = []
        for r in results:
            res = r["result"]
            val = res.get("value", res.get("max_rel_dev", res.get("Z")))
            rows.append([*r["point"].values(), "yes" if r["ok"] else "no", val])
        return to_csv(header, rows), ok_all
    return emit({"verb": base[0], "results": results}, "json"), ok_all


VERBS: dict[str, Callable] = {
    "eval": cmd_eval,
    "compare": cmd_compare,
    "asym": cmd_asym,
    "identities": cmd_identities,
    "constraint": cmd_constraint,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="humbert", description="Appell and Humbert functions: evaluation, cross-checks, asymptotics.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", help="evaluate one function value")
    _add_params(e)
    _add_point(e)
    e.add_argument("--route", choices=ROUTES, default="series")
    e.add_argument("--variant", choices=asymptotics.VARIANTS, default=None)
    _add_format(e)

    c = sub.add_parser("compare", help="evaluate by several routes and report deviations")
    _add_params(c)
    _add_point(c)
    c.add_argument("--routes", help="comma-separated subset of " + ",".join(ROUTES))
    c.add_argument("--threshold", type=float, help="fail (exit 1) if any pairwise deviation exceeds this")
    _add_format(c)

    a = sub.add_parser("asym", help="asymptotic branch and ratio probe")
    _add_params(a)
    _add_point(a, grid=True)
    a.add_argument("--t-grid", default="10,100,1000,10000")
    a.add_argument("--variant", choices=asymptotics.VARIANTS, default="corrected")
    a.add_argument("--no-crest", action="store_true", help="keep the t grid as given for oscillating branches")
    _add_format(a)

    i = sub.add_parser("identities", help="residuals of the identity suites")
    i.add_argument("--suite", choices=SUITES + ("all",), default="all")
    for name in ("gamma", "beta", "beta_p", "lam", "mu", "x", "y", "eps"):
        i.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    i.add_argument("--m", type=int)
    i.add_argument("--n", type=int)
    i.add_argument("--p-grid", default="1,2,3")
    i.add_argument("--threshold", type=float, default=1e-8)
    _add_format(i)

    k = sub.add_parser("constraint", help="spherical-model constraint: residual, root or scaling fit")
    k.add_argument("--d", type=float, required=True)
    k.add_argument("--g", type=float, default=1.0)
    k.add_argument("--gamma-diss", type=float, default=1.0)
    k.add_argument("--C", type=float, default=1.0)
    k.add_argument("--t", type=float)
    k.add_argument("--t-grid")
    k.add_argument("--Z", type=float, help="report the residual at this Z instead of solving")
    k.add_argument("--bracket", help="Z_lo,Z_hi (write --bracket=-2,-0.1 for negative values)")
    k.add_argument("--backend", choices=spherical_model.BACKENDS, default="series")
    k.add_argument("--swapped", action="store_true", help="exchange the argument order of the integrated term")
    _add_format(k)

    s = sub.add_parser("sweep", help="map another verb over a parameter grid")
    s.add_argument("--grid", action="append", default=[], help="NAME=v1,v2,... (repeatable)")
    _add_format(s)
    s.add_argument("rest", nargs=argparse.REMAINDER, help="the verb and its fixed arguments")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.verb == "sweep":
            text, ok = cmd_sweep(ns, parser)
        else:
            text, ok = VERBS[ns.verb](ns)
    except UsageError as e:
        print(f"humbert: usage error: {e}", file=sys.stderr)
        return 2
    except EvalFailure as e:
        print(f"humbert: evaluation failed in {e}", file=sys.stderr)
        return 1
    sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
