"""Regenerate src/humbert/data/golden.json from brute-force mpmath double sums.

The reference sums here are written independently of the package's
summation code: plain nested loops at 50 digits.  The package's oracle is
then required to agree before a record is written.
"""
from __future__ import annotations

import mpmath as mp

from humbert import spherical_model
from humbert.series_core import GOLDEN_PATH, eval_oracle, golden_record, write_golden
from humbert.types import EvalPoint, ParamSet, ValueEstimate

DPS = 50


def brute(term, smax: int, order: str = "diagonal"):
    """Sum term(m, n) over m + n <= smax; ``order`` picks the traversal."""
    with mp.workdps(DPS):
        total = mp.mpf(0)
        if order == "diagonal":
            for s in range(smax + 1):
                for m in range(s + 1):
                    total += term(m, s - m)
        else:
            for m in range(smax + 1):
                for n in range(smax + 1 - m):
                    total += term(m, n)
        return total


def phi2_term(b, bp, g, X, Y):
    rf, f = mp.rf, mp.factorial
    return lambda m, n: rf(b, m) * rf(bp, n) / rf(g, m + n) * mp.mpf(X) ** m * mp.mpf(Y) ** n / (f(m) * f(n))


def f3_term(a, ap, b, bp, g, X, Y):
    rf, f = mp.rf, mp.factorial
    return lambda m, n: (rf(a, m) * rf(ap, n) * rf(b, m) * rf(bp, n) / rf(g, m + n)
                         * mp.mpf(X) ** m * mp.mpf(Y) ** n / (f(m) * f(n)))


def record(params, pt, ref, other):
    if abs(ref - other) > mp.mpf(10) ** -40 * abs(ref):
        raise SystemExit(f"summation orders disagree for {params}")
    oracle = eval_oracle(params, pt)
    if abs(oracle.value - float(ref)) > 1e-14 * abs(float(ref)):
        raise SystemExit(f"package oracle disagrees for {params}: {oracle.value} vs {ref}")
    est = ValueEstimate(float(ref), float(abs(ref - other)) or 1e-30, "Oracle", mp_value=ref)
    return golden_record(params, pt, est, DPS)


def main() -> None:
    recs = []
    p = ParamSet.make("Phi2", beta=1, beta_p=1, gamma=2)
    pt = EvalPoint(-0.5, -0.25, 1.0)
    X, Y = pt.args
    recs.append(record(p, pt, brute(phi2_term(1, 1, 2, X, Y), 200), brute(phi2_term(1, 1, 2, X, Y), 200, "rows")))

    p = ParamSet.make("F3", alpha=1, alpha_p=1, beta=1, beta_p=1, gamma=3)
    pt = EvalPoint.from_args(0.3, 0.4)
    X, Y = pt.args
    recs.append(record(p, pt, brute(f3_term(1, 1, 1, 1, 3, X, Y), 400),
                       brute(f3_term(1, 1, 1, 1, 3, X, Y), 400, "rows")))

    mc = spherical_model.ModelConstants(3, 1, 1, 1)
    res = {b: spherical_model.constraint_residual(-0.1, 10.0, mc, b) for b in ("oracle", "series")}
    if abs(res["oracle"] - res["series"]) > 1e-10 * abs(res["oracle"]):
        raise SystemExit(f"constraint residual backends disagree: {res}")
    recs.append({"family": "SphericalResidual", "params": {"d": 3.0, "g": 1.0, "gamma_diss": 1.0, "C": 1.0},
                 "x": -0.1, "y": 0.0, "t": 10.0, "value": res["oracle"], "value_str": repr(res["oracle"]),
                 "abs_err": abs(res["oracle"] - res["series"]), "digits": spherical_model.BASE_DPS})
    write_golden(recs)
    print(f"wrote {len(recs)} records to {GOLDEN_PATH}")


if __name__ == "__main__":
    main()
