"""Double power series of the two-variable families.

Every family handled here has separable terms

    T(m, n) = A(m) * B(n) * J(m + n)

where ``A`` carries the x-only Pochhammer ratios and ``x^m/m!``, ``B`` the
y-only ones, and ``J`` the joint factors ``(a)_s/(c)_s`` together with an
optional ``1/(s + lambda)``.  Sums run over anti-diagonals ``m + n = s``.

The double-precision summer keeps each factor as a (mantissa, exponent)
pair so that ``1/(gamma)_s`` and ``X^m/m!`` can leave the floating-point
range individually while their product stays representable.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import mpmath as mp
import numpy as np

from .errors import NonConvergent, OutOfDomain
from .types import (
    DEFAULT_PRECISION,
    EvalPoint,
    Family,
    KdFSpec,
    Method,
    ParamSet,
    Precision,
    ValueEstimate,
    is_nonpositive_int,
)

EPS = np.finfo(float).eps
CANCEL_LIMIT = 1e8
GOLDEN_PATH = Path(__file__).with_name("data") / "golden.json"


@dataclass(frozen=True)
class SeriesShape:
    """Parameter lists of a separable double series."""

    upper_x: tuple[float, ...] = ()
    lower_x: tuple[float, ...] = ()
    upper_y: tuple[float, ...] = ()
    lower_y: tuple[float, ...] = ()
    upper_joint: tuple[float, ...] = ()
    lower_joint: tuple[float, ...] = ()
    lam: float | None = None

    def side_kind(self, side: str) -> str:
        """'entire', 'disk' (|arg| < 1) or 'divergent' for one variable."""
        up = self.upper_x if side == "x" else self.upper_y
        lo = self.lower_x if side == "x" else self.lower_y
        excess = len(up) + len(self.upper_joint) - len(lo) - len(self.lower_joint) - 1
        if excess < 0:
            return "entire"
        if excess == 0:
            return "disk"
        return "divergent"


def shape_of(params: ParamSet) -> SeriesShape:
    p = params
    fam = p.family
    if fam is Family.F3:
        return SeriesShape((p.alpha, p.beta), (), (p.alpha_p, p.beta_p), (), (), (p.gamma,))
    if fam is Family.Xi1:
        return SeriesShape((p.alpha, p.beta), (), (p.beta_p,), (), (), (p.gamma,))
    if fam is Family.Xi2:
        return SeriesShape((p.alpha, p.beta), (), (), (), (), (p.gamma,))
    if fam is Family.Phi2:
        return SeriesShape((p.beta,), (), (p.beta_p,), (), (), (p.gamma,))
    if fam is Family.Phi3:
        return SeriesShape((p.beta,), (), (), (), (), (p.gamma,))
    if fam is Family.Phi2i:
        return SeriesShape((p.beta,), (), (p.beta_p,), (), (), (p.gamma,), p.lam)
    if fam is Family.Phi3i:
        return SeriesShape((p.beta,), (), (), (), (), (p.gamma,), p.lam)
    if fam is Family.F2:
        return SeriesShape((p.beta,), (p.gamma,), (p.beta_p,), (p.gamma_p,), (p.alpha,), ())
    if fam is Family.Psi1:
        return SeriesShape((p.beta,), (p.gamma,), (), (p.gamma_p,), (p.alpha,), ())
    if fam is Family.Psi2:
        return SeriesShape((), (p.gamma,), (), (p.gamma_p,), (p.alpha,), ())
    raise ValueError(f"no double series for {fam}")


def shape_of_kdf(spec: KdFSpec) -> SeriesShape:
    return SeriesShape(spec.upper_x, spec.lower_x, spec.upper_y, spec.lower_y, (), (spec.gamma,))


def _terminates(upper: Sequence[float]) -> bool:
    return any(is_nonpositive_int(a) for a in upper)


def check_domain(shape: SeriesShape, X: float, Y: float, family: str = "series") -> None:
    """Raise OutOfDomain if the double series does not converge at (X, Y)."""
    kx, ky = shape.side_kind("x"), shape.side_kind("y")
    for kind, arg, up, name in ((kx, X, shape.upper_x, "x"), (ky, Y, shape.upper_y, "y")):
        if arg == 0 or _terminates(up):
            continue
        if kind == "divergent":
            raise OutOfDomain(f"{family}: series diverges for nonzero {name}-argument")
    ax = 0.0 if _terminates(shape.upper_x) else abs(X)
    ay = 0.0 if _terminates(shape.upper_y) else abs(Y)
    if kx == ky == "disk" and shape.upper_joint and not _terminates(shape.upper_joint):
        # (a)_{m+n}/((c)_m (c')_n) coupling: converges for |X| + |Y| < 1
        if ax + ay >= 1.0:
            raise OutOfDomain(f"{family}: series needs |X| + |Y| < 1, got {ax + ay:.6g}")
        return
    if kx == "disk" and ax >= 1.0:
        raise OutOfDomain(f"{family}: series needs |X| < 1, got {ax:.6g}")
    if ky == "disk" and ay >= 1.0:
        raise OutOfDomain(f"{family}: series needs |Y| < 1, got {ay:.6g}")


# ---------------------------------------------------------------------------
# double-precision anti-diagonal summation


class _ScaledSeq:
    """Running products c_k = prod_{j<k} r_j held as mantissa * 2**exponent."""

    def __init__(self, ratio):
        self._ratio = ratio
        self.mant = [1.0]
        self.exp = [0]

    def extend_to(self, n: int) -> None:
        while len(self.mant) <= n:
            k = len(self.mant) - 1
            m = self.mant[k] * self._ratio(k)
            if m == 0.0 or not math.isfinite(m):
                self.mant.append(0.0 if m == 0.0 else m)
                self.exp.append(self.exp[k])
                continue
            fm, fe = math.frexp(m)
            self.mant.append(fm)
            self.exp.append(self.exp[k] + fe)

    def arrays(self, n: int):
        self.extend_to(n)
        return np.asarray(self.mant[: n + 1]), np.asarray(self.exp[: n + 1], dtype=np.int64)


def _side_ratio(upper, lower, z):
    def r(k):
        num = z
        for a in upper:
            num *= a + k
        den = float(k + 1)
        for b in lower:
            den *= b + k
        return num / den

    return r


def _joint_ratio(upper, lower):
    def r(k):
        num = 1.0
        for a in upper:
            num *= a + k
        den = 1.0
        for b in lower:
            den *= b + k
        return num / den

    return r


@dataclass
class _DoubleSum:
    value: float
    last_block: float
    abs_total: float
    max_partial: float
    diagonals: int
    terms: int
    ratio: float


def _sum_double(shape: SeriesShape, X: float, Y: float, prec: Precision, min_blocks: int = 3) -> _DoubleSum:
    A = _ScaledSeq(_side_ratio(shape.upper_x, shape.lower_x, X))
    B = _ScaledSeq(_side_ratio(shape.upper_y, shape.lower_y, Y))
    J = _ScaledSeq(_joint_ratio(shape.upper_joint, shape.lower_joint))
    lam = shape.lam
    total = 0.0
    abs_total = 0.0
    max_partial = 0.0
    small = 0
    prev_abs = math.inf
    terms = 0
    ratio = 1.0
    for s in range(prec.max_terms):
        am, ae = A.arrays(s)
        bm, be = B.arrays(s)
        jm, je = J.arrays(s)
        mant = am * bm[::-1] * jm[s]
        ex = ae + be[::-1] + je[s]
        nz = mant != 0.0
        if not np.all(np.isfinite(mant)):
            raise NonConvergent("double-precision terms overflowed")
        if nz.any():
            emax = int(ex[nz].max())
            scaled = np.ldexp(mant[nz], ex[nz] - emax)
            with np.errstate(over="raise"):
                try:
                    blk = math.ldexp(float(scaled.sum()), emax)
                    blk_abs = math.ldexp(float(np.abs(scaled).sum()), emax)
                except (OverflowError, FloatingPointError) as exc:
                    raise NonConvergent("double-precision block overflowed") from exc
        else:
            blk = blk_abs = 0.0
        if lam is not None:
            blk /= s + lam
            blk_abs /= abs(s + lam)
        terms += s + 1
        total += blk
        abs_total += blk_abs
        max_partial = max(max_partial, abs(total))
        if not math.isfinite(total) or not math.isfinite(abs_total):
            raise NonConvergent("double-precision partial sum overflowed")
        decreasing = blk_abs <= prev_abs
        if blk_abs <= prec.rel_tol * abs(total) and decreasing and s >= 1:
            small += 1
            if small >= min_blocks:
                ratio = blk_abs / prev_abs if prev_abs > 0 else 0.0
                return _DoubleSum(total, blk_abs, abs_total, max_partial, s + 1, terms, ratio)
        elif blk_abs == 0.0 and prev_abs == 0.0 and s >= 1:
            # terminating polynomial or both arguments zero
            small += 1
            if small >= min_blocks:
                return _DoubleSum(total, 0.0, abs_total, max_partial, s + 1, terms, 0.0)
        else:
            small = 0
        prev_abs = blk_abs
    raise NonConvergent(f"anti-diagonal sum did not settle within {prec.max_terms} diagonals")


def oracle_digits_default(cancellation: float = 1.0) -> int:
    """Working digits for the oracle: env override, else 16 + lost digits + margin."""
    env = os.environ.get("HUMBERT_ORACLE_DIGITS")
    if env:
        return max(16, int(env))
    lost = math.log10(cancellation) if cancellation > 1 and math.isfinite(cancellation) else 0.0
    return int(16 + lost + 10)


def _estimate_from_double(ds: _DoubleSum) -> tuple[float, float]:
    r = min(ds.ratio, 0.5)
    tail = ds.last_block * r / (1.0 - r) + ds.last_block
    rounding = 2.0 * EPS * ds.abs_total * math.sqrt(ds.diagonals)
    return tail, rounding


def _sum_shape(
    shape: SeriesShape,
    X: float,
    Y: float,
    prec: Precision,
    fallback: bool,
    label: str,
) -> ValueEstimate:
    check_domain(shape, X, Y, label)
    try:
        ds = _sum_double(shape, X, Y, prec)
    except NonConvergent:
        if not fallback:
            raise
        v = _oracle_shape(shape, X, Y, oracle_digits_default(1e30), None)
        return _replace_flags(v, ("overflow", "oracle_fallback"))
    cancel = ds.abs_total / abs(ds.value) if ds.value != 0 else math.inf
    tail, rounding = _estimate_from_double(ds)
    if cancel <= CANCEL_LIMIT:
        return ValueEstimate(ds.value, float(tail + rounding), Method.Series, terms_used=ds.terms)
    if not fallback:
        # honest error bar: the rounding estimate reflects the lost digits
        return ValueEstimate(
            ds.value, float(tail + rounding), Method.Series, terms_used=ds.terms, flags=("cancellation",)
        )
    v = _oracle_shape(shape, X, Y, oracle_digits_default(cancel), None)
    return _replace_flags(v, ("cancellation", "oracle_fallback"), terms=ds.terms + v.terms_used)


def _replace_flags(v: ValueEstimate, flags: Iterable[str], terms: int | None = None) -> ValueEstimate:
    return ValueEstimate(
        v.value,
        v.abs_err,
        v.method,
        terms_used=v.terms_used if terms is None else terms,
        nodes_used=v.nodes_used,
        flags=tuple(v.flags) + tuple(flags),
        mp_value=v.mp_value,
    )


def eval_series(
    params: ParamSet,
    pt: EvalPoint,
    prec: Precision = DEFAULT_PRECISION,
    fallback: bool = True,
) -> ValueEstimate:
    """Sum the double series at arguments ``(-t x, -t y)``.

    With ``fallback`` (default) a result whose cancellation ratio
    ``sum|T| / |S|`` exceeds ``1e8`` is recomputed by :func:`eval_oracle`
    and flagged.  Without it the double-precision value is returned with
    the ``"cancellation"`` flag and an error bar reflecting the lost digits.
    """
    X, Y = pt.args
    return _sum_shape(shape_of(params), X, Y, prec, fallback, params.family.value)


def eval_kdf_series(spec: KdFSpec, pt: EvalPoint, prec: Precision = DEFAULT_PRECISION, fallback: bool = True) -> ValueEstimate:
    """Kampe de Feriet series F^{0;p;p'}_{1;q;q'} at ``(-t x, -t y)``."""
    X, Y = pt.args
    return _sum_shape(shape_of_kdf(spec), X, Y, prec, fallback, "KdF")


# ---------------------------------------------------------------------------
# adjustable-precision oracle


def _mp_ratio_side(upper, lower, z):
    def r(k):
        num = z
        for a in upper:
            num *= a + k
        den = mp.mpf(k + 1)
        for b in lower:
            den *= b + k
        return num / den

    return r


def _mp_ratio_joint(upper, lower):
    def r(k):
        num = mp.mpf(1)
        for a in upper:
            num *= a + k
        den = mp.mpf(1)
        for b in lower:
            den *= b + k
        return num / den

    return r


def _mp_seq(ratio, n, out):
    while len(out) <= n:
        k = len(out) - 1
        out.append(out[k] * ratio(k))
    return out


def _oracle_shape(
    shape: SeriesShape,
    X: float,
    Y: float,
    digits: int,
    s_max: int | None,
    order: str = "antidiagonal",
) -> ValueEstimate:
    if s_max is None:
        s_max = 20000
    with mp.workdps(digits):
        up_x = [mp.mpf(a) for a in shape.upper_x]
        lo_x = [mp.mpf(b) for b in shape.lower_x]
        up_y = [mp.mpf(a) for a in shape.upper_y]
        lo_y = [mp.mpf(b) for b in shape.lower_y]
        up_j = [mp.mpf(a) for a in shape.upper_joint]
        lo_j = [mp.mpf(b) for b in shape.lower_joint]
        lam = None if shape.lam is None else mp.mpf(shape.lam)
        rx = _mp_ratio_side(up_x, lo_x, mp.mpf(X))
        ry = _mp_ratio_side(up_y, lo_y, mp.mpf(Y))
        rj = _mp_ratio_joint(up_j, lo_j)
        A, B, Jv = [mp.mpf(1)], [mp.mpf(1)], [mp.mpf(1)]
        lim_d, lim_n, lim_m = limit_ratios(shape, X, Y)
        if order == "rowmajor":
            return _oracle_rowmajor(A, B, Jv, rx, ry, rj, lam, digits, s_max, lim_n, lim_m)
        tol = mp.mpf(10) ** (-digits + 3)
        total = mp.mpf(0)
        hist: list = []
        terms = 0
        for s in range(s_max + 1):
            _mp_seq(rx, s, A)
            _mp_seq(ry, s, B)
            _mp_seq(rj, s, Jv)
            blk = mp.fsum(A[m] * B[s - m] for m in range(s + 1)) * Jv[s]
            blk_abs = mp.fsum(abs(A[m] * B[s - m]) for m in range(s + 1)) * abs(Jv[s])
            if lam is not None:
                blk /= s + lam
                blk_abs /= abs(s + lam)
            total += blk
            terms += s + 1
            hist.append(blk_abs)
            if len(hist) >= 4 and s >= 2:
                r = _majorant_ratio(hist[-4:], lim_d)
                if r is not None:
                    bound = blk_abs * r / (1 - r)
                    if bound <= tol * abs(total) or (blk_abs == 0 and total != 0):
                        err = float(bound) + float(abs(total)) * 10.0 ** (-digits + 2)
                        return ValueEstimate(float(total), err, Method.Oracle, terms_used=terms, mp_value=+total)
                elif all(h == 0 for h in hist[-4:]):
                    err = float(abs(total)) * 10.0 ** (-digits + 2)
                    return ValueEstimate(float(total), err, Method.Oracle, terms_used=terms, mp_value=+total)
        raise NonConvergent(f"oracle tail majorant not established by s_max={s_max}")


def _majorant_ratio(h, limit=0.0):
    """Geometric ratio bound from the last few block magnitudes, or None.

    ``limit`` is the asymptotic ratio of the series in the summation
    direction; ratios creeping up towards it are bounded by it.
    """
    if any(v == 0 for v in h[:-1]):
        return None
    r = max(max(h[i + 1] / h[i] for i in range(len(h) - 1)), mp.mpf(limit))
    if r >= 1:
        return None
    return r


def limit_ratios(shape: SeriesShape, X: float, Y: float) -> tuple[float, float, float]:
    """Asymptotic term ratios along (anti-diagonal, n-direction, m-direction)."""
    kx, ky = shape.side_kind("x"), shape.side_kind("y")
    lx = abs(X) if kx == "disk" and not _terminates(shape.upper_x) else 0.0
    ly = abs(Y) if ky == "disk" and not _terminates(shape.upper_y) else 0.0
    if kx == ky == "disk" and shape.upper_joint:
        diag = lx + ly
    else:
        diag = max(lx, ly)
    return diag, ly, lx


def _oracle_rowmajor(A, B, Jv, rx, ry, rj, lam, digits, s_max, lim_n, lim_m):
    """Row-by-row summation: inner sum over n for each m, used to cross-check order."""
    tol = mp.mpf(10) ** (-digits + 3)
    total = mp.mpf(0)
    terms = 0
    row_hist: list = []
    for m in range(s_max + 1):
        _mp_seq(rx, m, A)
        row = mp.mpf(0)
        hist: list = []
        for n in range(s_max + 1):
            _mp_seq(ry, n, B)
            _mp_seq(rj, m + n, Jv)
            term = A[m] * B[n] * Jv[m + n]
            if lam is not None:
                term /= m + n + lam
            row += term
            terms += 1
            hist.append(abs(term))
            if len(hist) >= 4 and n >= 2:
                r = _majorant_ratio(hist[-4:], lim_n)
                if (r is not None and hist[-1] * r / (1 - r) <= tol * abs(row)) or all(v == 0 for v in hist[-4:]):
                    break
        else:
            raise NonConvergent("row-major oracle: inner row did not settle")
        total += row
        row_hist.append(abs(row) if row != 0 else mp.mpf(0))
        if len(row_hist) >= 4 and m >= 2:
            r = _majorant_ratio(row_hist[-4:], lim_m)
            if (r is not None and row_hist[-1] * r / (1 - r) <= tol * abs(total)) or all(v == 0 for v in row_hist[-4:]):
                err = float(abs(total)) * 10.0 ** (-digits + 3)
                return ValueEstimate(float(total), err, Method.Oracle, terms_used=terms, mp_value=+total)
    raise NonConvergent("row-major oracle did not settle by s_max")


def eval_oracle(
    params: ParamSet,
    pt: EvalPoint,
    digits: int | None = None,
    s_max: int = 20000,
    order: str = "antidiagonal",
) -> ValueEstimate:
    """Direct double summation at ``digits`` significant digits.

    Stops once a geometric majorant built from the last four block
    magnitudes bounds the tail below ``10**(3-digits)`` relative.
    ``order="rowmajor"`` sums row by row instead of along anti-diagonals.
    """
    X, Y = pt.args
    shape = shape_of(params)
    check_domain(shape, X, Y, params.family.value)
    return _oracle_shape(shape, X, Y, digits or oracle_digits_default(), s_max, order)


def eval_kdf_oracle(spec: KdFSpec, pt: EvalPoint, digits: int | None = None, s_max: int = 20000) -> ValueEstimate:
    X, Y = pt.args
    shape = shape_of_kdf(spec)
    check_domain(shape, X, Y, "KdF")
    return _oracle_shape(shape, X, Y, digits or oracle_digits_default(), s_max)


def lambda_gamma_reduction_check(
    beta: float,
    beta_p: float,
    gamma: float,
    pt: EvalPoint,
    use_oracle: bool = False,
    digits: int = 40,
) -> float:
    """Worst relative residual of ``gamma * Phi^(i)(...; gamma, gamma) = Phi(...; gamma + 1)``.

    Checks the Phi2 pair and the Phi3 pair and returns the larger residual.
    """
    if use_oracle:
        ev = lambda p: eval_oracle(p, pt, digits)  # noqa: E731
    else:
        ev = lambda p: eval_series(p, pt)  # noqa: E731
    worst = 0.0
    pairs = (
        (
            ParamSet.make("Phi2i", beta=beta, beta_p=beta_p, gamma=gamma, lam=gamma),
            ParamSet.make("Phi2", beta=beta, beta_p=beta_p, gamma=gamma + 1),
        ),
        (
            ParamSet.make("Phi3i", beta=beta, gamma=gamma, lam=gamma),
            ParamSet.make("Phi3", beta=beta, gamma=gamma + 1),
        ),
    )
    for integrated, plain in pairs:
        a = ev(integrated)
        b = ev(plain)
        if use_oracle:
            with mp.workdps(digits):
                r = abs(gamma * a.mp_value - b.mp_value) / abs(b.mp_value)
            worst = max(worst, float(r))
        else:
            worst = max(worst, abs(gamma * a.value - b.value) / abs(b.value))
    return worst


# ---------------------------------------------------------------------------
# golden values


def golden_record(params: ParamSet, pt: EvalPoint, est: ValueEstimate, digits: int) -> dict:
    return {
        "family": params.family.value,
        "params": params.as_dict(),
        "x": pt.x,
        "y": pt.y,
        "t": pt.t,
        "value": est.value,
        "value_str": mp.nstr(est.mp_value, 30) if est.mp_value is not None else repr(est.value),
        "abs_err": est.abs_err,
        "digits": digits,
    }


def write_golden(records: list[dict], path: Path | str = GOLDEN_PATH) -> None:
    Path(path).write_text(json.dumps({"schema": 1, "records": records}, indent=1) + "\n")


def load_golden(path: Path | str = GOLDEN_PATH) -> list[dict]:
    data = json.loads(Path(path).read_text())
    return data["records"]


def golden_lookup(family: str, params: dict, x: float, y: float, t: float = 1.0, path: Path | str = GOLDEN_PATH) -> dict:
    for rec in load_golden(path):
        if (
            rec["family"].lower() == family.lower()
            and all(abs(rec["params"].get(k, math.nan) - v) < 1e-15 for k, v in params.items())
            and len(rec["params"]) == len(params)
            and rec["x"] == x
            and rec["y"] == y
            and rec["t"] == t
        ):
            return rec
    raise KeyError(f"no golden record for {family} {params} at ({x}, {y}, {t})")
