"""One-variable hypergeometric kernels.

Scalar entry points return :class:`ValueEstimate`; the ``*_array`` helpers
are vectorised versions used inside quadrature loops, where building an
estimate object per node would dominate the cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath as mp
import numpy as np
from scipy import special as sc

from .errors import DomainError, NonConvergent, PoleError, QuadratureNotConverged, SingularParameter
from .quadrature import de_unit, de_unit_vec
from .types import DEFAULT_PRECISION, Method, Precision, ValueEstimate, is_nonpositive_int

C_EULER = 0.57721566490153286061
EPS = np.finfo(float).eps


def pochhammer(a: float, m: int) -> float:
    """Rising factorial (a)_m as a running product."""
    if m < 0 or int(m) != m:
        raise ValueError("m must be a non-negative integer")
    out = 1.0
    for k in range(int(m)):
        out *= a + k
    return out


@dataclass(frozen=True)
class Pfq:
    upper: tuple[float, ...]
    lower: tuple[float, ...]
    argument: float

    def __init__(self, upper: Sequence[float], lower: Sequence[float], argument: float):
        object.__setattr__(self, "upper", tuple(float(a) for a in upper))
        object.__setattr__(self, "lower", tuple(float(b) for b in lower))
        object.__setattr__(self, "argument", float(argument))

    @property
    def p(self) -> int:
        return len(self.upper)

    @property
    def q(self) -> int:
        return len(self.lower)


def _check_lower(lower: Sequence[float]) -> None:
    for b in lower:
        if is_nonpositive_int(b):
            raise SingularParameter(f"lower parameter {b} is a non-positive integer")


def _terminating(upper: Sequence[float]) -> int | None:
    degs = [int(round(-a)) for a in upper if is_nonpositive_int(a)]
    return min(degs) if degs else None


def _pfq_series_double(upper, lower, z, prec: Precision):
    """Plain term recurrence; returns (sum, tail, abs_sum, max_partial, terms)."""
    term = 1.0
    s = 1.0
    abs_sum = 1.0
    max_partial = 1.0
    stop = _terminating(upper)
    small = 0
    for k in range(prec.max_terms):
        num = 1.0
        for a in upper:
            num *= a + k
        den = float(k + 1)
        for b in lower:
            den *= b + k
        ratio = num / den * z
        term *= ratio
        if stop is not None and k + 1 > stop:
            return s, 0.0, abs_sum, max_partial, k + 1
        if not math.isfinite(term):
            raise NonConvergent("series terms overflowed")
        s += term
        at = abs(term)
        abs_sum += at
        max_partial = max(max_partial, abs(s))
        if at <= prec.rel_tol * abs(s) and abs(ratio) < 1.0:
            small += 1
            if small >= 2:
                r = abs(ratio)
                return s, at * r / (1.0 - r), abs_sum, max_partial, k + 2
        else:
            small = 0
    raise NonConvergent(f"pFq series did not converge within {prec.max_terms} terms")


def _pfq_mp(upper, lower, z, digits: int, max_terms: int):
    with mp.workdps(digits):
        try:
            v = mp.hyper(list(upper), list(lower), z, maxterms=max_terms * 10)
        except mp.libmp.NoConvergence as exc:  # pragma: no cover - defensive
            raise NonConvergent(str(exc)) from exc
        return v


def hyp_pfq(f: Pfq, prec: Precision = DEFAULT_PRECISION) -> ValueEstimate:
    """Generalised hypergeometric series pFq by term recurrence.

    When cancellation (sum of |terms| against the result) would push the
    rounding error above ``prec.rel_tol`` the sum is redone at adjustable
    precision.
    """
    upper, lower, z = f.upper, f.lower, f.argument
    _check_lower(lower)
    p, q = len(upper), len(lower)
    poly = _terminating(upper) is not None
    if not poly:
        if p > q + 1 and z != 0:
            raise NonConvergent(f"{p}F{q} series diverges for z != 0")
        if p == q + 1 and abs(z) >= 1:
            raise NonConvergent(f"{p}F{q} series needs |z| < 1, got {z}")
    if z == 0:
        return ValueEstimate(1.0, 0.0, Method.Series, terms_used=1)
    s, tail, abs_sum, max_partial, n = _pfq_series_double(upper, lower, z, prec)
    cancel = abs_sum / abs(s) if s != 0 else math.inf
    err = tail + 4 * EPS * abs_sum
    if err <= max(prec.rel_tol, 8 * EPS) * abs(s):
        return ValueEstimate(s, err, Method.Series, terms_used=n)
    digits = prec.working_digits + int(math.log10(min(cancel, 1e300))) + 5
    if not math.isfinite(cancel):
        digits = prec.working_digits + 40
    v = _pfq_mp(upper, lower, z, digits, prec.max_terms)
    val = float(v)
    return ValueEstimate(
        val,
        abs(val) * max(prec.rel_tol, 10.0 ** (-prec.working_digits)),
        Method.Oracle,
        terms_used=n,
        flags=("cancellation", "adjustable_precision"),
        mp_value=v,
    )


def pfq(upper: Sequence[float], lower: Sequence[float], z: float, prec: Precision = DEFAULT_PRECISION) -> float:
    return hyp_pfq(Pfq(upper, lower, z), prec).value


# ---------------------------------------------------------------------------
# vectorised kernels for quadrature integrands


def _series_array(upper, lower, z: np.ndarray, rel_tol: float, max_terms: int):
    z = np.asarray(z, dtype=float)
    term = np.ones_like(z)
    s = np.ones_like(z)
    max_partial = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    stop = _terminating(upper)
    for k in range(max_terms):
        num = 1.0
        for a in upper:
            num *= a + k
        den = float(k + 1)
        for b in lower:
            den *= b + k
        if stop is not None and k + 1 > stop:
            return s, max_partial
        with np.errstate(over="ignore", invalid="ignore"):
            term = term * (num / den) * z
        s = s + term
        np.maximum(max_partial, np.abs(s), out=max_partial)
        # term ratio |num/den * z| eventually < 1 for entire series
        done = (np.abs(term) <= rel_tol * np.abs(s)) & (np.abs(num / den * z) < 1.0)
        active &= ~done
        if not active.any():
            return s, max_partial
        term = np.where(active, term, 0.0)
    raise NonConvergent("vectorised pFq series hit its term cap")


def pfq_array(
    upper: Sequence[float],
    lower: Sequence[float],
    z: np.ndarray,
    rel_tol: float = 1e-15,
    max_terms: int = 4000,
    cancel_limit: float = 1e6,
) -> np.ndarray:
    """pFq over an array of real arguments.

    1F1 at negative argument goes through Kummer's transformation and
    2F1 at negative argument through its Euler integral; any element whose
    plain series loses more than ``cancel_limit`` is recomputed with mpmath.
    """
    upper = tuple(float(a) for a in upper)
    lower = tuple(float(b) for b in lower)
    _check_lower(lower)
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    p, q = len(upper), len(lower)
    poly = _terminating(upper) is not None
    if p == 1 and q == 1 and not poly:
        a, b = upper[0], lower[0]
        neg = z < 0
        if neg.any():
            # 1F1(a;b;z) = e^z 1F1(b-a;b;-z)
            out[neg] = np.exp(z[neg]) * pfq_array((b - a,), (b,), -z[neg], rel_tol, max_terms, cancel_limit)
        pos = ~neg
        if pos.any():
            out[pos] = _plain_array(upper, lower, z[pos], rel_tol, max_terms, cancel_limit)
        return out
    if p == 0 and q == 1:
        big = np.abs(z) > 16.0
        if big.any():
            out[big] = _hyp0f1_bessel(lower[0], z[big])
        if (~big).any():
            out[~big] = _plain_array(upper, lower, z[~big], rel_tol, max_terms, cancel_limit)
        return out
    if p == 2 and q == 1 and not poly:
        a, b = upper
        c = lower[0]
        neg = z < -0.5
        if neg.any():
            out[neg] = hyp2f1_neg_array(a, b, c, -z[neg], rel_tol=max(rel_tol, 1e-14))
        rest = ~neg
        if rest.any():
            if np.any(z[rest] >= 1):
                raise DomainError("2F1 argument >= 1 is on or beyond the branch point")
            out[rest] = _plain_array(upper, lower, z[rest], rel_tol, max_terms, cancel_limit)
        return out
    if p > q + 1 and not poly and np.any(z != 0):
        raise NonConvergent(f"{p}F{q} series diverges")
    if p == q + 1 and not poly and np.any(np.abs(z) >= 1):
        raise NonConvergent(f"{p}F{q} series needs |z| < 1")
    return _plain_array(upper, lower, z, rel_tol, max_terms, cancel_limit)


def _hyp0f1_bessel(b: float, z: np.ndarray) -> np.ndarray:
    """0F1(; b; z) via J_{b-1} (z < 0) or exponentially scaled I_{b-1} (z > 0)."""
    w = np.abs(z)
    r = 2.0 * np.sqrt(w)
    lg = sc.gammaln(b) + 0.5 * (1.0 - b) * np.log(w)
    sg = sc.gammasgn(b)
    out = np.empty_like(z)
    neg = z < 0
    out[neg] = sg * np.exp(lg[neg]) * sc.jv(b - 1.0, r[neg])
    pos = ~neg
    out[pos] = sg * np.exp(lg[pos] + r[pos]) * sc.ive(b - 1.0, r[pos])
    return out


def _plain_array(upper, lower, z, rel_tol, max_terms, cancel_limit):
    s, max_partial = _series_array(upper, lower, z, rel_tol, max_terms)
    with np.errstate(divide="ignore", invalid="ignore"):
        cancel = max_partial / np.abs(s)
    bad = ~(cancel <= cancel_limit) | ~np.isfinite(s)
    if bad.any():
        idx = np.flatnonzero(bad)
        for i in idx:
            c = cancel.flat[i]
            digits = 20 + (int(math.log10(c)) if math.isfinite(c) and c > 1 else 40)
            s.flat[i] = float(_pfq_mp(upper, lower, float(z.flat[i]), digits, max_terms))
    return s


def hyp2f1_neg_array(a: float, b: float, c: float, x: np.ndarray, rel_tol: float = 1e-14) -> np.ndarray:
    """2F1(a, b; c; -x) for x >= 0 via the Euler integral, vectorised over x."""
    x = np.asarray(x, dtype=float)
    if not (c > b > 0):
        if c > a > 0:
            a, b = b, a
        else:
            # outside the Euler-integral window; principal branch from mpmath
            return np.array([float(mp.hyp2f1(a, b, c, -float(xi))) for xi in x.ravel()]).reshape(x.shape)
    norm = math.exp(sc.gammaln(c) - sc.gammaln(b) - sc.gammaln(c - b))
    flat = x.ravel()
    try:
        res = de_unit_vec(lambda u, v: np.exp(-a * np.log1p(np.outer(u, flat))), b - 1.0, c - b - 1.0, tol=rel_tol)
    except QuadratureNotConverged:
        # strongly singular endpoint weights; mpmath handles these directly
        return np.array([float(mp.hyp2f1(a, b, c, -float(xi))) for xi in flat]).reshape(x.shape)
    return (norm * res).reshape(x.shape)


def hyp2f1_continued(a: float, b: float, c: float, x: float, tol: float = 1e-14) -> ValueEstimate:
    """2F1(a, b; c; -x) for x >= 0 from its Euler integral (requires c > b > 0)."""
    if not (c > b > 0):
        raise DomainError(f"Euler integral needs c > b > 0, got b={b}, c={c}")
    if x < 0:
        raise DomainError("x must be non-negative")
    lognorm = sc.gammaln(c) - sc.gammaln(b) - sc.gammaln(c - b)
    if x == 0:
        return ValueEstimate(1.0, 0.0, Method.Euler, nodes_used=0)
    r = de_unit(lambda u, v: np.exp(-a * np.log1p(u * x)), b - 1.0, c - b - 1.0, tol=tol)
    norm = math.exp(lognorm)
    return ValueEstimate(norm * r.value, norm * r.abs_err + 4 * EPS * abs(norm * r.value), Method.Euler, nodes_used=r.nodes)


# ---------------------------------------------------------------------------
# Tricomi U, incomplete gamma, Bessel, digamma


def _kummer_m_regularised(a, b, z, prec):
    # M(a;b;z)/Gamma(b) with the series; callers keep b away from non-positive integers
    return hyp_pfq(Pfq((a,), (b,), z), prec).value / math.gamma(b)


def tricomi_u(a: float, b: float, z: float, prec: Precision = DEFAULT_PRECISION) -> ValueEstimate:
    """Tricomi U(a; b; z) for real z > 0.

    Away from integer b the two-Kummer-function combination is used;
    within 1e-6 of an integer b the logarithmic limit form is summed.
    """
    if not z > 0:
        raise DomainError("Tricomi U needs z > 0")
    if is_nonpositive_int(a):
        # U is then a polynomial (Laguerre); mpmath evaluates it exactly
        v = mp.hyperu(a, b, z)
        return ValueEstimate(float(v), 0.0, Method.Series, mp_value=v)
    n_b = round(b)
    if abs(b - n_b) < 1e-6:
        return _tricomi_log_case(a, b, z, prec)
    digits = prec.working_digits
    with mp.workdps(digits + 10):
        # parameter differences must be formed in mp: the combination cancels
        a, b, z = mp.mpf(a), mp.mpf(b), mp.mpf(z)
        # U = pi/sin(pi b) [M(a,b,z)/(G(1+a-b)G(b)) - z^{1-b} M(1+a-b,2-b,z)/(G(a)G(2-b))]
        t1 = mp.hyp1f1(a, b, z) / (mp.gamma(1 + a - b) * mp.gamma(b)) if not is_nonpositive_int(1 + a - b) else 0
        t2 = mp.power(z, 1 - b) * mp.hyp1f1(1 + a - b, 2 - b, z) / (mp.gamma(a) * mp.gamma(2 - b))
        v = mp.pi / mp.sin(mp.pi * b) * (t1 - t2)
        cancel = max(abs(t1), abs(t2)) / abs(t1 - t2) if t1 != t2 else mp.inf
    if cancel > mp.mpf(10) ** (digits - 4):
        v = mp.hyperu(a, b, z)
        return ValueEstimate(float(v), abs(float(v)) * 10.0 ** (-digits), Method.Oracle, flags=("cancellation",), mp_value=v)
    err = abs(float(v)) * float(cancel) * 10.0 ** (-digits)
    return ValueEstimate(float(v), err, Method.Series, mp_value=v)


def _tricomi_log_case(a, b, z, prec):
    n_b = int(round(b))
    if b != n_b:
        # near-integer b: mpmath perturbs the parameter internally
        with mp.workdps(prec.working_digits + 10):
            v = mp.hyperu(a, b, z)
        return ValueEstimate(float(v), abs(float(v)) * 10.0 ** (-prec.working_digits), Method.Oracle, flags=("log_case",), mp_value=v)
    with mp.workdps(prec.working_digits + 10):
        if n_b <= 0:
            # U(a, b, z) = z^{1-b} U(a-b+1, 2-b, z)
            inner = _tricomi_integer_b(mp.mpf(a) - n_b + 1, 1 - n_b, mp.mpf(z), prec)
            v = mp.power(z, 1 - n_b) * inner
        else:
            v = _tricomi_integer_b(mp.mpf(a), n_b - 1, mp.mpf(z), prec)
    return ValueEstimate(float(v), abs(float(v)) * 10.0 ** (-prec.working_digits + 2), Method.Series, flags=("log_case",), mp_value=v)


def _tricomi_integer_b(a, n, z, prec):
    """U(a, n+1, z) from the logarithmic series (a not a non-positive integer)."""
    lz = mp.log(z)
    s = mp.mpf(0)
    term = mp.mpf(1)  # (a)_k / ((n+1)_k k!) z^k
    k = 0
    tol = mp.mpf(10) ** (-prec.working_digits - 5)
    while True:
        piece = term * (lz + mp.digamma(a + k) - mp.digamma(1 + k) - mp.digamma(n + k + 1))
        s += piece
        if k > 3 and abs(piece) < tol * abs(s):
            break
        term *= (a + k) / ((n + 1 + k) * (k + 1)) * z
        k += 1
        if k > prec.max_terms:
            raise NonConvergent("logarithmic Tricomi series hit its term cap")
    rg = mp.rgamma(a - n)
    out = (-1) ** (n + 1) / mp.factorial(n) * rg * s
    if n:
        fin = mp.mpf(0)
        for k in range(1, n + 1):
            fin += mp.factorial(k - 1) * mp.rf(1 - a + k, n - k) / mp.factorial(n - k) * mp.power(z, -k)
        out += fin / mp.gamma(a)
    return out


def tricomi_u_small_z(a: float, b: float, z: float) -> tuple[str, float]:
    """Leading small-z behaviour of U(a; b; z) for b = 1 + a - beta style arguments.

    With ``b = 1 + alpha - beta`` the three cases are alpha > beta
    (b > 1), alpha = beta (b = 1, logarithmic) and alpha < beta (b < 1).
    Returns (branch label, leading value).
    """
    if not z > 0:
        raise DomainError("z must be positive")
    if b > 1 + 1e-12:
        return "gamma(b-1)/gamma(a)*z^(1-b)", math.exp(sc.gammaln(b - 1) - sc.gammaln(a)) * z ** (1 - b)
    if abs(b - 1) <= 1e-12:
        return "-[ln z+psi(a)+2C_E]/gamma(a)", -(math.log(z) + digamma(a) + 2 * C_EULER) / math.gamma(a)
    return "gamma(1-b)/gamma(a-b+1)", math.gamma(1 - b) / math.gamma(a - b + 1)


def inc_gamma_upper(a: float, x: float, prec: Precision = DEFAULT_PRECISION) -> ValueEstimate:
    """Upper incomplete gamma Gamma(a, x), any real a, x > 0.

    ``x == 0`` is accepted as the complete-gamma limit when ``a > 0``.
    For a > 0 the regularised scipy kernel is used; a <= 0 is brought up
    by the recurrence Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a.
    """
    if x == 0:
        if a > 0:
            return ValueEstimate(math.gamma(a), 0.0, Method.Series)
        raise DomainError("Gamma(a, 0) diverges for a <= 0")
    if not x > 0:
        raise DomainError("incomplete gamma needs x > 0")
    if 0 < a < 1e-3:
        # Gamma(a) Q(a, x) underflows in the regularised kernel as a -> 0+
        with mp.workdps(prec.working_digits):
            v = mp.gammainc(a, x)
        return ValueEstimate(float(v), abs(float(v)) * 10.0 ** (-prec.working_digits + 2), Method.Oracle, mp_value=v)
    if a > 0:
        v = float(sc.gammaincc(a, x) * sc.gamma(a))
        return ValueEstimate(v, 8 * EPS * abs(v), Method.Series)
    if abs(a - round(a)) < 1e-14:
        # a = -n: Gamma(-n, x) from E_1 and the recurrence; mpmath keeps this stable
        with mp.workdps(prec.working_digits):
            v = mp.gammainc(a, x)
        return ValueEstimate(float(v), abs(float(v)) * 10.0 ** (-prec.working_digits + 2), Method.Oracle, mp_value=v)
    n = int(math.ceil(-a))
    g = inc_gamma_upper(a + n, x, prec).value
    # downward: Gamma(s, x) = (Gamma(s+1, x) - x^s e^{-x}) / s
    s = a + n
    for _ in range(n):
        s -= 1.0
        g = (g - math.exp(s * math.log(x) - x)) / s
    return ValueEstimate(g, 64 * EPS * abs(g), Method.Series)


BESSEL_KINDS = ("J", "I", "Y")


def bessel(kind: str, nu: float, z: float) -> ValueEstimate:
    """Bessel J, modified Bessel I, or Neumann Y at real z > 0."""
    if kind not in BESSEL_KINDS:
        raise ValueError(f"kind must be one of {BESSEL_KINDS}")
    if not z > 0:
        raise DomainError("Bessel functions here need z > 0")
    if kind in ("J", "I") and nu < 0 and is_nonpositive_int(nu):
        n = int(round(-nu))
        # J_{-n} = (-1)^n J_n, I_{-n} = I_n
        r = bessel(kind, float(n), z)
        if kind == "J" and n % 2:
            r.value = -r.value
        return r
    if kind in ("J", "I") and z <= 12 and not is_nonpositive_int(nu + 1):
        sign = -1.0 if kind == "J" else 1.0
        f = hyp_pfq(Pfq((), (nu + 1,), sign * z * z / 4))
        pref = math.exp(nu * math.log(z / 2) - sc.gammaln(nu + 1)) * sc.gammasgn(nu + 1)
        return ValueEstimate(pref * f.value, abs(pref) * f.abs_err, f.method, terms_used=f.terms_used)
    fn = {"J": sc.jv, "I": sc.iv, "Y": sc.yv}[kind]
    v = float(fn(nu, z))
    return ValueEstimate(v, 16 * EPS * max(abs(v), 1e-300), Method.Series)


def digamma(x: float) -> float:
    """psi(x); raises PoleError at non-positive integers."""
    if is_nonpositive_int(x):
        raise PoleError(f"digamma has a pole at {x}")
    return float(sc.psi(x))
