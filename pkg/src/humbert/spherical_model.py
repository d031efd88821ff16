"""Spherical-constraint equation of the dissipative quantum spherical model.

The constraint, for the integrated Lagrange multiplier Z(t), reads

    e^(gamma Z) (4 pi gamma t)^(d/2)
        = 1/2 Phi3(d/2; 3/2; -g Z t, -(g/gamma) t)
          + C g^2 t^2 int_0^1 Phi3(d/2; 3/2; -(g/gamma) t w, -g Z t w) dw

with the argument order of the integrated term kept as written (the
``swapped`` flag exchanges it).  Values at large t are produced by sums
whose terms are all computed in mpmath:

* the first term by a Neumann series in Bessel functions,
  Phi3(b; c; X, Y) = Gamma(c) |Y|^((1-c)/2) sum_m (b)_m/m! (X/sqrt|Y|)^m J_(c-1+m)(2 sqrt|Y|);
* the integrated term by sum_n Y^n/(n! (c)_n (n+1)) 2F2(b, n+1; c+n, n+2; X),
  whose terms share one sign for the physical Z < 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath as mp
import numpy as np
from scipy.optimize import brentq
from scipy.special import ive

from .errors import HumbertError, NoBracket, NonConvergent
from .types import EvalPoint, ParamSet

BACKENDS = ("series", "ilt", "euler", "oracle")
GAMMA_C = 1.5
BASE_DPS = 30


@dataclass(frozen=True)
class ModelConstants:
    d: float
    g: float = 1.0
    gamma_diss: float = 1.0
    C: float = 1.0

    def __post_init__(self):
        for name in ("d", "g", "gamma_diss"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive")
        if not (math.isfinite(self.C) and self.C >= 0):
            raise ValueError("C must be non-negative")

    @property
    def beta(self) -> float:
        return self.d / 2


@dataclass
class ConstraintState:
    t: float
    Z: float
    residual: float
    backend: str = "series"
    flags: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {"t": self.t, "Z": self.Z, "residual": self.residual, "backend": self.backend, "flags": list(self.flags)}


# ---------------------------------------------------------------------------
# mpmath sums


def _bessel_j_run(nu0, z, count: int) -> list:
    """J_(nu0+m)(z) for m = 0..count-1 by downward recurrence, normalised at the low end."""
    n_top = int(max(count, float(z)) * 1.2) + 60
    f_next, f = mp.mpf(0), mp.mpf("1e-30")
    vals = [mp.mpf(0)] * (n_top + 1)
    vals[n_top] = f
    for k in range(n_top, 0, -1):
        f_prev = 2 * (nu0 + k) / z * f - f_next
        f_next, f = f, f_prev
        vals[k - 1] = f
    j0, j1 = mp.besselj(nu0, z), mp.besselj(nu0 + 1, z)
    ref = (j0, vals[0]) if abs(j0) > abs(j1) else (j1, vals[1])
    c = ref[0] / ref[1]
    return [v * c for v in vals[:count]]


def _series_until(term_fn, dps: int, max_terms: int = 20000, min_terms: int = 4):
    """Sum term_fn(k) for k = 0, 1, ... until the terms are negligible and shrinking."""
    total = mp.mpf(0)
    biggest = mp.mpf(0)
    prev = None
    small = 0
    for k in range(max_terms):
        a = term_fn(k)
        total += a
        biggest = max(biggest, abs(a))
        if k >= min_terms and abs(a) <= mp.mpf(10) ** (-dps) * abs(total) and (prev is None or abs(a) <= prev):
            small += 1
            if small >= 3:
                return total, biggest, k + 1
        else:
            small = 0
        prev = abs(a)
    raise NonConvergent(f"series did not settle within {max_terms} terms")


def phi3_neumann(beta: float, gamma: float, X, Y, dps: int = BASE_DPS):
    """Phi3(beta; gamma; X, Y) for Y < 0 via the Bessel-J Neumann series (mpmath value)."""
    extra = 0
    while True:
        with mp.workdps(dps + extra):
            # parameters too: beta + m in float would cap the sums at double precision
            beta, gamma = mp.mpf(beta), mp.mpf(gamma)
            X, Y = mp.mpf(X), mp.mpf(Y)
            if Y >= 0:
                raise ValueError("Neumann form used here needs Y < 0")
            w = mp.sqrt(-Y)
            z = 2 * w
            r = X / w
            # enough orders to pass the peak of r^m/m! and the Bessel turning point
            count = int(abs(r) * 3 + 4 * mp.sqrt(abs(r) + 1) + 60)
            while True:
                J = _bessel_j_run(gamma - 1, z, count)
                coef = mp.mpf(1)
                total, biggest = mp.mpf(0), mp.mpf(0)
                done = False
                small = 0
                for m in range(count):
                    a = coef * J[m]
                    total += a
                    biggest = max(biggest, abs(a))
                    if m > abs(r) and abs(a) <= mp.mpf(10) ** (-(dps + extra)) * max(abs(total), mp.mpf(10) ** -(dps)):
                        small += 1
                        if small >= 3:
                            done = True
                            break
                    else:
                        small = 0
                    coef *= r * (beta + m) / (m + 1)
                if done:
                    break
                count *= 2
            val = mp.gamma(gamma) * mp.power(w, 1 - gamma) * total
            lost = mp.log10(biggest / abs(total)) if total != 0 else dps
            if lost < extra + 10 or extra > 400:
                return +val
            extra = int(lost) + 15


def phi3i_moment_sum(beta: float, gamma: float, X, Y, dps: int = BASE_DPS):
    """int_0^1 Phi3(beta; gamma; X w, Y w) dw = sum_n Y^n/(n! (gamma)_n (n+1)) 2F2(beta, n+1; gamma+n, n+2; X)."""
    extra = 0
    while True:
        with mp.workdps(dps + extra):
            # parameters too: beta + m in float would cap the sums at double precision
            beta, gamma = mp.mpf(beta), mp.mpf(gamma)
            X, Y = mp.mpf(X), mp.mpf(Y)
            state = {"c": mp.mpf(1)}

            def term(n):
                if n:
                    state["c"] *= Y / (n * (gamma + n - 1))
                return state["c"] / (n + 1) * mp.hyp2f2(beta, n + 1, gamma + n, n + 2, X)

            total, biggest, _ = _series_until(term, dps + extra)
            lost = mp.log10(biggest / abs(total)) if total != 0 else dps
            if lost < extra + 10 or extra > 400:
                return +total
            extra = int(lost) + 15


def phi3i_moment_sum_swapped(beta: float, gamma: float, X, Y, dps: int = BASE_DPS):
    """Same moment integral summed over the first index: sum_m (beta)_m X^m/(m! (gamma)_m (m+1)) 1F2(m+1; gamma+m, m+2; Y)."""
    extra = 0
    while True:
        with mp.workdps(dps + extra):
            # parameters too: beta + m in float would cap the sums at double precision
            beta, gamma = mp.mpf(beta), mp.mpf(gamma)
            X, Y = mp.mpf(X), mp.mpf(Y)
            state = {"c": mp.mpf(1)}

            def term(m):
                if m:
                    state["c"] *= (beta + m - 1) * X / (m * (gamma + m - 1))
                return state["c"] / (m + 1) * mp.hyp1f2(m + 1, gamma + m, m + 2, Y)

            total, biggest, _ = _series_until(term, dps + extra)
            lost = mp.log10(biggest / abs(total)) if total != 0 else dps
            if lost < extra + 10 or extra > 400:
                return +total
            extra = int(lost) + 15


# ---------------------------------------------------------------------------
# constraint


def lhs(Z: float, t: float, mc: ModelConstants):
    with mp.workdps(BASE_DPS):
        return mp.exp(mc.gamma_diss * mp.mpf(Z)) * (4 * mp.pi * mc.gamma_diss * mp.mpf(t)) ** (mp.mpf(mc.d) / 2)


def _route_value(params: ParamSet, x: float, y: float, t: float, backend: str):
    from .euler_reps import eval_euler
    from .laplace_bridge import eval_ilt
    from .series_core import eval_oracle

    pt = EvalPoint(x, y, t)
    if backend == "ilt":
        return eval_ilt(params, pt).mp_value
    if backend == "euler":
        return mp.mpf(eval_euler(params, pt).value)
    r = eval_oracle(params, pt)
    return r.mp_value if r.mp_value is not None else mp.mpf(r.value)


def rhs_terms(Z: float, t: float, mc: ModelConstants, backend: str = "series", swapped: bool = False):
    """The two right-hand terms (mpmath values): 1/2 Phi3 and C g^2 t^2 times the moment integral."""
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    b, g, gd = mc.beta, mc.g, mc.gamma_diss
    with mp.workdps(BASE_DPS):
        Zm, tm = mp.mpf(Z), mp.mpf(t)
        # function arguments X = -x t, Y = -y t
        x1, y1 = g * Z, g / gd
        x2, y2 = (g * Z, g / gd) if swapped else (g / gd, g * Z)
        pref = mc.C * mp.mpf(g) ** 2 * tm**2
        if backend == "series":
            X1, Y1 = -x1 * tm, -y1 * tm
            r1 = phi3_neumann(b, GAMMA_C, X1, Y1) if Y1 < 0 else _route_value(
                ParamSet.make("Phi3", beta=b, gamma=GAMMA_C), x1, y1, t, "oracle")
            X2, Y2 = -x2 * tm, -y2 * tm
            r2 = (phi3i_moment_sum_swapped(b, GAMMA_C, X2, Y2) if swapped else phi3i_moment_sum(b, GAMMA_C, X2, Y2))
        else:
            r1 = _route_value(ParamSet.make("Phi3", beta=b, gamma=GAMMA_C), x1, y1, t, backend)
            r2 = _route_value(ParamSet.make("Phi3i", beta=b, gamma=GAMMA_C, lam=1), x2, y2, t, backend)
        del Zm
        return r1 / 2, pref * r2


def constraint_residual(
    Z: float, t: float, mc: ModelConstants, backend: str = "series", swapped: bool = False
) -> float:
    """LHS - RHS of the constraint (may be +-inf in double when the terms overflow)."""
    r1, r2 = rhs_terms(Z, t, mc, backend, swapped)
    with mp.workdps(BASE_DPS):
        return float(lhs(Z, t, mc) - r1 - r2)


def _scaled(Z: float, t: float, mc: ModelConstants, backend: str, swapped: bool) -> float:
    """asinh((RHS - LHS)/LHS): same root and sign as the residual, always finite."""
    r1, r2 = rhs_terms(Z, t, mc, backend, swapped)
    with mp.workdps(BASE_DPS):
        L = lhs(Z, t, mc)
        return float(mp.asinh((r1 + r2 - L) / L))


def _scan_log_bracket(f, u_lo: float, u_hi: float, expand: int, t: float) -> tuple[float, float]:
    """First decade in log|Z| (walking away from Z = 0) on which f changes sign.

    Walking outwards keeps every evaluation near the root cheap: the
    right-hand side grows like exp(g |Z| t) and large |Z| is costly.
    """
    step = math.log(10.0)
    for attempt in range(expand + 1):
        u = u_lo
        fu = f(u)
        while u < u_hi:
            v = min(u + step, u_hi)
            fv = f(v)
            if fu * fv <= 0:
                return u, v
            u, fu = v, fv
        if attempt == expand:
            break
        u_lo, u_hi = u_lo - step, u_hi + step
    raise NoBracket(
        f"constraint residual has one sign for |Z| in [{math.exp(u_lo):g}, {math.exp(u_hi):g}] at t={t:g}"
    )


def solve_z(
    t: float,
    mc: ModelConstants,
    bracket: tuple[float, float] | None = None,
    backend: str = "series",
    swapped: bool = False,
    rel_tol: float = 1e-8,
) -> ConstraintState:
    """Root Z(t) of the constraint.

    Brent's method (bisection safeguarded secant) runs in log|Z| when the
    bracket is negative, otherwise in Z.  Without an explicit bracket the
    default [-10/gamma, -1e-8] is widened geometrically until it brackets.
    """
    flags: list[str] = []
    if bracket is None:
        lo, hi = -10.0 / mc.gamma_diss, -1e-8
        expand = 6
    else:
        lo, hi = sorted(map(float, bracket))
        expand = 0
    log_space = hi < 0

    def fz(Z):
        return _scaled(Z, t, mc, backend, swapped)

    def f(u):
        return fz(-math.exp(u)) if log_space else fz(u)

    if log_space:
        A, B = _scan_log_bracket(f, math.log(-hi), math.log(-lo), expand, t)
    else:
        A, B = lo, hi
        if f(A) * f(B) > 0:
            raise NoBracket(f"constraint residual has one sign on [{lo:g}, {hi:g}] at t={t:g}")
    root = brentq(f, A, B, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    Z = -math.exp(root) if log_space else root
    # secant polish on Z itself
    res = fz(Z)
    z0, r0 = Z, res
    z1 = Z * (1 + 1e-9) if Z else 1e-12
    r1 = fz(z1)
    for _ in range(6):
        if abs(r1) < rel_tol / 10 or r1 == r0:
            break
        z0, z1, r0 = z1, z1 - r1 * (z1 - z0) / (r1 - r0), r1
        r1 = fz(z1)
    if abs(r1) < abs(res):
        Z, res = z1, r1
    if abs(res) >= rel_tol:
        flags.append("tolerance_not_met")
    if mc.d >= 2 and Z >= 0:
        flags.append("positive_Z")
    # LHS - RHS, the same sign convention as constraint_residual
    return ConstraintState(t, Z, -float(math.sinh(res)) * float(lhs(Z, t, mc)), backend, tuple(flags))


# ---------------------------------------------------------------------------
# scaling probe


@dataclass
class ScalingReport:
    d: float
    t_grid: list[float]
    Z: list[float]
    pure_power_exponent: float | None
    pure_power_rms: float | None
    log_model_exponent: float | None
    log_model_rms: float | None
    preferred: str | None
    flags: tuple[str, ...] = ()
    states: list[ConstraintState] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            "schema": 1,
            "d": self.d,
            "t": self.t_grid,
            "Z": self.Z,
            "pure_power": {"exponent": self.pure_power_exponent, "rms": self.pure_power_rms},
            "log_squared": {"exponent": self.log_model_exponent, "rms": self.log_model_rms},
            "preferred": self.preferred,
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[0]), rms


def fit_scaling(t_grid: Sequence[float], Z: Sequence[float]) -> dict:
    """Exponent a of |Z| ~ t^a and of |Z| ~ t^a ln^2 t, with rms residuals of the log fits."""
    t = np.asarray(t_grid, dtype=float)
    z = np.abs(np.asarray(Z, dtype=float))
    if len(t) < 2:
        return {"pure": (None, None), "log": (None, None)}
    lt = np.log(t)
    pure = _linfit(lt, np.log(z))
    logm = _linfit(lt, np.log(z) - 2 * np.log(lt))
    return {"pure": pure, "log": logm}


def scaling_probe(
    mc: ModelConstants, t_grid: Sequence[float], backend: str = "series", swapped: bool = False
) -> ScalingReport:
    """Solve on ``t_grid`` and fit both candidate long-time laws."""
    states = [solve_z(t, mc, backend=backend, swapped=swapped) for t in t_grid]
    Zs = [s.Z for s in states]
    fits = fit_scaling(t_grid, Zs)
    flags = set()
    for s in states:
        flags.update(s.flags)
    if len(t_grid) < 2:
        flags.add("fit_undefined")
        preferred = None
    else:
        preferred = "pure_power" if fits["pure"][1] <= fits["log"][1] else "log_squared"
    return ScalingReport(
        mc.d, [float(t) for t in t_grid], Zs, fits["pure"][0], fits["pure"][1], fits["log"][0], fits["log"][1],
        preferred, tuple(sorted(flags)), states,
    )


def states_csv(states: Sequence[ConstraintState]) -> str:
    lines = ["t,Z,residual,method_backend"]
    for s in states:
        lines.append(f"{s.t!r},{s.Z!r},{s.residual!r},{s.backend}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# closed-form anchor for the first integral


def i1_exact(Z: float, t: float, mc: ModelConstants) -> float:
    """e^(-gamma Z) (e^(-2 gamma t) I_0(2 gamma t))^d."""
    return math.exp(-mc.gamma_diss * Z) * float(ive(0, 2 * mc.gamma_diss * t)) ** mc.d


def i1_asymptotic(Z: float, t: float, mc: ModelConstants) -> float:
    return math.exp(-mc.gamma_diss * Z) * (4 * math.pi * mc.gamma_diss * t) ** (-mc.d / 2)


def backend_spread(Z: float, t: float, mc: ModelConstants, backends: Sequence[str] = ("series", "oracle", "euler")) -> float:
    """Largest relative difference of the right-hand side between backends."""
    vals = []
    for b in backends:
        try:
            r1, r2 = rhs_terms(Z, t, mc, b)
        except HumbertError:
            continue
        vals.append(r1 + r2)
    ref = vals[0]
    return max(float(abs(v - ref) / abs(ref)) for v in vals)
