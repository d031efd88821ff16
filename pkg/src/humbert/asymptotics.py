"""Leading large-t behaviour of Phi2, Phi3, Xi2, Phi3^(i) and Phi2^(i).

Every evaluator takes the point in the ``(x, y, t)`` form used by
:class:`EvalPoint`, i.e. it approximates F(-t x, -t y), and returns an
:class:`AsymValue` carrying the estimate and the matched regime.

``variant="corrected"`` (the default) gives forms re-derived by taking the
small-p limit of the Laplace images; ``variant="printed"`` reproduces the
formulas exactly as they are usually quoted, including their sign and
prefactor slips.  The two differ only in the branches listed in
FINDINGS.md.  All arithmetic is done in mpmath because several branches
grow like exp(|x| t) and overflow doubles long before t = 1e4.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import mpmath as mp
import numpy as np

from .errors import HumbertError, ParameterPole, RegimeError
from .types import EvalPoint, Method, ParamSet, ValueEstimate, is_nonpositive_int

VARIANTS = ("corrected", "printed")
ASYM_DPS = 30


@dataclass(frozen=True)
class AsymRegime:
    theorem: str
    branch: int
    guard: str


class AsymValue(NamedTuple):
    estimate: ValueEstimate
    regime: AsymRegime


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")


def _reject_poles(**named: float) -> None:
    for name, v in named.items():
        if is_nonpositive_int(v):
            raise ParameterPole(f"{name} = {v} is a non-positive integer")


def _wrap(v, regime: AsymRegime, flags: tuple[str, ...] = ()) -> AsymValue:
    f = float(mp.re(v)) if isinstance(v, mp.mpc) else float(v)
    return AsymValue(ValueEstimate(f, math.nan, Method.Asym, flags=flags, mp_value=v), regime)


def _nonzero(x: float, y: float) -> None:
    if x == 0 or y == 0:
        raise RegimeError("asymptotic forms need x != 0 and y != 0")


# ---------------------------------------------------------------------------
# Phi2

PHI2_GUARDS = ("x>0, y>0", "x>0, y<0", "x<0, y>0", "x<y<0", "y<x<0", "y=x<0")


def phi2_regime(x: float, y: float) -> AsymRegime:
    _nonzero(x, y)
    if x > 0 and y > 0:
        b = 0
    elif x > 0:
        b = 1
    elif y > 0:
        b = 2
    elif x < y:
        b = 3
    elif y < x:
        b = 4
    else:
        b = 5
    return AsymRegime("T1", b, PHI2_GUARDS[b])


def phi2_asym(beta, beta_p, gamma, x, y, t, variant: str = "corrected") -> AsymValue:
    _check_variant(variant)
    _reject_poles(gamma=gamma, beta=beta, beta_p=beta_p, beta_plus_beta_p=beta + beta_p,
                  gamma_minus_beta_sum=gamma - beta - beta_p)
    reg = phi2_regime(x, y)
    with mp.workdps(ASYM_DPS):
        b, bp, g = mp.mpf(beta), mp.mpf(beta_p), mp.mpf(gamma)
        x, y, t = mp.mpf(x), mp.mpf(y), mp.mpf(t)
        G = mp.gamma(g)
        s = b + bp - g
        # shifted branches grow like exp(|x| t); the printed rows carry exp(-|x| t)
        sgn = 1 if variant == "corrected" else -1
        if reg.branch == 0:
            v = G / mp.gamma(g - b - bp) * (t * x) ** -b * (t * y) ** -bp
        elif reg.branch == 1:
            v = G / mp.gamma(bp) * mp.exp(-y * t) * (t * (abs(y) + x)) ** -b * (t * abs(y)) ** s
        elif reg.branch == 2:
            v = G / mp.gamma(b) * mp.exp(-x * t) * (t * (y + abs(x))) ** -bp * (t * abs(x)) ** s
        elif reg.branch == 3:
            v = G / mp.gamma(b) * mp.exp(sgn * abs(x) * t) * (t * abs(x)) ** s * (t * abs(x - y)) ** -bp
        elif reg.branch == 4:
            last = b if variant == "corrected" else bp
            v = G / mp.gamma(bp) * mp.exp(sgn * abs(y) * t) * (t * abs(y)) ** s * (t * abs(y - x)) ** -last
        else:
            v = G / mp.gamma(b + bp) * mp.exp(sgn * abs(x) * t) * (t * abs(x)) ** s
        return _wrap(v, reg)


# ---------------------------------------------------------------------------
# Phi3

PHI3_GUARDS = ("x>0, y>0", "x>0, y<0", "x<0")


def phi3_regime(x: float, y: float) -> AsymRegime:
    _nonzero(x, y)
    b = 2 if x < 0 else (0 if y > 0 else 1)
    return AsymRegime("T2", b, PHI3_GUARDS[b])


def _bessel_form(nu, y, t, kind: str):
    """(t y)^(-nu/2) J_nu(2 sqrt(y t)) or the I-form with |y|."""
    ay = abs(y)
    z = 2 * mp.sqrt(ay * t)
    f = mp.besselj(nu, z) if kind == "J" else mp.besseli(nu, z)
    return (t * ay) ** (-nu / 2) * f


def phi3_asym(beta, gamma, x, y, t, variant: str = "corrected") -> AsymValue:
    _check_variant(variant)
    _reject_poles(gamma=gamma, beta=beta)
    reg = phi3_regime(x, y)
    with mp.workdps(ASYM_DPS):
        b, g = mp.mpf(beta), mp.mpf(gamma)
        x, y, t = mp.mpf(x), mp.mpf(y), mp.mpf(t)
        G = mp.gamma(g)
        if reg.branch < 2:
            v = G * (t * x) ** -b * _bessel_form(g - b - 1, y, t, "J" if reg.branch == 0 else "I")
        else:
            sgn = 1 if variant == "corrected" else -1
            v = G / mp.gamma(b) * (t * abs(x)) ** (b - g) * mp.exp(-y / abs(x) + sgn * abs(x) * t)
        return _wrap(v, reg)


# ---------------------------------------------------------------------------
# Xi2

XI2_GUARDS = ("y>0, alpha>beta", "y<0, alpha>beta", "y>0, alpha=beta", "y<0, alpha=beta",
              "y>0, alpha<beta", "y<0, alpha<beta")


def xi2_regime(alpha: float, beta: float, x: float, y: float) -> AsymRegime:
    if not x > 0:
        raise RegimeError("Xi2 asymptotics need x > 0 (the function has a cut for x < 0)")
    _nonzero(x, y)
    order = 0 if alpha > beta else (1 if alpha == beta else 2)
    b = 2 * order + (0 if y > 0 else 1)
    return AsymRegime("T3", b, XI2_GUARDS[b])


def xi2_equal_terms(alpha, gamma, x, y, t, variant: str = "corrected") -> dict:
    """Additive pieces of the alpha = beta branch, returned separately for diagnosis.

    Keys: ``prefactor``, ``bessel`` (pi/2 Y_nu for y > 0, or 0), ``log`` (the
    bracket multiplying J_nu / I_nu), ``j`` (J_nu or I_nu) and ``value``.
    """
    _check_variant(variant)
    with mp.workdps(ASYM_DPS):
        a, g = mp.mpf(alpha), mp.mpf(gamma)
        x, y, t = mp.mpf(x), mp.mpf(y), mp.mpf(t)
        ay = abs(y)
        nu = g - a - 1
        z = 2 * mp.sqrt(ay * t)
        pref = mp.gamma(g) / mp.gamma(a) * (t * x) ** -a * (t * ay) ** (-nu / 2)
        tail = -mp.digamma(a) - 2 * mp.euler
        if variant == "corrected":
            log = mp.log(t / ay) / 2 + mp.log(x) + tail
        else:
            log = mp.log(t * x) / 2 + mp.log(x / ay) + tail
        if y > 0:
            bes, j = mp.pi / 2 * mp.bessely(nu, z), mp.besselj(nu, z)
        else:
            bes, j = mp.mpf(0), mp.besseli(nu, z)
        return {"prefactor": pref, "bessel": bes, "log": log, "j": j, "value": pref * (bes + log * j)}


def xi2_asym(alpha, beta, gamma, x, y, t, variant: str = "corrected") -> AsymValue:
    _check_variant(variant)
    _reject_poles(gamma=gamma, alpha=alpha, beta=beta)
    reg = xi2_regime(alpha, beta, x, y)
    order = reg.branch // 2
    kind = "J" if y > 0 else "I"
    with mp.workdps(ASYM_DPS):
        a, b, g = mp.mpf(alpha), mp.mpf(beta), mp.mpf(gamma)
        X, Y, T = mp.mpf(x), mp.mpf(y), mp.mpf(t)
        lead = mp.gamma(g) if variant == "corrected" else mp.gamma(a)
        if order == 0:
            v = lead * mp.gamma(a - b) / mp.gamma(a) * (T * X) ** -b * _bessel_form(g - b - 1, Y, T, kind)
        elif order == 2:
            v = lead * mp.gamma(b - a) / mp.gamma(b) * (T * X) ** -a * _bessel_form(g - a - 1, Y, T, kind)
        else:
            v = xi2_equal_terms(alpha, gamma, x, y, t, variant)["value"]
        return _wrap(v, reg)


def xi2_prefactor_candidates(alpha, beta, gamma) -> dict[str, float]:
    """The two competing leading constants of the alpha != beta rows."""
    if alpha > beta:
        tail = math.gamma(alpha - beta) / math.gamma(alpha)
    else:
        tail = math.gamma(beta - alpha) / math.gamma(beta)
    return {"gamma_alpha": math.gamma(alpha) * tail, "gamma_gamma": math.gamma(gamma) * tail}


# ---------------------------------------------------------------------------
# Phi3^(i)

PHI3I_GUARDS = ("y>0, beta+gamma>3/2", "y>0, beta+gamma<3/2", "y<0")


def phi3i_regime(beta: float, gamma: float, x: float, y: float) -> AsymRegime:
    if not x > 0:
        raise RegimeError("Phi3^(i) asymptotics need x > 0")
    _nonzero(x, y)
    if y < 0:
        return AsymRegime("T4", 2, PHI3I_GUARDS[2])
    s = beta + gamma
    if s == 1.5:
        raise RegimeError("beta + gamma = 3/2 is the crossover; no leading form is available there")
    b = 0 if s > 1.5 else 1
    return AsymRegime("T4", b, PHI3I_GUARDS[b])


def phi3i_asym(beta, gamma, x, y, t, variant: str = "corrected") -> AsymValue:
    _check_variant(variant)
    reg = phi3i_regime(beta, gamma, x, y)
    # 1 - beta only enters the algebraic branch
    if reg.branch == 0:
        _reject_poles(gamma=gamma, one_minus_beta=1 - beta)
    else:
        _reject_poles(gamma=gamma)
    with mp.workdps(ASYM_DPS):
        b, g = mp.mpf(beta), mp.mpf(gamma)
        x, y, t = mp.mpf(x), mp.mpf(y), mp.mpf(t)
        G = mp.gamma(g)
        if reg.branch == 0:
            c = y / x
            if variant == "corrected":
                v = (g - 1) / (x * t) * mp.exp(c) * c ** (b - 1) * mp.gammainc(1 - b, c)
            else:
                v = (g - 1) / (x * t) * (mp.gamma(1 - b) * c ** (b - 1) - mp.hyp1f1(1, 2 - b, c) / (1 - b))
        elif reg.branch == 1:
            v = (G / mp.sqrt(mp.pi) * (y * t) ** (-(b + g + mp.mpf(0.5)) / 2) * (y / x) ** b
                 * mp.cos(2 * mp.sqrt(y * t) + mp.pi / 2 * (b - g - mp.mpf(0.5))))
        else:
            e = (b - g - mp.mpf(0.5)) / 2
            if variant == "printed":
                e = -e
            v = G / (2 * mp.sqrt(mp.pi)) * (abs(y) * t) ** e * (x * t) ** -b * mp.exp(2 * mp.sqrt(abs(y) * t))
        return _wrap(v, reg)


# ---------------------------------------------------------------------------
# Phi2^(i)


def phi2i_regime(x: float, y: float) -> AsymRegime:
    if x == y:
        raise RegimeError("x = y: use the symmetric (moment) form instead")
    if not (x > 0 and y > 0):
        raise RegimeError("Phi2^(i) asymptotics need x, y > 0")
    return AsymRegime("T5", 0 if x > y else 1, "x>y>0" if x > y else "y>x>0 (permuted)")


def phi2i_asym(beta, beta_p, gamma, x, y, t, variant: str = "corrected") -> AsymValue:
    _check_variant(variant)
    reg = phi2i_regime(x, y)
    if reg.branch == 1:
        beta, beta_p, x, y = beta_p, beta, y, x
    _reject_poles(gamma=gamma, gamma_minus_beta=gamma - beta, one_minus_beta=1 - beta)
    with mp.workdps(ASYM_DPS):
        b, bp, g = mp.mpf(beta), mp.mpf(beta_p), mp.mpf(gamma)
        x, y, t = mp.mpf(x), mp.mpf(y), mp.mpf(t)
        last = bp if variant == "corrected" else b
        first = (mp.gamma(g) / ((1 - b) * mp.gamma(g - b)) * (x * t) ** (bp - b) * ((x - y) * t) ** -last
                 * mp.hyp2f2(1 - b, bp, 2 - b, g - b, -x * y * t / (x - y)))
        second = ((g - 1) / (b - 1) / (x * t) * (x / (x - y)) ** bp
                  * mp.hyp2f1(1 - b, bp, 2 - b, -y / (x - y)))
        return _wrap(first + second, reg, ("permuted",) if reg.branch == 1 else ())


# ---------------------------------------------------------------------------
# ratio probes

ASYM_FAMILIES = ("Phi2", "Phi3", "Xi2", "Phi3i", "Phi2i")


def asym_value(params: ParamSet, x: float, y: float, t: float, variant: str = "corrected") -> AsymValue:
    """Dispatch to the evaluator for ``params.family``."""
    P = params
    name = P.family.value
    if name == "Phi2":
        return phi2_asym(P.beta, P.beta_p, P.gamma, x, y, t, variant)
    if name == "Phi3":
        return phi3_asym(P.beta, P.gamma, x, y, t, variant)
    if name == "Xi2":
        return xi2_asym(P.alpha, P.beta, P.gamma, x, y, t, variant)
    if name == "Phi3i":
        if P.lam != 1:
            raise RegimeError("integrated asymptotics hold for lambda = 1")
        return phi3i_asym(P.beta, P.gamma, x, y, t, variant)
    if name == "Phi2i":
        if P.lam != 1:
            raise RegimeError("integrated asymptotics hold for lambda = 1")
        return phi2i_asym(P.beta, P.beta_p, P.gamma, x, y, t, variant)
    raise RegimeError(f"no asymptotic form for {name}")


def _phase(params: ParamSet, x: float, y: float, regime: AsymRegime):
    """Phase function theta(t) of the oscillating factor, or None if the branch does not oscillate."""
    if regime.theorem == "T2" and regime.branch == 0:
        nu = params.gamma - params.beta - 1
    elif regime.theorem == "T3" and regime.branch in (0, 4):
        nu = params.gamma - min(params.alpha, params.beta) - 1
    elif regime.theorem == "T4" and regime.branch == 1:
        off = math.pi / 2 * (params.beta - params.gamma - 0.5)
        return lambda t: 2 * math.sqrt(y * t) + off
    else:
        return None
    return lambda t: 2 * math.sqrt(y * t) - nu * math.pi / 2 - math.pi / 4


def crest_grid(params: ParamSet, x: float, y: float, t_grid: Sequence[float]) -> list[float]:
    """Move each t of an oscillating branch to the nearest crest (phase a multiple of pi).

    Non-oscillating branches are returned unchanged.
    """
    regime = asym_value(params, x, y, t_grid[0]).regime
    theta = _phase(params, x, y, regime)
    if theta is None:
        return [float(t) for t in t_grid]
    out = []
    for t in t_grid:
        k = max(1, round(theta(t) / math.pi))
        # solve theta(t') = k pi; theta is 2 sqrt(y t) + const
        const = theta(t) - 2 * math.sqrt(y * t)
        root = (k * math.pi - const) / 2
        while root <= 0:
            k += 1
            root = (k * math.pi - const) / 2
        out.append(root * root / y)
    return out


@dataclass
class RatioProbe:
    t_grid: list[float]
    exact: list
    asym: list
    ratios: list[float]
    branch: str
    trend: float | None
    flags: tuple[str, ...] = ()
    valid: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise ValueError("t_grid must be strictly increasing")

    @property
    def deviations(self) -> list[float]:
        return [abs(r - 1) for r in self.ratios]

    @property
    def decreasing(self) -> bool:
        # deviations at rounding level count as converged, not as an increase
        d = [max(v, 2.0**-52) for v, ok in zip(self.deviations, self.valid) if ok]
        return all(b <= a for a, b in zip(d, d[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "exact", "asym", "ratio", "branch"])
        for t, e, a, r in zip(self.t_grid, self.exact, self.asym, self.ratios):
            w.writerow([_fmt(t), _fmt(e), _fmt(a), _fmt(r), self.branch])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (mp.mpf, mp.mpc)):
        return mp.nstr(mp.re(v), 17)
    return repr(float(v))


def fit_trend(t_grid: Sequence[float], ratios: Sequence[float]) -> float | None:
    """Least-squares slope of log|ratio - 1| against log t; None for fewer than two usable points."""
    # an exact match is clamped to rounding level rather than dropped
    pts = [(math.log(t), math.log(max(abs(r - 1), 2.0**-53))) for t, r in zip(t_grid, ratios) if math.isfinite(r)]
    if len(pts) < 2:
        return None
    a = np.array(pts)
    return float(np.polyfit(a[:, 0], a[:, 1], 1)[0])


def default_exact(params: ParamSet, x: float, y: float, t: float):
    """Reference value at large t.

    Xi2 uses the convolution integral (fast and accurate in double for
    x > 0); every other family uses Talbot inversion of its Laplace image.
    """
    from .euler_reps import eval_euler
    from .laplace_bridge import ILTConfig, eval_ilt

    if params.family.value == "Xi2":
        return mp.mpf(eval_euler(params, EvalPoint(x, y, t)).value)
    return eval_ilt(params, EvalPoint(x, y, t), ILTConfig(nodes=32, target=1e-9)).mp_value


def ratio_probe(
    params: ParamSet,
    x: float,
    y: float,
    t_grid: Sequence[float],
    exact: Callable[[ParamSet, float, float, float], object] | None = None,
    variant: str = "corrected",
    crest: bool = True,
) -> RatioProbe:
    """Ratios exact/asym on ``t_grid`` and the fitted drift of |ratio - 1|.

    Oscillating branches are moved to crests of the asymptotic form when
    ``crest`` is set, so the ratio is never taken near a zero.  Entries where
    the exact route fails are kept as NaN and marked invalid.
    """
    exact = exact or default_exact
    grid = crest_grid(params, x, y, t_grid) if crest else [float(t) for t in t_grid]
    ex, asy, rat, ok = [], [], [], []
    branch = None
    for t in grid:
        av = asym_value(params, x, y, t, variant)
        branch = branch or av.regime.guard
        a = av.estimate.mp_value
        try:
            e = exact(params, x, y, t)
            r = float(mp.re(e) / mp.re(a))
            good = math.isfinite(r)
        except HumbertError:
            e, r, good = None, math.nan, False
        ex.append(e)
        asy.append(a)
        rat.append(r)
        ok.append(good)
    flags = ()
    trend = fit_trend(grid, rat)
    if trend is None:
        flags = ("trend_undefined",)
    return RatioProbe(grid, ex, asy, rat, branch or "", trend, flags, ok)


def xi2_prefactor_probe(alpha, beta, gamma, x, y, t_grid, exact=None) -> dict:
    """Decide between the two candidate constants of the alpha != beta Xi2 rows.

    Both candidates share every t-dependent factor, so their ratios to the
    exact value differ by the constant Gamma(gamma)/Gamma(alpha).  The one
    whose ratio drifts to 1 is reported as ``convergent``; the other tends
    to a constant that is reported as ``other_limit``.
    """
    if alpha == beta:
        raise RegimeError("the prefactor question concerns alpha != beta")
    P = ParamSet.make("Xi2", alpha=alpha, beta=beta, gamma=gamma)
    out = {}
    for variant, key in (("printed", "gamma_alpha"), ("corrected", "gamma_gamma")):
        rp = ratio_probe(P, x, y, t_grid, exact=exact, variant=variant)
        out[key] = rp
    dev = {k: abs(rp.ratios[-1] - 1) for k, rp in out.items()}
    winner = min(dev, key=dev.get)
    loser = max(dev, key=dev.get)
    return {
        "probes": out,
        "convergent": winner,
        "other_limit": out[loser].ratios[-1],
        "candidates": xi2_prefactor_candidates(alpha, beta, gamma),
        "unique": out[winner].trend is not None and out[winner].trend < 0 and dev[loser] > 10 * dev[winner],
    }
