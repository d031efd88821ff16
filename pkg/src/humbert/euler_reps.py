"""Integral representations evaluated by quadrature.

The unit-interval convolution form

    F = Gamma(g) / (Gamma(g - eps) Gamma(eps))
        * int_0^1 u^(g-eps-1) (1-u)^(eps-1) F1(-t x u) F2(-t y (1-u)) du

defines the principal branch of the Appell/Humbert families wherever the
inner one-variable factors are defined, including outside the double
series' convergence domains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special as sc

from .errors import DomainError
from .hyper1d import hyp_pfq, pfq_array, Pfq
from .quadrature import (
    QuadratureConfig,
    de_semi_infinite,
    de_unit,
    gauss_jacobi_unit,
    weighted_unit,
)
from .types import EvalPoint, Family, KdFSpec, Method, ParamSet, Precision, ValueEstimate

EPS = np.finfo(float).eps
CUT_MARGIN = 1e-12
DEFAULT_QUAD = QuadratureConfig()

CONVOLUTION_FAMILIES = (Family.Phi3, Family.Phi2, Family.Xi2, Family.Xi1, Family.F3)


@dataclass(frozen=True)
class FactorSpec:
    """``v^exponent * pFq(upper; lower; coeff * v)``."""

    exponent: float
    upper: tuple[float, ...]
    lower: tuple[float, ...]
    coeff: float

    def values(self, v: np.ndarray) -> np.ndarray:
        return pfq_array(self.upper, self.lower, self.coeff * v)


@dataclass(frozen=True)
class ConvolutionKernel:
    family: Family
    epsilon: float
    f1: FactorSpec
    f2: FactorSpec

    def __post_init__(self):
        if not (self.f1.exponent > -1 and self.f2.exponent > -1):
            raise DomainError(f"need 0 < eps < gamma, got eps={self.epsilon}")


def convolution_kernel(params: ParamSet, x: float, y: float, eps: float | None = None) -> ConvolutionKernel:
    """Factor pair of the convolution table for ``params`` at (x, y)."""
    fam = params.family
    g = params.gamma
    if eps is None:
        eps = g / 2.0
    if not 0 < eps < g:
        raise DomainError(f"eps must lie in (0, gamma={g}), got {eps}")
    e1 = g - eps - 1.0
    e2 = eps - 1.0
    p = params
    if fam is Family.Phi3:
        f1 = FactorSpec(e1, (p.beta,), (g - eps,), -x)
        f2 = FactorSpec(e2, (), (eps,), -y)
    elif fam is Family.Phi2:
        f1 = FactorSpec(e1, (p.beta,), (g - eps,), -x)
        f2 = FactorSpec(e2, (p.beta_p,), (eps,), -y)
    elif fam is Family.Xi2:
        f1 = FactorSpec(e1, (p.alpha, p.beta), (g - eps,), -x)
        f2 = FactorSpec(e2, (), (eps,), -y)
    elif fam is Family.Xi1:
        f1 = FactorSpec(e1, (p.alpha, p.beta), (g - eps,), -x)
        f2 = FactorSpec(e2, (p.beta_p,), (eps,), -y)
    elif fam is Family.F3:
        f1 = FactorSpec(e1, (p.alpha, p.beta), (g - eps,), -x)
        f2 = FactorSpec(e2, (p.alpha_p, p.beta_p), (eps,), -y)
    else:
        raise DomainError(f"{fam.value} has no convolution representation")
    return ConvolutionKernel(fam, eps, f1, f2)


def _log_norm(g: float, eps: float) -> tuple[float, float]:
    lg = sc.gammaln(g) - sc.gammaln(g - eps) - sc.gammaln(eps)
    sg = sc.gammasgn(g) * sc.gammasgn(g - eps) * sc.gammasgn(eps)
    return lg, sg


def _check_cut(kernel: ConvolutionKernel, pt: EvalPoint) -> None:
    # 2F1 factors: argument -x t u must stay below 1, i.e. x t > -1
    for f, val, name in ((kernel.f1, pt.x, "x"), (kernel.f2, pt.y, "y")):
        if len(f.upper) == len(f.lower) + 1 and val * pt.t <= -1.0 + CUT_MARGIN:
            raise DomainError(
                f"{kernel.family.value}: {name}*t = {val * pt.t:.6g} is on or beyond the cut (needs > -1)"
            )


def _convolve(
    norm_log: float,
    norm_sign: float,
    g1: Callable[[np.ndarray], np.ndarray],
    g2: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    t: float,
    q: QuadratureConfig,
    flags: tuple[str, ...] = (),
) -> ValueEstimate:
    def integrand(u, v):
        return g1(t * u) * g2(t * v)

    r = weighted_unit(integrand, a, b, q)
    norm = norm_sign * math.exp(norm_log)
    val = norm * r.value
    err = abs(norm) * r.abs_err + 8 * EPS * abs(val)
    return ValueEstimate(val, err, Method.Euler, nodes_used=r.nodes, flags=flags)


def eval_euler(
    params: ParamSet,
    pt: EvalPoint,
    eps: float | None = None,
    q: QuadratureConfig = DEFAULT_QUAD,
) -> ValueEstimate:
    """Principal-branch value from the unit-interval convolution integral.

    Integrated families are dispatched to :func:`eval_integrated_by_w` with
    the convolution integral as the inner evaluator.
    """
    if params.family in (Family.Phi2i, Family.Phi3i):
        return eval_integrated_by_w(params, pt, q, inner="euler", eps=eps)
    if params.family in (Family.F2, Family.Psi1, Family.Psi2):
        return eval_semi_infinite(params, pt, q)
    kernel = convolution_kernel(params, pt.x, pt.y, eps)
    _check_cut(kernel, pt)
    lg, sg = _log_norm(params.gamma, kernel.epsilon)
    return _convolve(lg, sg, kernel.f1.values, kernel.f2.values, kernel.f1.exponent, kernel.f2.exponent, pt.t, q)


# ---------------------------------------------------------------------------
# semi-infinite representations


def _semi_infinite_factors(params: ParamSet, X: float, Y: float):
    p = params
    fam = p.family
    if fam is Family.F2:
        return (p.beta,), (p.gamma,), (p.beta_p,), (p.gamma_p,)
    if fam is Family.Psi1:
        return (p.beta,), (p.gamma,), (), (p.gamma_p,)
    if fam is Family.Psi2:
        return (), (p.gamma,), (), (p.gamma_p,)
    raise DomainError(f"{fam.value} has no semi-infinite representation")


def eval_semi_infinite(params: ParamSet, pt: EvalPoint, q: QuadratureConfig = DEFAULT_QUAD) -> ValueEstimate:
    """``1/Gamma(a) int_0^inf e^-u u^(a-1) F(X u) G(Y u) du`` at ``(X, Y) = (-t x, -t y)``."""
    a = params.alpha
    if not a > 0:
        raise DomainError("semi-infinite representation needs a > 0")
    X, Y = pt.args
    ux, lx, uy, ly = _semi_infinite_factors(params, X, Y)
    # 1F1(b; c; z u) grows like e^{z u}; 0F1 grows sub-exponentially
    growth = 0.0
    if ux:
        growth += max(X, 0.0)
    if uy:
        growth += max(Y, 0.0)
    decay = 1.0 - growth
    if decay <= 1e-3:
        raise DomainError(f"{params.family.value}: integrand does not decay (growth rate {growth:.4g} >= 1)")
    lga = sc.gammaln(a)

    def f(u):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            w = np.exp(-u + (a - 1.0) * np.log(u) - lga)
        good = w > 0
        out = np.zeros_like(u)
        if good.any():
            uu = u[good]
            out[good] = w[good] * pfq_array(ux, lx, X * uu) * pfq_array(uy, ly, Y * uu)
        return out

    r = de_semi_infinite(f, tol=q.target_tol, decay=decay)
    return ValueEstimate(r.value, r.abs_err + 8 * EPS * abs(r.value), Method.Euler, nodes_used=r.nodes)


# ---------------------------------------------------------------------------
# integrated families as moment integrals over w


def _inner_evaluator(inner: str, eps: float | None, q: QuadratureConfig):
    from . import series_core

    if inner == "series":
        return lambda p, pt: series_core.eval_series(p, pt)
    if inner == "oracle":
        return lambda p, pt: series_core.eval_oracle(p, pt)
    if inner == "euler":
        return lambda p, pt: eval_euler(p, pt, eps, q)
    if inner == "ilt":
        from .laplace_bridge import eval_ilt

        return lambda p, pt: eval_ilt(p, pt)
    raise ValueError(f"unknown inner evaluator {inner!r}")


_INNER_METHOD = {"series": Method.Series, "oracle": Method.Oracle, "euler": Method.Euler, "ilt": Method.ILT}


def _plain_of(params: ParamSet) -> ParamSet:
    if params.family is Family.Phi2i:
        return ParamSet.make("Phi2", beta=params.beta, beta_p=params.beta_p, gamma=params.gamma)
    if params.family is Family.Phi3i:
        return ParamSet.make("Phi3", beta=params.beta, gamma=params.gamma)
    raise DomainError(f"{params.family.value} is not an integrated family")


def eval_integrated_by_w(
    params: ParamSet,
    pt: EvalPoint,
    q: QuadratureConfig = DEFAULT_QUAD,
    inner: str = "series",
    eps: float | None = None,
) -> ValueEstimate:
    """``int_0^1 w^(lam-1) Phi(...; -t x w, -t y w) dw`` for lam > 0.

    For lam = 1 this is the moment-integral form of the integrated
    functions; other positive lam follow from the same term-wise identity
    ``1/(s + lam) = int_0^1 w^(s+lam-1) dw``.
    """
    lam = params.lam
    if not lam > 0:
        raise DomainError("moment-integral form needs lambda > 0")
    plain = _plain_of(params)
    ev = _inner_evaluator(inner, eps, q)
    errs: list[float] = []
    flags: set[str] = set()

    def f(w, _v):
        out = np.empty_like(w)
        for i, wi in enumerate(w):
            r = ev(plain, EvalPoint(pt.x * wi, pt.y * wi, pt.t))
            out[i] = r.value
            errs.append(r.abs_err)
            flags.update(r.flags)
        return out

    # the integrand is entire in w; Gauss-Jacobi absorbs w^(lam-1)
    r = gauss_jacobi_unit(f, lam - 1.0, 0.0, tol=max(q.target_tol, 1e-13), n0=12)
    inner_err = max(errs) if errs else 0.0
    return ValueEstimate(
        r.value,
        r.abs_err + inner_err / lam + 8 * EPS * abs(r.value),
        _INNER_METHOD[inner],
        nodes_used=r.nodes,
        flags=tuple(sorted(flags)),
    )


# ---------------------------------------------------------------------------
# identities


def corollary2_check(
    beta: float,
    beta_p: float,
    gamma: float,
    lam: float,
    mu: float,
    x: float,
    q: QuadratureConfig = DEFAULT_QUAD,
) -> float:
    """Relative residual between the weighted diagonal Phi2 moment and its 2F2 closed form."""
    from .series_core import eval_series

    if not (x > 0 and lam > 0 and mu > 0):
        raise DomainError("needs x > 0, lambda > 0, mu > 0")
    plain = ParamSet.make("Phi2", beta=beta, beta_p=beta_p, gamma=gamma)

    def f(w, _v):
        return np.array([eval_series(plain, EvalPoint(x * wi, x * wi)).value for wi in w])

    lhs = gauss_jacobi_unit(f, lam - 1.0, mu - 1.0, tol=max(q.target_tol, 1e-13), n0=12).value
    beta_fn = math.exp(sc.gammaln(lam) + sc.gammaln(mu) - sc.gammaln(lam + mu))
    rhs = beta_fn * hyp_pfq(Pfq((beta + beta_p, lam), (mu + lam, gamma), -x)).value
    return abs(lhs - rhs) / abs(rhs)


def beta_decoupling_check(m: int, n: int, gamma: float, eps: float) -> float:
    """Relative residual of int_0^1 (1-u)^(n+eps-1) u^(m+gamma-eps-1) du against the Beta value."""
    if not 0 < eps < gamma:
        raise DomainError("needs 0 < eps < gamma")
    num = de_unit(lambda u, v: np.ones_like(u), m + gamma - eps - 1.0, n + eps - 1.0, tol=1e-14).value
    exact = math.exp(sc.gammaln(n + eps) + sc.gammaln(m + gamma - eps) - sc.gammaln(m + n + gamma))
    return abs(num - exact) / exact


def eval_kdf_euler(
    spec: KdFSpec,
    pt: EvalPoint,
    eps: float | None = None,
    q: QuadratureConfig = DEFAULT_QUAD,
) -> ValueEstimate:
    """Convolution form of the Kampe de Feriet family (flagged experimental).

    The inner factors are pF(q+1) with the extra lower parameters
    ``gamma - eps`` and ``eps``.  Whether this integral continues the
    series beyond its domain is conditional, hence the flag.
    """
    g = spec.gamma
    if eps is None:
        eps = g / 2.0
    if not 0 < eps < g:
        raise DomainError(f"eps must lie in (0, gamma={g})")
    X, Y = pt.args
    ux, lx = spec.upper_x, spec.lower_x + (g - eps,)
    uy, ly = spec.upper_y, spec.lower_y + (eps,)
    for up, lo, arg, name in ((ux, lx, X, "x"), (uy, ly, Y, "y")):
        if len(up) == len(lo) + 1 and arg >= 1.0 - CUT_MARGIN:
            raise DomainError(f"KdF: {name}-factor argument {arg:.6g} reaches the cut")
        if len(up) > len(lo) + 1:
            raise DomainError(f"KdF: {name}-factor is a divergent series")
    lg, sg = _log_norm(g, eps)
    # the factor arguments are X u and Y (1-u); _convolve passes t*u with t = 1 here
    return _convolve(
        lg,
        sg,
        lambda u: pfq_array(ux, lx, X * u),
        lambda v: pfq_array(uy, ly, Y * v),
        g - eps - 1.0,
        eps - 1.0,
        1.0,
        q,
        flags=("experimental",),
    )


def addition_theorem_check(
    gamma: float,
    x: float,
    y: float,
    eps: float | None = None,
    q: QuadratureConfig = DEFAULT_QUAD,
) -> float:
    """Relative residual of the 0F1 addition theorem, convolution side vs 0F1(gamma; x + y)."""
    conv = eval_kdf_euler(KdFSpec(gamma), EvalPoint(-x, -y), eps, q).value
    direct = hyp_pfq(Pfq((), (gamma,), x + y), Precision(rel_tol=1e-16)).value
    return abs(conv - direct) / abs(direct)


def epsilon_spread(
    params: ParamSet,
    pt: EvalPoint,
    fractions=(0.25, 0.5, 0.75),
    q: QuadratureConfig = DEFAULT_QUAD,
) -> tuple[list[float], float]:
    """Values for eps = f * gamma and their largest pairwise relative difference."""
    vals = [eval_euler(params, pt, f * params.gamma, q).value for f in fractions]
    scale = max(abs(v) for v in vals)
    spread = max(abs(a - b) for a in vals for b in vals) / scale if scale else 0.0
    return vals, spread
