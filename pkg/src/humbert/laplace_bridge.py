"""Closed-form Laplace images and their numerical inversion.

For every family handled here the function value is

    F(-t x, -t y) = Gamma(gamma) t^(1-gamma) * L^{-1}[image](t)

Branch convention, used everywhere in this module: ``w**s`` means
``exp(s * Log w)`` with the principal logarithm, so every power factor
has its cut on the negative real axis of its base.  All singularities of
the images are real, which is what the Talbot contour needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath as mp
import numpy as np

from .errors import ContourError, DomainError, NotConverged, SingularPoint
from .hyper1d import pfq_array, tricomi_u
from .quadrature import de_semi_infinite
from .types import EvalPoint, Family, KdFSpec, Method, ParamSet, ValueEstimate

SINGULAR_RADIUS = 1e-12
MIN_XI_ARG = 1e-3
IMAGE_FAMILIES = ("Phi3", "Phi2", "Xi2", "Xi1", "F3", "Phi3i", "Phi2i", "Phi2is", "KdF")


def _pow(w, s):
    """Principal power exp(s Log w)."""
    if s == 0:
        return mp.mpf(1)
    return mp.exp(s * mp.log(w))


@dataclass
class LaplaceImage:
    """Image of one family at fixed (x, y).

    ``variant`` selects among equivalent closed forms:

    * Phi3i: ``"regularized"`` (default, any sign of y), ``"table"``
      (incomplete-gamma form, needs y/x > 0), ``"moment"`` (w-quadrature).
    * Phi2i: ``"closed"`` (x > y > 0), ``"printed"`` (the closed form with
      the misprinted power and prefactor kept for comparison), ``"moment"``.
    """

    family: str
    params: ParamSet | None
    x: float
    y: float
    variant: str | None = None
    kdf: KdFSpec | None = None
    _fn: Callable = field(init=False, repr=False)

    def __post_init__(self):
        if self.family not in IMAGE_FAMILIES:
            raise ValueError(f"no Laplace image for {self.family!r}")
        self.x = float(self.x)
        self.y = float(self.y)
        builder = getattr(self, f"_build_{self.family.lower()}")
        self._fn = builder()

    # -- geometry ---------------------------------------------------------
    def singular_set(self) -> tuple[float, ...]:
        pts = {0.0}
        if self.family in ("Phi2", "Phi2i", "Xi1"):
            pts.add(-self.y)
        if self.family in ("Phi2", "Phi3", "Phi3i", "Phi2i", "Phi2is"):
            pts.add(-self.x)
        return tuple(sorted(pts))

    def rightmost(self) -> float:
        return max(self.singular_set())

    def __call__(self, p):
        for s in self.singular_set():
            if abs(complex(p) - s) < SINGULAR_RADIUS:
                raise SingularPoint(f"p={complex(p)} is within {SINGULAR_RADIUS:g} of the singularity {s}")
        return self._fn(mp.mpmathify(p))

    # -- builders ---------------------------------------------------------
    def _build_phi3(self):
        b, g = self.params.beta, self.params.gamma
        x, y = self.x, self.y
        return lambda p: _pow(p, b - g) * _pow(p + x, -b) * mp.exp(-y / p)

    def _build_phi2(self):
        b, bp, g = self.params.beta, self.params.beta_p, self.params.gamma
        x, y = self.x, self.y
        return lambda p: _pow(p, b + bp - g) * _pow(p + x, -b) * _pow(p + y, -bp)

    def _u_factor(self, a, b, z):
        if z <= 0:
            raise DomainError("Tricomi factor needs a positive scale (the image has a cut otherwise)")
        return lambda p: mp.hyperu(a, 1 + a - b, p / z)

    def _build_xi2(self):
        P = self.params
        a, b, g = P.alpha, P.beta, P.gamma
        x, y = self.x, self.y
        U = self._u_factor(a, b, x)
        return lambda p: mp.power(x, -a) * _pow(p, a - g) * U(p) * mp.exp(-y / p)

    def _build_xi1(self):
        P = self.params
        a, b, bp, g = P.alpha, P.beta, P.beta_p, P.gamma
        x, y = self.x, self.y
        U = self._u_factor(a, b, x)
        return lambda p: mp.power(x, -a) * _pow(p, a + bp - g) * _pow(p + y, -bp) * U(p)

    def _build_f3(self):
        P = self.params
        a, ap, b, bp, g = P.alpha, P.alpha_p, P.beta, P.beta_p, P.gamma
        x, y = self.x, self.y
        Ux = self._u_factor(a, b, x)
        Uy = self._u_factor(ap, bp, y)
        return lambda p: mp.power(x, -a) * mp.power(y, -ap) * _pow(p, a + ap - g) * Ux(p) * Uy(p)

    def _build_phi3i(self):
        P = self.params
        b, g = P.beta, P.gamma
        x, y = self.x, self.y
        variant = self.variant or "regularized"
        self.variant = variant
        if variant == "moment":
            return _moment_image_phi3(b, g, P.lam, x, y)
        if P.lam != 1:
            raise DomainError("closed-form integrated images hold for lambda = 1; use variant='moment'")
        if x == 0:
            raise DomainError("closed-form Phi3^(i) image needs x != 0")
        a = 1.0 - b
        if variant == "table":
            if not y / x > 0:
                raise DomainError("incomplete-gamma image needs y/x > 0")
            c = y / x

            def table(p):
                pref = mp.exp(c) / x * mp.power(c, b - 1)
                return pref * _pow(p, 1 - g) * (mp.gammainc(a, c) - mp.gammainc(a, c + y / p))

            return table
        if variant != "regularized":
            raise ValueError(f"unknown Phi3i variant {variant!r}")
        def R(z):
            # sum_{k>=1} (-z)^k / (k! (k + a))
            return -z / (a + 1) * mp.hyp2f2(1, a + 1, 2, a + 2, -z)

        def reg(p):
            # b1 and b2 must agree to working precision: the bracket cancels against exp(b1)
            b1 = mp.mpf(y) / x
            b2 = y * (p + x) / (x * p)
            if abs(a) < 1e-14:
                head = mp.log(p + x) - mp.log(p)
                pa = px = mp.mpf(1)
            else:
                pa, px = _pow(p, a), _pow(p + x, a)
                head = (px - pa) / a
            return _pow(p, b - g) * mp.exp(b1) / x * (px * R(b2) - pa * R(b1) + head)

        return reg

    def _build_phi2i(self):
        P = self.params
        b, bp, g = P.beta, P.beta_p, P.gamma
        x, y = self.x, self.y
        variant = self.variant or "closed"
        self.variant = variant
        if variant == "moment":
            return _moment_image_phi2(b, bp, g, P.lam, x, y)
        if P.lam != 1:
            raise DomainError("closed-form integrated images hold for lambda = 1; use variant='moment'")
        if not x > y > 0:
            raise DomainError("two-term closed form needs x > y > 0 (permute, or use the symmetric image)")
        if variant not in ("closed", "printed"):
            raise ValueError(f"unknown Phi2i variant {variant!r}")
        z1 = -y / (x - y)
        if variant == "closed":
            C = mp.power(x, bp - 1) * mp.power(x - y, -bp) / (1 - b)
            first_pow = b - g
        else:
            C = mp.power(x, bp - 1) * mp.power(x - y, bp) / (1 - b)
            first_pow = b + g
        F1 = mp.hyp2f1(1 - b, bp, 2 - b, z1)

        def img(p):
            z2 = -(p + x) * y / (p * (x - y))
            t1 = _pow(p, first_pow) * _pow(p + x, 1 - b) * mp.hyp2f1(1 - b, bp, 2 - b, z2)
            return C * (t1 - _pow(p, 1 - g) * F1)

        return img

    def _build_phi2is(self):
        P = self.params
        b, bp, g = P.beta, P.beta_p, P.gamma
        x = self.x
        if x == 0:
            raise DomainError("symmetric image needs x != 0")
        if self.y != x:
            raise DomainError("symmetric image needs x == y")
        k = 1 - b - bp

        def img(p):
            if abs(k) < 1e-14:
                return _pow(p, 1 - g) * (mp.log(p + x) - mp.log(p)) / x
            return (_pow(p, b + bp - g) * _pow(p + x, k) - _pow(p, 1 - g)) / (k * x)

        return img

    def _build_kdf(self):
        s = self.kdf
        if s is None:
            raise ValueError("KdF image needs a KdFSpec")
        x, y = self.x, self.y

        def img(p):
            fx = mp.hyper(list(s.upper_x), list(s.lower_x), -x / p)
            fy = mp.hyper(list(s.upper_y), list(s.lower_y), -y / p)
            return _pow(p, -s.gamma) * fx * fy

        return img


def _moment_image_phi3(b, g, lam, x, y):
    def img(p):
        f = lambda w: mp.power(w, lam - 1) * _pow(p + x * w, -b) * mp.exp(-y * w / p)  # noqa: E731
        return _pow(p, b - g) * mp.quad(f, [0, 1])

    return img


def _moment_image_phi2(b, bp, g, lam, x, y):
    def img(p):
        f = lambda w: mp.power(w, lam - 1) * _pow(p + x * w, -b) * _pow(p + y * w, -bp)  # noqa: E731
        return _pow(p, b + bp - g) * mp.quad(f, [0, 1])

    return img


def image_eval(img: LaplaceImage, p: complex) -> complex:
    """Principal-branch image value at complex ``p``."""
    with mp.workdps(20):
        return complex(img(p))


# ---------------------------------------------------------------------------
# inversion


@dataclass(frozen=True)
class ILTConfig:
    method: str = "fixed_contour"
    nodes: int = 32
    shift: float | None = None
    target: float = 1e-10
    max_nodes: int = 512

    def __post_init__(self):
        if self.method not in ("fixed_contour", "summation_accel"):
            raise ValueError(f"unknown inversion method {self.method!r}")
        if self.nodes < 8:
            raise ValueError("need at least 8 nodes")
        if self.shift is not None and not math.isfinite(self.shift):
            raise ValueError("shift must be finite")
        if not self.target > 0:
            raise ValueError("target must be positive")


def _talbot(F, t, M, sigma, dps):
    """Fixed Talbot contour p = sigma + s/t, s = r theta (cot theta + i), r = 2M/5."""
    with mp.workdps(dps):
        t = mp.mpf(t)
        sigma = mp.mpf(sigma)
        r = mp.mpf(2 * M) / 5
        terms = [mp.exp(r) * F(sigma + r / t) / 2]
        for k in range(1, M):
            th = k * mp.pi / M
            c = mp.cot(th)
            s = r * th * (c + 1j)
            dsig = th + (th * c - 1) * c
            terms.append(mp.re(mp.exp(s) * F(sigma + s / t) * (1 + 1j * dsig)))
        total = mp.fsum(terms)
        biggest = max(abs(v) for v in terms)
        scale = r / (M * t)
        return total * scale, biggest * scale, mp.exp(sigma * t)


def _stehfest_weights(N):
    V = []
    h = N // 2
    for k in range(1, N + 1):
        acc = mp.mpf(0)
        for j in range((k + 1) // 2, min(k, h) + 1):
            acc += mp.mpf(j) ** h * mp.factorial(2 * j) / (
                mp.factorial(h - j) * mp.factorial(j) * mp.factorial(j - 1) * mp.factorial(k - j) * mp.factorial(2 * j - k)
            )
        V.append((-1) ** (k + h) * acc)
    return V


def _stehfest(F, t, N, sigma, dps):
    with mp.workdps(dps):
        t = mp.mpf(t)
        ln2 = mp.log(2)
        V = _stehfest_weights(N)
        terms = [V[k - 1] * F(sigma + k * ln2 / t) for k in range(1, N + 1)]
        total = mp.fsum(terms) * ln2 / t
        biggest = max(abs(v) for v in terms) * ln2 / t
        return mp.re(total), biggest, mp.exp(sigma * t)


def _rightmost_of(img) -> float:
    if isinstance(img, LaplaceImage):
        return img.rightmost()
    return float(getattr(img, "rightmost", 0.0))


def invert(img, t: float, cfg: ILTConfig = ILTConfig()) -> ValueEstimate:
    """Numerical inverse Laplace transform of ``img`` at ``t``.

    ``img`` is a :class:`LaplaceImage` or any callable on mpmath complex
    numbers (whose singularities must lie on (-inf, 0], or to the left of
    ``cfg.shift``).  Nodes are doubled until two successive results agree
    to ``cfg.target``; the working precision is raised whenever the node
    sum shows more cancellation than the current digits can carry.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    right = _rightmost_of(img)
    sigma = right if cfg.shift is None else cfg.shift
    if sigma < right:
        raise ContourError(f"contour abscissa {sigma} lies left of the singularity at {right}")
    method = _talbot if cfg.method == "fixed_contour" else _stehfest
    n = cfg.nodes if cfg.method == "fixed_contour" else max(8, min(cfg.nodes, 16)) // 2 * 2
    n_max = cfg.max_nodes if cfg.method == "fixed_contour" else 64
    prev = None
    used = 0
    extra = 0
    while True:
        base = int(0.6 * n) + 15 if method is _talbot else int(1.1 * n) + 15
        dps = base + extra
        val, biggest, growth = method(img, t, n, sigma, dps)
        used += n
        lost = float(mp.log10(biggest / abs(val))) if val != 0 else float(dps)
        if lost > dps - base + 5:
            # cancellation ate the margin: redo at higher precision
            extra = int(lost) + 10
            if extra > 2000:
                raise NotConverged("inversion cancellation exceeds 2000 digits")
            continue
        value = val * growth
        if prev is not None:
            diff = abs(value - prev)
            if diff <= cfg.target * abs(value) or (value == 0 and diff == 0):
                return ValueEstimate(
                    float(value), float(diff) + abs(float(value)) * 1e-15, Method.ILT, nodes_used=used, mp_value=value
                )
        prev = value
        n *= 2
        if n > n_max:
            raise NotConverged(
                f"node doubling did not settle (last change {float(diff):.3g} relative to {float(abs(value)):.3g})"
            )


# ---------------------------------------------------------------------------
# family dispatch


def image_for(params: ParamSet, x: float, y: float, variant: str | None = None) -> tuple[LaplaceImage, bool]:
    """Image for ``params`` at (x, y); second item tells whether (x, beta) and (y, beta') were swapped."""
    fam = params.family
    if fam in (Family.F2, Family.Psi1, Family.Psi2):
        raise DomainError(f"{fam.value} has no Laplace image in this library")
    if fam is Family.Xi2 or fam is Family.Xi1:
        if x < MIN_XI_ARG:
            raise DomainError(f"{fam.value} image needs x >= {MIN_XI_ARG} (x < 0 lies on the cut)")
    if fam is Family.F3 and (x < MIN_XI_ARG or y < MIN_XI_ARG):
        raise DomainError(f"F3 image needs x, y >= {MIN_XI_ARG}")
    if fam is Family.Phi2i:
        if variant == "moment" or params.lam != 1:
            return LaplaceImage("Phi2i", params, x, y, "moment"), False
        if x == y:
            if x == 0:
                return LaplaceImage("Phi2i", params, x, y, "moment"), False
            return LaplaceImage("Phi2is", params, x, y), False
        if x > 0 and y > 0 and abs(1 - params.beta) > 1e-12 and abs(1 - params.beta_p) > 1e-12:
            if x > y:
                return LaplaceImage("Phi2i", params, x, y, variant or "closed"), False
            swapped = params.with_(beta=params.beta_p, beta_p=params.beta)
            return LaplaceImage("Phi2i", swapped, y, x, variant or "closed"), True
        return LaplaceImage("Phi2i", params, x, y, "moment"), False
    if fam is Family.Phi3i:
        if params.lam != 1 or x == 0:
            return LaplaceImage("Phi3i", params, x, y, "moment"), False
        return LaplaceImage("Phi3i", params, x, y, variant or "regularized"), False
    return LaplaceImage(fam.value, params, x, y, variant), False


def eval_ilt(
    params: ParamSet,
    pt: EvalPoint,
    cfg: ILTConfig = ILTConfig(),
    variant: str | None = None,
) -> ValueEstimate:
    """Function value ``Gamma(gamma) t^(1-gamma) L^{-1}[image](t)``."""
    img, swapped = image_for(params, pt.x, pt.y, variant)
    r = invert(img, pt.t, cfg)
    g = params.gamma
    with mp.workdps(30):
        pref = mp.gamma(g) * mp.power(pt.t, 1 - g)
        v = r.mp_value * pref
    flags = ("permuted",) if swapped else ()
    if img.family == "Phi2is":
        flags += ("symmetric",)
    return ValueEstimate(
        float(v), r.abs_err * float(abs(pref)), Method.ILT, nodes_used=r.nodes_used, flags=flags, mp_value=v
    )


def eval_kdf_ilt(spec: KdFSpec, pt: EvalPoint, cfg: ILTConfig = ILTConfig()) -> ValueEstimate:
    img = LaplaceImage("KdF", None, pt.x, pt.y, kdf=spec)
    r = invert(img, pt.t, cfg)
    with mp.workdps(30):
        v = r.mp_value * mp.gamma(spec.gamma) * mp.power(pt.t, 1 - spec.gamma)
    return ValueEstimate(float(v), r.abs_err * abs(float(v / r.mp_value)), Method.ILT, nodes_used=r.nodes_used)


# ---------------------------------------------------------------------------
# one-variable Laplace pairs and the small-p slope


def _laplace_numeric(f: Callable[[np.ndarray], np.ndarray], p: float, tol: float = 1e-13) -> float:
    # outermost nodes can underflow to v = 0, where v^(a-1) is infinite for a < 1
    with np.errstate(divide="ignore"):
        return de_semi_infinite(lambda v: np.exp(-p * v) * f(v), tol=tol, decay=p).value


def laplace_pair_check(kind: str, params: dict, y: float, p_grid: Sequence[float]) -> float:
    """Largest relative residual of a one-variable Laplace pair on ``p_grid``.

    ``kind`` and the entries of ``params``:

    * ``lapFa``: a  --  v^(a-1) 0F1(a; -y v)  <->  Gamma(a) p^-a e^(-y/p)
    * ``lapFb``: a, b  --  v^(b-1) 1F1(a; b; -y v)  <->  Gamma(b) p^(a-b) (p+y)^-a
    * ``lapFc``: a, b, c  --  v^(c-1) 2F1(a, b; c; -y v)  <->  Gamma(c) p^(a-c) y^-a U(a; 1+a-b; p/y)
    * ``eq29``: upper, lower, mu  --  v^(mu-1) pF(q+1)(upper; lower, mu; -y v)
      <->  Gamma(mu) p^-mu pFq(upper; lower; -y/p)
    """
    worst = 0.0
    for p in p_grid:
        if not p > 0:
            raise DomainError("p_grid must be positive")
        if kind == "lapFa":
            a = params["a"]
            lhs = _laplace_numeric(lambda v: v ** (a - 1) * pfq_array((), (a,), -y * v), p)
            rhs = math.gamma(a) * p ** (-a) * math.exp(-y / p)
        elif kind == "lapFb":
            a, b = params["a"], params["b"]
            lhs = _laplace_numeric(lambda v: v ** (b - 1) * pfq_array((a,), (b,), -y * v), p)
            rhs = math.gamma(b) * p ** (a - b) * (p + y) ** (-a)
        elif kind == "lapFc":
            a, b, c = params["a"], params["b"], params["c"]
            lhs = _laplace_numeric(lambda v: v ** (c - 1) * pfq_array((a, b), (c,), -y * v), p)
            rhs = math.gamma(c) * p ** (a - c) * y ** (-a) * tricomi_u(a, 1 + a - b, p / y).value
        elif kind == "eq29":
            up = tuple(params["upper"])
            lo = tuple(params["lower"])
            mu = params["mu"]
            lhs = _laplace_numeric(lambda v: v ** (mu - 1) * pfq_array(up, lo + (mu,), -y * v), p)
            with mp.workdps(30):
                rhs = float(mp.gamma(mu) * mp.power(p, -mu) * mp.hyper(list(up), list(lo), -y / p))
        else:
            raise ValueError(f"unknown pair {kind!r}")
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst


def tauberian_slope(beta: float, beta_p: float, gamma: float, x: float, y: float, p0: float = 1e-7) -> float:
    """Log-log slope of the Phi2 image near p = 0 (expected beta + beta' - gamma for x, y > 0)."""
    img = LaplaceImage("Phi2", ParamSet.make("Phi2", beta=beta, beta_p=beta_p, gamma=gamma), x, y)
    with mp.workdps(30):
        p1, p2 = mp.mpf(p0), mp.mpf(p0) / 10
        s = (mp.log(abs(img(p1))) - mp.log(abs(img(p2)))) / (mp.log(p1) - mp.log(p2))
    return float(s)
