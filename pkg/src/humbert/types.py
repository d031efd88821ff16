"""Small value types passed between the evaluation routes."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any

from .errors import DomainError, SingularParameter


class Family(str, enum.Enum):
    F3 = "F3"
    Xi1 = "Xi1"
    Xi2 = "Xi2"
    Phi2 = "Phi2"
    Phi3 = "Phi3"
    Phi2i = "Phi2i"
    Phi3i = "Phi3i"
    F2 = "F2"
    Psi1 = "Psi1"
    Psi2 = "Psi2"
    KdF = "KdF"

    @classmethod
    def parse(cls, name: str | Family) -> Family:
        if isinstance(name, Family):
            return name
        for fam in cls:
            if fam.value.lower() == str(name).lower():
                return fam
        raise ValueError(f"unknown family {name!r}")


class Method(str, enum.Enum):
    Series = "Series"
    Oracle = "Oracle"
    Euler = "Euler"
    ILT = "ILT"
    Asym = "Asym"


# Parameter roles per family.  Naming follows the Euler/Laplace tables:
# Xi1(alpha, beta, beta_p; gamma) carries (alpha)_m (beta)_m (beta_p)_n.
# F2, Psi1, Psi2 map (a, b, b'; c, c') onto (alpha, beta, beta_p; gamma, gamma_p).
FAMILY_FIELDS: dict[Family, tuple[str, ...]] = {
    Family.F3: ("alpha", "alpha_p", "beta", "beta_p", "gamma"),
    Family.Xi1: ("alpha", "beta", "beta_p", "gamma"),
    Family.Xi2: ("alpha", "beta", "gamma"),
    Family.Phi2: ("beta", "beta_p", "gamma"),
    Family.Phi3: ("beta", "gamma"),
    Family.Phi2i: ("beta", "beta_p", "gamma", "lam"),
    Family.Phi3i: ("beta", "gamma", "lam"),
    Family.F2: ("alpha", "beta", "beta_p", "gamma", "gamma_p"),
    Family.Psi1: ("alpha", "beta", "gamma", "gamma_p"),
    Family.Psi2: ("alpha", "gamma", "gamma_p"),
}

_LOWER_FIELDS = ("gamma", "gamma_p")


def is_nonpositive_int(v: float, tol: float = 1e-12) -> bool:
    return v <= tol and abs(v - round(v)) < tol


@dataclass(frozen=True)
class Precision:
    rel_tol: float = 1e-14
    max_terms: int = 5000
    working_digits: int = 30

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if self.working_digits < 16:
            raise ValueError("working_digits must be >= 16")


DEFAULT_PRECISION = Precision()


@dataclass(frozen=True)
class ParamSet:
    """Real parameters of one two-variable family.

    Only the fields named in ``FAMILY_FIELDS[family]`` may be set; the rest
    must stay ``None``.
    """

    family: Family
    alpha: float | None = None
    alpha_p: float | None = None
    beta: float | None = None
    beta_p: float | None = None
    gamma: float | None = None
    gamma_p: float | None = None
    lam: float | None = None

    def __post_init__(self):
        fam = Family.parse(self.family)
        object.__setattr__(self, "family", fam)
        if fam is Family.KdF:
            raise ValueError("KdF parameters are described by KdFSpec")
        wanted = FAMILY_FIELDS[fam]
        for f in fields(self):
            if f.name == "family":
                continue
            val = getattr(self, f.name)
            if f.name in wanted and val is None:
                raise ValueError(f"{fam.value} requires parameter {f.name!r}")
            if f.name not in wanted and val is not None:
                raise ValueError(f"{fam.value} does not take parameter {f.name!r}")
            if val is not None:
                object.__setattr__(self, f.name, float(val))
        for name in _LOWER_FIELDS:
            v = getattr(self, name)
            if v is not None and is_nonpositive_int(v):
                raise SingularParameter(f"{name}={v} is a non-positive integer")
        if self.lam is not None and is_nonpositive_int(self.lam):
            raise SingularParameter(f"lambda={self.lam}: -lambda must not be in N")

    @classmethod
    def make(cls, family: str | Family, **kw: float) -> ParamSet:
        return cls(Family.parse(family), **kw)

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in FAMILY_FIELDS[self.family]}

    def with_(self, **kw: Any) -> ParamSet:
        return replace(self, **kw)


@dataclass(frozen=True)
class EvalPoint:
    """Point (x, y) at scale t; functions are evaluated at (-t*x, -t*y)."""

    x: float
    y: float
    t: float = 1.0

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError("scale t must be positive")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "t", float(self.t))

    @property
    def args(self) -> tuple[float, float]:
        return -self.t * self.x, -self.t * self.y

    @classmethod
    def from_args(cls, X: float, Y: float) -> EvalPoint:
        return cls(-X, -Y, 1.0)


@dataclass(frozen=True)
class KdFSpec:
    """Kampe de Feriet series F^{0;p;p'}_{1;q;q'} with joint lower parameter gamma."""

    gamma: float
    upper_x: tuple[float, ...] = ()
    upper_y: tuple[float, ...] = ()
    lower_x: tuple[float, ...] = ()
    lower_y: tuple[float, ...] = ()
    upper_joint: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("upper_x", "upper_y", "lower_x", "lower_y", "upper_joint"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.upper_joint:
            raise ValueError("F^{0;p;p'}_{1;q;q'} has no joint upper parameters")
        for v in (self.gamma,) + self.lower_x + self.lower_y:
            if is_nonpositive_int(v):
                raise SingularParameter(f"lower parameter {v} is a non-positive integer")


@dataclass
class ValueEstimate:
    value: float
    abs_err: float
    method: Method
    terms_used: int = 0
    nodes_used: int = 0
    flags: tuple[str, ...] = ()
    mp_value: Any = field(default=None, repr=False)

    def __post_init__(self):
        self.method = Method(self.method)
        if not (self.abs_err >= 0 or math.isnan(self.abs_err)):
            raise ValueError("abs_err must be non-negative")

    @property
    def rel_err(self) -> float:
        if self.value == 0:
            return math.inf if self.abs_err else 0.0
        return self.abs_err / abs(self.value)

    def as_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "abs_err": self.abs_err,
            "method": self.method.value,
            "terms_used": self.terms_used,
            "nodes_used": self.nodes_used,
            "flags": list(self.flags),
        }
