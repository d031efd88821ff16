"""Evaluation of Appell F3, Humbert and integrated Humbert functions.

Several independent routes are provided: double series (with an mpmath
fallback), Euler-type convolution integrals, numerical Laplace inversion
and large-t asymptotic forms.  The spherical-model constraint solver
builds on them.
"""
from .errors import (
    ContourError,
    DomainError,
    HumbertError,
    NoBracket,
    NonConvergent,
    NotConverged,
    OutOfDomain,
    ParameterPole,
    PoleError,
    QuadratureNotConverged,
    RegimeError,
    SingularParameter,
    SingularPoint,
)
from .types import FAMILY_FIELDS, EvalPoint, Family, KdFSpec, Method, ParamSet, Precision, ValueEstimate
from .series_core import eval_oracle, eval_series
from .euler_reps import eval_euler, eval_semi_infinite
from .laplace_bridge import ILTConfig, LaplaceImage, eval_ilt, invert
from .asymptotics import asym_value, ratio_probe
from .spherical_model import ModelConstants, scaling_probe, solve_z

__all__ = [
    "ContourError", "DomainError", "HumbertError", "NoBracket", "NonConvergent", "NotConverged",
    "OutOfDomain", "ParameterPole", "PoleError", "QuadratureNotConverged", "RegimeError",
    "SingularParameter", "SingularPoint",
    "FAMILY_FIELDS", "EvalPoint", "Family", "KdFSpec", "Method", "ParamSet", "Precision", "ValueEstimate",
    "eval_series", "eval_oracle", "eval_euler", "eval_semi_infinite", "ILTConfig", "LaplaceImage",
    "eval_ilt", "invert", "asym_value", "ratio_probe", "ModelConstants", "solve_z", "scaling_probe",
]
