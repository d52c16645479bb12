"""Tensor-product L-splines: operators, sparse grid solver and certification."""

from ._accel import backend_name
from .measurements import DiracSample, ForwardOperator, SeparableBox, SeparableProfile, check_admissible
from .multidim import MultiFunctional, MultiSpline, multi_solve
from .odo_core import Interval, Odo, build_fundamental_system, build_localized_system, build_universal_system
from .solver import GridSpec, Problem, certify, solve
from .tensor_spline import Family, TensorAtom, TensorSpline, canonicalize, decompose, seminorm

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "DiracSample",
    "ForwardOperator",
    "SeparableBox",
    "SeparableProfile",
    "check_admissible",
    "MultiFunctional",
    "MultiSpline",
    "multi_solve",
    "Interval",
    "Odo",
    "build_fundamental_system",
    "build_localized_system",
    "build_universal_system",
    "GridSpec",
    "Problem",
    "certify",
    "solve",
    "Family",
    "TensorAtom",
    "TensorSpline",
    "canonicalize",
    "decompose",
    "seminorm",
]
