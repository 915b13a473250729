"""Weighted critical elliptic equations: explicit ground states, linearized
spectra, symmetry-breaking maps and a numerical finite-dimensional reduction
for radially perturbed problems."""

__version__ = "0.1.0"

from .params import DerivedConstants, ParameterError, ProblemParams, constants, derive, validate
from .perturbation import PerturbationSpec, check_conditions

__all__ = [
    "DerivedConstants",
    "ParameterError",
    "PerturbationSpec",
    "ProblemParams",
    "check_conditions",
    "constants",
    "derive",
    "validate",
]
