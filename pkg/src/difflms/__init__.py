"""Diffusion LMS estimation of space-varying parameters over sensor networks.

Submodules
----------
basis        shifted Chebyshev space basis and interpolation matrices
pde_model    ground truth, regressor models and measurement streams
network      topologies and combination matrices
estimators   centralized, diffusion and ATC LMS
theory       mean and mean-square performance prediction
harness      experiment configuration, Monte-Carlo runs, reports and CLI
"""

from . import basis, estimators, network, pde_model, theory
from .errors import DomainError, IterationLimitError, NumericalError, UnsupportedCaseError

__all__ = [
    "basis", "estimators", "network", "pde_model", "theory",
    "DomainError", "IterationLimitError", "NumericalError", "UnsupportedCaseError",
]
__version__ = "0.1.0"
