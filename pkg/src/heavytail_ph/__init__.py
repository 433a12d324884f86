"""Phase-type approximation of heavy-tailed distributions.

Bernstein-PH bodies, hyperexponential tails, their optimized hybrid, and
M/PH/1 queueing validation (analytic and simulated).
"""

__version__ = "0.1.0"

from ._backend import BACKEND_NAME
from .phmodel import PhaseTypeModel
from .targets import TargetDistribution

__all__ = ["PhaseTypeModel", "TargetDistribution", "BACKEND_NAME",
           "__version__"]
