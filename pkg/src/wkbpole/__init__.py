"""wkbpole package."""

from wkbpole.asymptotics import AsymptoticModel
from wkbpole.errors import WkbPoleError
from wkbpole.potential import MeromorphicPotential, SpectralProblem, Strip

__all__ = ["AsymptoticModel", "MeromorphicPotential", "SpectralProblem", "Strip", "WkbPoleError", "__version__"]

__version__ = "0.1.0"
