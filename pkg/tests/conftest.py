import sys
from pathlib import Path

import pytest

SRC_PATH = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(SRC_PATH))

from wkbpole.asymptotics import AsymptoticModel  # noqa: E402
from wkbpole.potential import MeromorphicPotential, SpectralProblem, Strip  # noqa: E402
from wkbpole.settings import NumericsSettings  # noqa: E402

CONFIGS_DIR = Path(__file__).parent.parent / "configs"
REFERENCE_POTENTIAL = "1/z + 0.3*z"


def make_problem(expression: str = REFERENCE_POTENTIAL, d_x: float = 0.35, d_y: float = 0.35, **settings: object) -> SpectralProblem:
    return SpectralProblem(MeromorphicPotential.parse(expression), Strip(d_x, d_y), 0j, NumericsSettings(**settings))


@pytest.fixture
def problem() -> SpectralProblem:
    return make_problem()


@pytest.fixture(scope="session")
def model() -> AsymptoticModel:
    """The reference problem at h = 0.01; building it runs every action quadrature once."""
    return AsymptoticModel.build(make_problem(), 0.01)


@pytest.fixture
def calibration() -> SpectralProblem:
    """Constant ``w = 3``: solutions are powers of the roots of ``l + 1/l + 3 = 0``."""
    return SpectralProblem(MeromorphicPotential.constant(3.0), Strip(0.35, 0.35), 0j, NumericsSettings())
