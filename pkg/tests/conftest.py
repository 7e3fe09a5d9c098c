import json
from pathlib import Path

import pytest

from conenav import Obstacle, Scenario, SimConfig

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_2D = REPO_ROOT / "scenarios" / "planar_disc.json"
SCENARIO_3D = REPO_ROOT / "scenarios" / "sphere_3d.json"


@pytest.fixture(scope="session")
def scn2d():
    return Scenario(dimension=2, obstacle=Obstacle([0.0, -5.0], 2.0), target=[0.0, 0.0])


@pytest.fixture(scope="session")
def scn3d():
    return Scenario(dimension=3, obstacle=Obstacle([1.0, 1.0, 1.0], 0.7),
                    target=[0.0, 0.0, 0.0])


@pytest.fixture(scope="session")
def cfg():
    return SimConfig()


@pytest.fixture(scope="session")
def starts2d():
    return json.loads(SCENARIO_2D.read_text())["starts"]


@pytest.fixture(scope="session")
def starts3d():
    return json.loads(SCENARIO_3D.read_text())["starts"]
