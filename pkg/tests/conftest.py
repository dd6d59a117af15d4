import numpy as np
import pytest

from uav_codesign.scenario import (Geometry, PlantConfig, Scenario,
                                   default_scenario)


@pytest.fixture(scope="session")
def scen():
    """Default desk-scale scenario (4 UAVs, 3 robots)."""
    return default_scenario()


@pytest.fixture(scope="session")
def small_scen():
    """Two UAVs, one robot; cheap enough for exhaustive checks."""
    geo = Geometry(n_uav=2,
                   robots=np.array([[30.0, 40.0, 0.0]]),
                   target=np.array([60.0, 60.0, 0.0]))
    return Scenario(geometry=geo, plant_cfg=PlantConfig(g=(6.0,)))
