"""Shared fixtures: the prototype assembly and codebooks are expensive
enough to build once per session."""

import pytest

from risant.geometry import AntennaAssembly, FeedModel, RisArray
from risant.scenario import resolve_scenario
from risant.synthesis import build_codebook


@pytest.fixture(scope="session")
def scenario():
    return resolve_scenario(None)


@pytest.fixture(scope="session")
def assembly(scenario):
    """Prototype antenna: 32x32 one-bit array with the tuned element."""
    return scenario.build_assembly()


@pytest.fixture(scope="session")
def small_assembly():
    """8x8 array for tests that only need far-field mechanics."""
    return AntennaAssembly(
        array=RisArray(n_x=8, n_y=8, period_mm=5.0),
        feed=FeedModel(position_mm=(-20.0, 0.0, 60.0), pattern_exponent=6.5),
    )


@pytest.fixture(scope="session")
def onebit_codebook(assembly):
    return build_codebook(assembly, sector_az=(-60.0, 60.0), n_levels=3, branching=4)


@pytest.fixture(scope="session")
def continuous_codebook(assembly):
    return build_codebook(assembly, sector_az=(-60.0, 60.0), n_levels=3,
                          branching=4, quantize=False)
