import math

import pytest

from conic_andrews import (build_cap, build_football, build_hemisphere, build_perturbed,
                           build_round_sphere)


@pytest.fixture(scope="session")
def sphere3():
    return build_round_sphere(3)


@pytest.fixture(scope="session")
def sphere4():
    return build_round_sphere(4)


@pytest.fixture(scope="session")
def football():
    return build_football(4, -0.5)[0]


@pytest.fixture(scope="session")
def hemisphere4():
    return build_hemisphere(4)


@pytest.fixture(scope="session")
def cap4():
    return build_cap(4, math.pi / 3)


@pytest.fixture(scope="session")
def perturbed4(sphere4):
    return build_perturbed(sphere4, 0.05)


@pytest.fixture(scope="session")
def presets(sphere3, sphere4, football, hemisphere4, cap4, perturbed4):
    return {"sphere3": sphere3, "sphere4": sphere4, "football": football,
            "football_075": build_football(4, -0.75)[0],
            "hemisphere4": hemisphere4, "cap4": cap4, "perturbed4": perturbed4}
