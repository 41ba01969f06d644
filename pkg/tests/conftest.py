import numpy as np
import pytest

from divlab.dists import DiscreteDist, DiscreteJoint, RngSeed


@pytest.fixture
def correlated_joint() -> DiscreteJoint:
    """Binary joint with strong diagonal correlation, used all over."""
    return DiscreteJoint(np.array([[0.4, 0.1], [0.1, 0.4]]))


@pytest.fixture
def uniform_joint() -> DiscreteJoint:
    return DiscreteJoint(np.full((2, 2), 0.25))


@pytest.fixture
def skew_pair() -> tuple[DiscreteDist, DiscreteDist]:
    return DiscreteDist([0.75, 0.25]), DiscreteDist([0.5, 0.5])


@pytest.fixture
def rng() -> np.random.Generator:
    return RngSeed(20240817).generator()
