import numpy as np
import pytest

from lintest.models.cube import NoiseSpec, VarSet
from lintest.services.fixtures import chsh, magic_square, toy_parity
from lintest.services.pipeline import PipelineParams, compile_pipeline


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def chsh_fixture():
    return chsh()


@pytest.fixture(scope="session")
def magic():
    return magic_square()


@pytest.fixture(scope="session")
def toy():
    return toy_parity()


@pytest.fixture
def ab():
    return VarSet.of("a", "b")


@pytest.fixture(scope="session")
def toy_compiled(toy):
    """Toy parity compiled at eps = 1/10, u = 1."""
    return compile_pipeline(toy.game, PipelineParams(NoiseSpec(1, 10), h=1))


@pytest.fixture(scope="session")
def toy_compiled_sound(toy):
    """Toy parity compiled at eps = 1/100 for the soundness audit."""
    return compile_pipeline(toy.game, PipelineParams(NoiseSpec(1, 100), h=1))
