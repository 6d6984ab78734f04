"""
Shared fixtures: the demonstration network, a star alliance and small
generated instances.
"""
import numpy as np
import pytest

from board.store import message_board
from bidprice.network import assemble_blocks, demo_instance, generate_instance
from tests.helpers import star_instance


@pytest.fixture
def demo():
    return demo_instance()


@pytest.fixture
def demo_blocks(demo):
    return assemble_blocks(demo)


@pytest.fixture
def star():
    return star_instance(3)


@pytest.fixture(params=[3, 11, 27])
def generated(request):
    """Small generated instances with few breakpoints per path."""
    instance, _ = generate_instance(request.param, n_paths=10, n_parties=2, horizon=100)
    return instance


@pytest.fixture
def generated_blocks(generated):
    return assemble_blocks(generated, max_breakpoints=4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(autouse=True)
def clean_board():
    """Start and end every test with an empty message board."""
    message_board.clear()
    yield
    message_board.clear()
