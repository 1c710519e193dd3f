import numpy as np
import pytest

from smoothboost import GameMatrix


@pytest.fixture(scope="session")
def cycle_matrix():
    """The canonical 3x3 cyclic instance (maximum margin 1/3)."""
    return GameMatrix(np.array([[1, 1, -1], [-1, 1, 1], [1, -1, 1]], dtype=float))


@pytest.fixture(scope="session")
def uneven_cycle_matrix():
    """A 5x7 instance whose adaboost orbit cycles with unequal edges."""
    return GameMatrix(np.array([
        [1, -1, 1, 1, 1, -1, -1],
        [-1, -1, -1, 1, 1, -1, 1],
        [-1, -1, -1, -1, 1, 1, -1],
        [-1, -1, 1, -1, -1, 1, 1],
        [-1, 1, 1, 1, 1, -1, -1],
    ], dtype=float))


def random_game_matrix(rng, m, n):
    entries = rng.choice([-1.0, 1.0], size=(m, n))
    for j in np.flatnonzero(np.all(entries == 1.0, axis=0)):
        entries[int(rng.integers(m)), j] = -1.0
    return GameMatrix(entries)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
