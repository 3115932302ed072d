import numpy as np
import pytest

from blockforge.layout import BoxLayout, ComponentBox, DEFAULT_TAXONOMY


@pytest.fixture
def taxonomy():
    return DEFAULT_TAXONOMY


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_box(rng, category=None, k=13):
    center = tuple(rng.uniform(0.0, 1.0, 3))
    size = tuple(rng.uniform(0.02, 0.6, 3))
    if category is None:
        category = int(rng.integers(k))
    return ComponentBox(center, size, category)


def random_layout(rng, n=None, k=13):
    n = n or int(rng.integers(2, 9))
    return BoxLayout(tuple(random_box(rng, k=k) for _ in range(n)))


@pytest.fixture
def demo_layout():
    """Small fixed layout: one wall, two windows, one roof."""
    return BoxLayout((
        ComponentBox((0.5, 0.3, 0.4), (0.8, 0.05, 0.5), 0),
        ComponentBox((0.3, 0.3, 0.4), (0.1, 0.08, 0.15), 1),
        ComponentBox((0.7, 0.3, 0.4), (0.1, 0.08, 0.15), 1),
        ComponentBox((0.5, 0.5, 0.8), (0.9, 0.9, 0.2), 3),
    ), prompt="a test house", id="demo")
