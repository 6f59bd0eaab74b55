import numpy as np
import pytest

from promptseg import PhantomConfig, generate_phantom, roi_fraction_scorer

# Small config for tests that train: 16x16x8 single-channel keeps epochs cheap.
TINY_PHANTOM = PhantomConfig(
    dims=(16, 16, 8, 1),
    lesion_center_range=((6, 10), (6, 10), (3, 5)),
    lesion_radii_range=((2, 3), (2, 3), (1, 2)),
    gland_radius=8.0,
)

# Centered sphere with a fixed radius: the oracle-scorer end-to-end case.
SPHERE_PHANTOM = PhantomConfig(
    lesion_center_range=((32, 32), (32, 32), (12, 12)),
    lesion_radii_range=((8, 8), (8, 8), (8, 8)),
)


@pytest.fixture(scope="session")
def sphere():
    """Radius-8 sphere at (32,32,12) in the default 64x64x24 volume."""
    return generate_phantom(SPHERE_PHANTOM, seed=3)


@pytest.fixture(scope="session")
def sphere_scorers(sphere):
    scorer = roi_fraction_scorer(sphere.mask)
    return scorer, scorer


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_mask_array(rng, dims, density=0.3):
    return (rng.random(dims) < density).astype(np.uint8)
