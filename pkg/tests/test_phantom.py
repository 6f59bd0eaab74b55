import numpy as np
import pytest
from dataclasses import replace

from promptseg import PhantomConfig, generate_phantom, generate_phantom_set

from conftest import TINY_PHANTOM


def brute_force_ellipsoid_count(dims, center, radii):
    # Independent voxel scan of ((x-c)/r)^2 sum <= 1; oracle for the mask.
    count = 0
    for x in range(dims[0]):
        for y in range(dims[1]):
            for z in range(dims[2]):
                q = ((x - center[0]) / radii[0]) ** 2
                q += ((y - center[1]) / radii[1]) ** 2
                q += ((z - center[2]) / radii[2]) ** 2
                if q <= 1.0:
                    count += 1
    return count


class TestConfigValidation:
    def test_lesion_leaving_gland_rejected(self):
        with pytest.raises(ValueError, match="leave the gland"):
            PhantomConfig(gland_radius=5.0)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError, match="noise_sigma"):
            PhantomConfig(noise_sigma=-0.1)

    def test_inverted_range_rejected(self):
        with pytest.raises(ValueError, match="lo > hi"):
            PhantomConfig(lesion_center_range=((40, 24), (24, 40), (10, 14)))


class TestGeneratePhantom:
    def test_no_lesion(self):
        ph = generate_phantom(replace(TINY_PHANTOM, lesion_present=False), seed=0)
        assert ph.mask.voxel_count() == 0
        assert ph.weak_label == 0
        assert ph.lesion_center is None

    def test_deterministic(self):
        a = generate_phantom(TINY_PHANTOM, seed=4)
        b = generate_phantom(TINY_PHANTOM, seed=4)
        np.testing.assert_array_equal(a.volume.data, b.volume.data)
        np.testing.assert_array_equal(a.mask.data, b.mask.data)
        assert a.weak_label == b.weak_label

    def test_mask_matches_voxel_scan_oracle(self):
        cfg = PhantomConfig(
            dims=(32, 32, 16, 1),
            lesion_center_range=((16, 16), (16, 16), (8, 8)),
            lesion_radii_range=((4, 4), (4, 4), (3, 3)),
            noise_sigma=0.0,
            gland_radius=12.0,
        )
        ph = generate_phantom(cfg, seed=0)
        expected = brute_force_ellipsoid_count((32, 32, 16), (16, 16, 8), (4, 4, 3))
        assert ph.mask.voxel_count() == expected

    def test_voxel_count_monotone_in_radii(self):
        counts = []
        for r in (4, 5, 6):
            cfg = PhantomConfig(
                lesion_center_range=((32, 32), (32, 32), (12, 12)),
                lesion_radii_range=((r, r), (r, r), (3, 3)),
                noise_sigma=0.0,
            )
            counts.append(generate_phantom(cfg, seed=0).mask.voxel_count())
        assert counts[0] < counts[1] < counts[2]

    def test_lesion_brightens_both_channels(self):
        cfg = replace(
            PhantomConfig(),
            lesion_center_range=((32, 32), (32, 32), (12, 12)),
            noise_sigma=0.0,
        )
        ph = generate_phantom(cfg, seed=1)
        inside = ph.mask.data.astype(bool)
        for ch in range(2):
            plane = ph.volume.data[..., ch]
            assert plane[inside].mean() > plane[~inside].mean() + 1.0

    def test_noise_free_volume_without_lesion_is_pure_gland(self):
        cfg = replace(TINY_PHANTOM, lesion_present=False, noise_sigma=0.0)
        a = generate_phantom(cfg, seed=0)
        b = generate_phantom(cfg, seed=99)
        np.testing.assert_array_equal(a.volume.data, b.volume.data)


class TestGeneratePhantomSet:
    def test_label_fraction(self):
        phantoms = generate_phantom_set(TINY_PHANTOM, 6, 0.5, seed=0)
        assert [p.weak_label for p in phantoms] == [1, 1, 1, 0, 0, 0]

    def test_fraction_rounding(self):
        phantoms = generate_phantom_set(TINY_PHANTOM, 5, 0.5, seed=0)
        assert sum(p.weak_label for p in phantoms) == round(0.5 * 5)

    def test_deterministic_and_members_distinct(self):
        a = generate_phantom_set(TINY_PHANTOM, 4, 1.0, seed=7)
        b = generate_phantom_set(TINY_PHANTOM, 4, 1.0, seed=7)
        for pa, pb in zip(a, b):
            np.testing.assert_array_equal(pa.volume.data, pb.volume.data)
        assert not np.array_equal(a[0].volume.data, a[1].volume.data)

    def test_bad_fraction_rejected(self):
        with pytest.raises(ValueError, match="lesion_fraction"):
            generate_phantom_set(TINY_PHANTOM, 4, 1.5, seed=0)
