import numpy as np
import pytest
from hypothesis import given, strategies as st

from promptseg import CropSpec, Mask, Volume, crop_center_bounds, crop_origin, extract_crop


def make_volume(dims=(64, 64, 24, 1), seed=0):
    rng = np.random.default_rng(seed)
    return Volume(data=rng.standard_normal(dims))


class TestVolume:
    def test_dims_and_spatial_dims(self):
        v = make_volume((4, 5, 6, 2))
        assert v.dims == (4, 5, 6, 2)
        assert v.spatial_dims == (4, 5, 6)

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError, match="rank 4"):
            Volume(data=np.zeros((4, 4, 4)))

    def test_rejects_non_finite(self):
        data = np.zeros((2, 2, 2, 1))
        data[0, 0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            Volume(data=data)

    def test_rejects_bad_spacing(self):
        with pytest.raises(ValueError, match="spacing"):
            Volume(data=np.zeros((2, 2, 2, 1)), spacing=(1.0, 0.0, 1.0))

    def test_data_is_write_protected(self):
        v = make_volume((2, 2, 2, 1))
        with pytest.raises(ValueError):
            v.data[0, 0, 0, 0] = 1.0


class TestMask:
    def test_values_must_be_binary(self):
        with pytest.raises(ValueError, match="0 or 1"):
            Mask(np.full((2, 2, 2), 3))

    def test_voxel_count(self):
        m = Mask(np.eye(3, dtype=np.uint8)[..., None] * np.ones((3, 3, 2), dtype=np.uint8))
        assert m.voxel_count() == int(m.data.sum())

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError, match="rank 3"):
            Mask(np.zeros((2, 2)))


class TestCropOrigin:
    def test_interior_center(self):
        spec = CropSpec(size=(10, 10, 6), center=(32, 32, 12))
        assert crop_origin((64, 64, 24), spec) == (27, 27, 9)

    def test_clamp_at_lower_bound(self):
        spec = CropSpec(size=(10, 10, 6), center=(2, 2, 2))
        assert crop_origin((64, 64, 24), spec) == (0, 0, 0)

    def test_clamp_at_upper_bound(self):
        spec = CropSpec(size=(10, 10, 6), center=(63, 63, 23))
        assert crop_origin((64, 64, 24), spec) == (54, 54, 18)

    def test_size_exceeding_volume_raises(self):
        with pytest.raises(ValueError, match="exceeds volume dims"):
            crop_origin((8, 8, 4), CropSpec(size=(10, 10, 6), center=(4, 4, 2)))

    @given(st.tuples(st.integers(-5, 70), st.integers(-5, 70), st.integers(-5, 30)))
    def test_origin_always_in_bounds(self, center):
        # Even wild centers clamp into [0, dim - size] per axis.
        origin = crop_origin((64, 64, 24), CropSpec(size=(10, 10, 6), center=center))
        for o, dim, size in zip(origin, (64, 64, 24), (10, 10, 6)):
            assert 0 <= o <= dim - size


class TestCropCenterBounds:
    def test_default_geometry(self):
        lo, hi = crop_center_bounds((64, 64, 24), (10, 10, 6))
        assert lo == (5, 5, 3)
        assert hi == (59, 59, 21)

    def test_unclamped_inside_bounds(self):
        lo, hi = crop_center_bounds((64, 64, 24), (10, 10, 6))
        for center in (lo, hi):
            spec = CropSpec(size=(10, 10, 6), center=center)
            ideal = tuple(c - s // 2 for c, s in zip(center, (10, 10, 6)))
            assert crop_origin((64, 64, 24), spec) == ideal


class TestExtractCrop:
    def test_shape_and_content(self):
        v = make_volume()
        crop = extract_crop(v, CropSpec(size=(10, 10, 6), center=(32, 32, 12)))
        assert crop.data.shape == (10, 10, 6, 1)
        assert crop.origin == (27, 27, 9)
        np.testing.assert_array_equal(crop.data, v.data[27:37, 27:37, 9:15, :])

    @given(st.tuples(st.integers(0, 63), st.integers(0, 63), st.integers(0, 23)))
    def test_dims_equal_spec_size_everywhere(self, center):
        v = make_volume(seed=1)
        crop = extract_crop(v, CropSpec(size=(10, 10, 6), center=center))
        assert crop.data.shape == (10, 10, 6, 1)

    def test_pure(self):
        v = make_volume(seed=2)
        spec = CropSpec(size=(4, 4, 4), center=(10, 10, 10))
        a, b = extract_crop(v, spec), extract_crop(v, spec)
        assert a.origin == b.origin
        np.testing.assert_array_equal(a.data, b.data)
