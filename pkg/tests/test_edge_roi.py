import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wbcquant.edge_roi import (
    EdgeDetectorParams,
    EdgeResult,
    block_score,
    corner_filter,
    detect_fuzzy_wbc,
    detect_muscle_texture,
    exclude_near_edge,
    intersect_and_refine,
    merge_detectors,
    score_blocks,
)
from wbcquant.errors import InvalidInputError
from wbcquant.imgproc import Component, fill_holes

H, W = 600, 800


def striped(h=H, w=W, bg=180, amp=12, period=40):
    xs = np.arange(w)
    row = np.round(bg + amp * np.sin(2 * np.pi * xs / period))
    return np.repeat(row[None, :], h, axis=0).astype(np.uint8)


def point(x, y, label=1):
    return Component(label, 1, (x, y, x, y), (float(x), float(y)), np.array([[x, y]]))


def vertical_edge(x=100, h=H, w=W):
    edge = np.zeros((h, w), bool)
    edge[:, x] = True
    empty = np.zeros((h, w), bool)
    empty[:, :x] = True
    return EdgeResult(empty_space=empty, muscle_edge=edge)


def no_edge(h=H, w=W):
    z = np.zeros((h, w), bool)
    return EdgeResult(empty_space=z, muscle_edge=z.copy())


class TestTextureDetector:
    def test_fully_textured_is_empty(self):
        assert not detect_muscle_texture(striped()).any()

    def test_flat_region_on_left(self):
        img = striped()
        img[:, :240] = 235
        m = detect_muscle_texture(img)
        assert m[:, :240].mean() > 0.9
        assert not m[:, 300:].any()
        assert m[:20, :20].any() and m[-20:, :20].any()

    def test_small_flat_patch_below_area_floor(self):
        img = striped()
        img[:50, :50] = 235
        assert not detect_muscle_texture(img).any()

    def test_too_small(self):
        with pytest.raises(InvalidInputError):
            detect_muscle_texture(np.zeros((30, 30), np.uint8))


class TestFuzzyDetector:
    def test_constant_image(self):
        assert not detect_fuzzy_wbc(np.full((400, 400), 150, np.uint8)).any()

    def test_dark_band_on_top_edge(self):
        img = np.full((H, W), 200, np.uint8)
        img[:60] = 60
        m = detect_fuzzy_wbc(img)
        assert m[:60].mean() > 0.99
        # only the rounded skirt of the closing leaks below the band
        assert m[80:].sum() == 0

    def test_interior_band_fails_corner_filter(self):
        img = np.full((H, W), 200, np.uint8)
        img[250:310, 200:600] = 60
        assert not detect_fuzzy_wbc(img).any()


class TestCornerFilter:
    def test_anchoring(self):
        m = np.zeros((100, 100), bool)
        m[5:10, 5:10] = True     # inside a corner window
        m[40:50, 0:5] = True     # touches the border only
        m[45:55, 45:55] = True   # floating
        loose = corner_filter(m, 20)
        strict = corner_filter(m, 20, strict=True)
        assert loose[5, 5] and loose[45, 0] and not loose[50, 50]
        assert strict[5, 5] and not strict[45, 0] and not strict[50, 50]

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_output_components_are_anchored(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.random((60, 60)) < 0.08
        out = corner_filter(m, 10, strict=True)
        assert not (out & ~m).any()
        window = np.zeros_like(m)
        window[:10, :10] = window[:10, -10:] = window[-10:, :10] = window[-10:, -10:] = True
        from scipy import ndimage
        labels, n = ndimage.label(out, np.ones((3, 3)))
        for i in range(1, n + 1):
            assert (window & (labels == i)).any()


class TestIntersectAndRefine:
    def big_mask(self):
        m = np.zeros((H, W), bool)
        m[:, :300] = True
        m[100:120, 100:120] = False  # hole
        return m

    def test_empty_input(self):
        r = intersect_and_refine(np.zeros((H, W), bool), self.big_mask(), EdgeDetectorParams(merge_mode="intersection"))
        assert not r.empty_space.any() and not r.has_edge

    def test_identical_masks(self):
        m = self.big_mask()
        r = intersect_and_refine(m, m)
        assert (r.empty_space == fill_holes(m)).all()
        assert r.has_edge

    def test_small_overlap_dropped(self):
        m = np.zeros((H, W), bool)
        m[:200, :200] = True  # 40,000 px
        r = intersect_and_refine(m, m)
        assert not r.empty_space.any() and not r.has_edge

    def test_union_vs_intersection(self):
        a = np.zeros((H, W), bool)
        a[:, :300] = True
        b = np.zeros((H, W), bool)
        b[:, 200:500] = True
        u = intersect_and_refine(a, b)
        i = intersect_and_refine(a, b, EdgeDetectorParams(merge_mode="intersection"))
        assert (u.empty_space == (a | b)).all()
        assert (i.empty_space == (a & b)).all()
        assert (u.confident == (a & b)).all()

    def test_edge_hugs_boundary(self):
        from scipy import ndimage
        r = intersect_and_refine(self.big_mask(), self.big_mask())
        e = r.empty_space
        boundary = e ^ ndimage.binary_erosion(e, border_value=1) | (~e ^ ndimage.binary_erosion(~e, border_value=1))
        near = ndimage.binary_dilation(boundary, iterations=2)
        assert r.has_edge and not (r.muscle_edge & ~near).any()

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            intersect_and_refine(np.zeros((10, 10), bool), np.zeros((10, 11), bool))


class TestMergeDetectors:
    def test_flat_bright_void(self):
        img = striped()
        img[:, :240] = 235
        r = merge_detectors(img)
        assert r.has_edge and r.empty_space[:, :240].mean() > 0.9

    def test_no_void(self):
        assert not merge_detectors(striped()).has_edge

    @pytest.mark.parametrize("level", [0, 90, 180, 255])
    def test_constant_image(self, level):
        assert not merge_detectors(np.full((H, W), level, np.uint8)).has_edge

    def test_dense_cells_beside_void(self):
        img = striped()
        img[:, :240] = 235
        ys, xs = np.mgrid[0:H, 0:W]
        for y in range(15, H, 30):
            for x in range(250, 330, 28):
                img[(xs - x) ** 2 + (ys - y) ** 2 <= 144] = 70
        r = merge_detectors(img)
        assert r.has_edge and r.empty_space[:, :240].mean() > 0.9


class TestExcludeNearEdge:
    def test_identity_without_edge(self):
        objs = [point(10, 10), point(400, 300)]
        assert exclude_near_edge(objs, no_edge()) == objs

    def test_distances(self):
        edge = vertical_edge(100)
        near, far = point(250, 300, 1), point(350, 300, 2)
        assert exclude_near_edge([near, far], edge, d=200) == [far]

    def test_subset_and_idempotent(self, rng):
        edge = vertical_edge(300)
        objs = [point(int(x), int(y), i) for i, (x, y) in
                enumerate(zip(rng.integers(0, W, 50), rng.integers(0, H, 50)))]
        once = exclude_near_edge(objs, edge, 120)
        assert all(o in objs for o in once)
        assert exclude_near_edge(once, edge, 120) == once

    def test_negative_d(self):
        with pytest.raises(InvalidInputError):
            exclude_near_edge([], no_edge(), -1)


class TestScoreBlocks:
    def test_unobstructed(self):
        grid = score_blocks((H, W), no_edge(), [])
        assert grid.scores.shape == (3, 4)
        assert (grid.scores >= 0.8).all() and grid.in_roi.all()

    def test_void_block_excluded(self):
        edge = vertical_edge(200)
        grid = score_blocks((H, W), edge, [])
        assert grid.void_fraction[0, 0] == 1.0
        assert grid.scores[0, 0] <= 0.2 and not grid.in_roi[0, 0]
        assert grid.in_roi[:, 3].all()

    def test_grid_dims_with_remainder(self):
        grid = score_blocks((450, 530), no_edge(450, 530), [])
        assert grid.scores.shape == (3, 3)
        assert grid.pixel_mask((450, 530)).shape == (450, 530)

    def test_objects_raise_score(self):
        objs = [point(50 + i, 50, i) for i in range(7)]
        grid = score_blocks((H, W), no_edge(), objs)
        assert grid.scores[0, 0] == pytest.approx(1.0)
        assert grid.scores[0, 1] == pytest.approx(0.8)

    def test_in_roi_void_below_half(self, rng):
        empty = rng.random((H, W)) < rng.random()
        edge = EdgeResult(empty_space=empty, muscle_edge=np.zeros((H, W), bool))
        grid = score_blocks((H, W), edge, [])
        assert (grid.void_fraction[grid.in_roi] < 0.5).all()

    @settings(max_examples=50)
    @given(c=st.floats(0, 1), n=st.floats(0, 1), v1=st.floats(0, 1), v2=st.floats(0, 1))
    def test_monotone_in_void(self, c, n, v1, v2):
        lo, hi = sorted((v1, v2))
        assert block_score(c, hi, n) <= block_score(c, lo, n)

    def test_to_text(self):
        grid = score_blocks((H, W), vertical_edge(200), [])
        lines = grid.to_text().splitlines()
        assert len(lines) == 3 and all(len(line) == 4 and set(line) <= {"0", "1"} for line in lines)
