import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shuttletrack.media import MediaError
from shuttletrack.motion import abs_diff, binarize, motion_mask, sequence_masks

from conftest import make_frame


def naive_mask(prev, cur, nxt, a):
    """Pixel-by-pixel three-frame difference."""
    h, w, _ = cur.shape
    out = np.zeros((h, w), bool)
    for r in range(h):
        for c in range(w):
            d1 = max(abs(int(cur[r, c, k]) - int(prev[r, c, k])) for k in range(3))
            d2 = max(abs(int(cur[r, c, k]) - int(nxt[r, c, k])) for k in range(3))
            out[r, c] = d1 > a and d2 > a
    return out


def blob_frame(x, size=3, shape=(32, 48)):
    img = np.zeros(shape + (3,), np.uint8)
    img[:] = (40, 120, 60)
    img[10:10 + size, x:x + size] = 255
    return img


triples = arrays(np.uint8, (3, 16, 16, 3))


class TestBinarize:
    def test_zero(self):
        assert not binarize(np.zeros((8, 8), np.uint8), 10).any()

    def test_single_pixel(self):
        d = np.zeros((8, 8), np.uint8)
        d[3, 5] = 255
        assert np.argwhere(binarize(d, 10)).tolist() == [[3, 5]]

    def test_strict(self):
        assert not binarize(np.full((2, 2), 30, np.uint8), 30).any()

    def test_random_against_loop(self):
        d = np.random.default_rng(3).integers(0, 256, (16, 16)).astype(np.uint8)
        expected = np.array([[d[r, c] > 30 for c in range(16)] for r in range(16)])
        assert np.array_equal(binarize(d, 30), expected)


class TestMotionMask:
    def test_identical_frames(self):
        f = make_frame(blob_frame(10))
        assert not motion_mask(f, f, f, 25).bits.any()

    def test_ghosts_removed(self):
        prev, cur, nxt = (make_frame(blob_frame(x), i) for i, x in enumerate((10, 20, 30)))
        m = motion_mask(prev, cur, nxt, 25)
        expected = np.zeros((32, 48), bool)
        expected[10:13, 20:23] = True
        assert np.array_equal(m.bits, expected)
        assert m.index == 1

    def test_slow_blob_matches_oracle(self):
        imgs = [blob_frame(x) for x in (10, 11, 12)]
        m = motion_mask(*(make_frame(i) for i in imgs), 25)
        assert np.array_equal(m.bits, naive_mask(*imgs, 25))

    def test_shape_mismatch(self):
        a = make_frame(np.zeros((16, 16, 3)))
        b = make_frame(np.zeros((16, 20, 3)))
        with pytest.raises(MediaError):
            motion_mask(a, a, b)

    def test_abs_diff_uses_channel_max(self):
        a = np.zeros((1, 1, 3), np.uint8)
        b = np.array([[[10, 200, 30]]], np.uint8)
        assert abs_diff(a, b)[0, 0] == 200 and abs_diff(b, a)[0, 0] == 200

    def test_sequence_masks_interior_only(self):
        frames = [make_frame(blob_frame(x), i) for i, x in enumerate(range(5, 30, 5))]
        assert sorted(sequence_masks(frames)) == [1, 2, 3]

    @settings(max_examples=40, deadline=None)
    @given(triples, st.integers(0, 255))
    def test_and_containment(self, t, a):
        A, B, C = (make_frame(x) for x in t)
        m = motion_mask(A, B, C, a).bits
        assert not (m & ~binarize(abs_diff(B.pixels, A.pixels), a)).any()
        assert not (m & ~binarize(abs_diff(B.pixels, C.pixels), a)).any()

    @settings(max_examples=40, deadline=None)
    @given(triples, st.integers(0, 255))
    def test_symmetry(self, t, a):
        A, B, C = (make_frame(x) for x in t)
        assert np.array_equal(motion_mask(A, B, C, a).bits, motion_mask(C, B, A, a).bits)

    @settings(max_examples=40, deadline=None)
    @given(triples, st.integers(0, 254), st.integers(1, 50))
    def test_monotone_in_threshold(self, t, a, step):
        A, B, C = (make_frame(x) for x in t)
        lo = motion_mask(A, B, C, a).bits
        hi = motion_mask(A, B, C, min(255, a + step)).bits
        assert not (hi & ~lo).any()
