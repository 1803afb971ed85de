import numpy as np
import pytest

from shuttletrack.classify import ClassLabel, HeuristicClassifier, patch_feature
from shuttletrack.media import FrameStore
from shuttletrack.proposals import ProposalParams
from shuttletrack.redetect import (RedetectParams, detect_in_roi, inter_redetect, intra_redetect,
                                   nearest_neighbors, predict, redetect_all)

from conftest import make_frame, make_track

PP = ProposalParams(c_min=4, c_max=75, a_human=400)
CLF = HeuristicClassifier()


def truth(f):
    return 12.0 + 4.0 * f, 40.0 + 1.0 * f


def scene(n=40, shape=(120, 200), hide=(), line_row=None, ball=(255, 255, 255)):
    frames = []
    for f in range(n):
        img = np.zeros(shape + (3,), np.uint8)
        img[:] = (46, 122, 70)
        if line_row is not None:
            img[line_row:line_row + 3, :] = 200
        if f not in hide:
            x, y = truth(f)
            img[int(y) - 2:int(y) + 3, int(x) - 2:int(x) + 3] = ball
        frames.append(make_frame(img, f))
    return FrameStore(frames)


def frag(tid, frames, responses=None):
    return make_track(tid, [(f, *truth(f)) for f in frames], responses)


class Fixed:
    """Classifier stub that returns one label for every stack."""

    def __init__(self, lid):
        self.lid = lid

    def classify_many(self, stacks):
        return [(ClassLabel(self.lid), 0.9, patch_feature(s.patches[1])) for s in stacks]


class TestPredict:
    def test_forward_constant_velocity(self):
        t = frag(0, range(5, 10))
        roi = predict(t, 12, RedetectParams())
        assert roi.center == pytest.approx(truth(12))
        assert roi.radius == 20 + 8 * 3

    def test_backward(self):
        t = frag(0, range(5, 10))
        roi = predict(t, 3, RedetectParams(r0=10, r_growth=2))
        assert roi.center == pytest.approx(truth(3))
        assert roi.radius == 14

    def test_uses_last_k_points(self):
        pts = [(f, 0.0, 0.0) for f in range(5)] + [(f, 10.0 * (f - 4), 0.0) for f in range(5, 10)]
        t = make_track(0, pts)
        roi = predict(t, 10, RedetectParams(k_fit=5))
        assert roi.center == pytest.approx((60.0, 0.0))

    def test_clipped_to_frame(self):
        t = frag(0, range(5, 10))
        roi = predict(t, 200, RedetectParams(), shape=(120, 200))
        assert roi.center[0] == 199 and 0 <= roi.center[1] <= 119


class TestIntra:
    def test_fills_single_gap(self):
        store = scene()
        t = frag(0, [3, 5])
        out = intra_redetect(t, store, CLF, PP)
        p = next(p for p in out.points if p.frame == 4)
        assert p.source == "intra"
        assert np.hypot(p.x - truth(4)[0], p.y - truth(4)[1]) <= 3

    def test_no_gaps_unchanged(self):
        t = frag(0, range(3, 9))
        out = intra_redetect(t, scene(), CLF, PP)
        assert out.points == t.points

    def test_invisible_ball_leaves_gap(self):
        out = intra_redetect(frag(0, [3, 5]), scene(hide={4}), CLF, PP)
        assert out.frames() == {3, 5}

    @pytest.mark.parametrize("lid, filled", [(1, True), (3, False)])
    def test_sideline_overlap_depends_on_label(self, lid, filled):
        store = scene(line_row=42)
        out = intra_redetect(frag(0, [3, 5]), store, Fixed(lid), PP)
        assert (4 in out.frames()) is filled

    def test_input_not_mutated(self):
        t = frag(0, [3, 6])
        intra_redetect(t, scene(), CLF, PP)
        assert t.frames() == {3, 6}


class TestInter:
    def test_grows_to_adjacency(self):
        store = scene()
        a, b = frag(0, range(2, 10)), frag(1, range(13, 20))
        grown = inter_redetect(a, b, store, CLF, PP, RedetectParams(), "future")
        assert {10, 11, 12, 13} <= grown.frames()
        end = grown.points[-1]
        assert end.frame == 13 and np.hypot(end.x - truth(13)[0], end.y - truth(13)[1]) <= 4
        back = inter_redetect(b, a, store, CLF, PP, RedetectParams(), "past")
        assert {9, 10, 11, 12} <= back.frames()
        assert all(p.source == "inter" for p in back.points if p.frame < 13)

    def test_abandons_long_gap(self):
        store = scene(n=60)
        a, b = frag(0, range(2, 10)), frag(1, range(40, 48))
        p = RedetectParams(g_max=12)
        assert inter_redetect(a, b, store, CLF, PP, p, "future") is a
        assert inter_redetect(b, a, store, CLF, PP, p, "past") is b

    def test_grows_to_sequence_edge(self):
        store = scene(n=16)
        grown = inter_redetect(frag(0, range(5, 12)), None, store, CLF, PP, RedetectParams(), "future")
        # the last frame has no successor, so its patch stack repeats itself and shows no motion
        assert max(grown.frames()) == 14
        assert 15 in inter_redetect(frag(0, range(5, 12)), None, store, Fixed(0), PP).frames()

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            inter_redetect(frag(0, [1, 2]), None, scene(n=5), CLF, PP, direction="sideways")


def test_detect_in_roi_prefers_nearest():
    store = scene()
    x, y = truth(10)
    det = detect_in_roi(store, 10, (x + 3, y), 25, CLF, PP, "intra")
    assert det is not None and abs(det.centroid[0] - x) <= 1
    assert detect_in_roi(store, 10, (150.0, 100.0), 10, CLF, PP, "intra") is None
    assert detect_in_roi(store, 99, (x, y), 10, CLF, PP, "intra") is None


def test_nearest_neighbors():
    a, b, c = frag(0, range(0, 5)), frag(1, range(10, 15)), frag(2, range(20, 25))
    assert nearest_neighbors(b, [a, b, c]) == (a, c)
    assert nearest_neighbors(a, [a, b, c]) == (None, b)


def test_redetect_all_joins_fragments():
    store = scene()
    out = redetect_all([frag(0, range(2, 10)), frag(1, range(12, 20))], store, CLF, PP)
    assert {10, 11} <= out[0].frames() and {10, 11} <= out[1].frames()
