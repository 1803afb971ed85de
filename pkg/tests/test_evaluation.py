import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shuttletrack.associate import Trajectory
from shuttletrack.evaluation import EvalError, f1_score, fragment_audit, frame_taxonomy, score
from shuttletrack.synth import FrameTruth, GroundTruth, Occlusion

from conftest import make_track


def nof_truth(n, f=lambda i: (10.0 + i, 20.0)):
    return GroundTruth([FrameTruth(i, "NOF", *f(i)) for i in range(n)])


class TestScore:
    def test_perfect(self):
        truth = nof_truth(100)
        r = score({ft.i: (ft.cx, ft.cy) for ft in truth.frames}, truth)
        assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)

    def test_empty_trajectory(self):
        r = score({}, nof_truth(10))
        assert (r.precision, r.recall, r.f1, r.FN) == (1.0, 0.0, 0.0, 10)

    def test_far_position_is_fp_and_fn(self):
        truth = nof_truth(4)
        r = score({0: (10.0, 20.0), 1: (11.0, 26.0), 2: (12.0, 24.9)}, truth, tau=5)
        assert (r.TP, r.FP, r.FN) == (2, 1, 2)
        assert r.precision == pytest.approx(2 / 3) and r.recall == pytest.approx(0.5)

    def test_if_frame_positions_are_fp(self):
        frames = [FrameTruth(0, "NOF", 1.0, 1.0), FrameTruth(1, "IF", None, None), FrameTruth(2, "OF", 5.0, 5.0)]
        r = score({0: (1.0, 1.0), 1: (3.0, 3.0), 2: (5.0, 5.0)}, GroundTruth(frames))
        assert (r.TP, r.FP, r.FN, r.VF, r.IF, r.OF, r.NOF) == (2, 1, 0, 2, 1, 1, 1)

    def test_range_mismatch(self):
        with pytest.raises(EvalError):
            score({12: (0.0, 0.0)}, nof_truth(10))

    def test_accepts_trajectory_object(self):
        t = Trajectory({0: (10.0, 20.0)}, {0: "round1"})
        assert score(t, nof_truth(2)).TP == 1

    def test_report_outputs(self):
        r = score({0: (10.0, 20.0)}, nof_truth(2))
        assert json.loads(r.to_json())["TP"] == 1
        assert "Pre(%)" in r.table("V")

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from(["IF", "OF", "NOF"]), st.booleans(), st.floats(0, 12)),
                    min_size=1, max_size=40),
           st.floats(-500, 500), st.floats(-500, 500))
    def test_invariants(self, rows, sx, sy):
        frames, traj = [], {}
        for i, (cls, present, err) in enumerate(rows):
            cx, cy = (50.0 + i, 60.0) if cls != "IF" else (None, None)
            frames.append(FrameTruth(i, cls, cx, cy))
            if present:
                traj[i] = (50.0 + i + err, 60.0)
        truth = GroundTruth(frames)
        r = score(traj, truth)
        assert r.TP + r.FN == r.VF == r.OF + r.NOF
        assert r.f1 == pytest.approx(f1_score(r.precision, r.recall), abs=1e-9)
        shifted_truth = GroundTruth([FrameTruth(f.i, f.cls, None if f.cx is None else f.cx + sx,
                                                None if f.cy is None else f.cy + sy) for f in frames])
        shifted = score({k: (x + sx, y + sy) for k, (x, y) in traj.items()}, shifted_truth)
        assert (shifted.TP, shifted.FP, shifted.FN) == (r.TP, r.FP, r.FN)


class TestF1:
    @pytest.mark.parametrize("p, r, expected", [(1.0, 0.726, 0.841), (0.912, 0.658, 0.764)])
    def test_table_values(self, p, r, expected):
        assert f1_score(p, r) == pytest.approx(expected, abs=5e-4)

    def test_zero(self):
        assert f1_score(0.0, 0.0) == 0.0


class TestTaxonomy:
    def test_table_counts(self):
        counts = frame_taxonomy(["IF"] * 93 + ["OF"] * 11 + ["NOF"] * 237)
        assert counts["VF"] == 248 and counts["total"] == 341

    def test_all_nof(self):
        assert frame_taxonomy(nof_truth(7))["VF"] == 7

    def test_unknown_class(self):
        with pytest.raises(EvalError):
            frame_taxonomy(["NOF", "XF"])


def test_fragment_audit():
    truth = GroundTruth([FrameTruth(i, "NOF", float(i), 0.0) for i in range(40)], hits=[20],
                        occlusions=[Occlusion(30, 34)])
    ball_hit = make_track(0, [(f, float(f), 0.0) for f in range(10, 20)])
    ball_occ = make_track(1, [(f, float(f), 0.0) for f in range(22, 29)])
    noise = make_track(2, [(f, 100.0, 100.0) for f in range(0, 5)])
    audit = {a.id: a for a in fragment_audit([ball_hit, ball_occ, noise], truth)}
    assert (audit[0].length, audit[0].reason, audit[0].is_ball) == (10, 0, True)
    assert (audit[1].reason, audit[1].is_ball) == (1, True)
    assert (audit[2].reason, audit[2].is_ball) == (None, False)
