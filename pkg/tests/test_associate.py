import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shuttletrack.associate import Trajectory, TrackerGroups, associate, merge, trajectory_json

from conftest import make_track


def path(f):
    return 10.0 + 5.0 * f, 100.0 - 2.0 * f + 0.05 * f * f


def frag(tid, frames, responses=None, shift=(0.0, 0.0), source="detect"):
    return make_track(tid, [(f, path(f)[0] + shift[0], path(f)[1] + shift[1]) for f in frames], responses,
                      source=source)


def positions(traj):
    return {f: tuple(p) for f, p in traj.positions.items()}


class TestMerge:
    def test_disjoint_union(self):
        traj = merge(Trajectory(), frag(0, range(0, 5)))
        merge(traj, frag(1, range(10, 13)))
        assert traj.frames() == list(range(5)) + [10, 11, 12]
        assert traj.track_ids == [0, 1]

    def test_duplicate_unchanged(self):
        traj = merge(Trajectory(), frag(0, range(5)))
        before = positions(traj)
        merge(traj, frag(1, range(5), shift=(1, 1)))
        assert positions(traj) == before and set(traj.owners.values()) == {0}

    def test_partial_overlap(self):
        a, b = frag(0, range(0, 6)), frag(1, range(4, 9), shift=(2, 0))
        traj = merge(merge(Trajectory(), a), b)
        expected = {p.frame: (p.x, p.y) for p in a.points}
        expected.update({p.frame: (p.x, p.y) for p in b.points if p.frame not in expected})
        assert positions(traj) == expected

    def test_provenance(self):
        traj = merge(Trajectory(), frag(0, [1, 2], source="inter"))
        assert traj.provenance == {1: "inter", 2: "inter"}


class TestAssociate:
    def test_empty(self):
        assert len(associate([])) == 0

    def test_single_track(self):
        t = frag(0, range(3, 12))
        traj = associate([t])
        assert positions(traj) == {p.frame: (p.x, p.y) for p in t.points}

    def test_duplicate_merged(self):
        a = frag(0, range(0, 40), responses=40)
        b = frag(1, [10, 11, 12], shift=(2, -1))
        groups = TrackerGroups()
        traj = associate([a, b], groups=groups)
        assert groups.correct == [0, 1] and groups.wrong == []
        assert positions(traj) == positions(associate([a]))

    def test_contradiction_rejected(self):
        a = frag(0, range(0, 40), responses=40)
        c = make_track(2, [(f, 300.0, 50.0 + f) for f in range(20, 30)])
        c.points[0] = type(c.points[0])(20, path(20)[0] + 50, path(20)[1])
        groups = TrackerGroups()
        traj = associate([a, c], groups=groups)
        assert groups.wrong == [2]
        assert 2 not in traj.owners.values()

    def test_adjacent_fragments_chain(self):
        # as after inter growth: each neighbour shares one consistent frame
        a = frag(0, range(20, 41), responses=21)
        b = frag(1, range(40, 61), responses=12)
        c = frag(2, range(5, 21), responses=9)
        groups = TrackerGroups()
        traj = associate([a, b, c], groups=groups)
        assert traj.frames() == list(range(5, 61))
        assert sorted(groups.correct) == [0, 1, 2]

    def test_disagreeing_weak_neighbour_dropped(self):
        a = frag(0, range(0, 21), responses=21)
        b = frag(1, range(20, 30), shift=(40, 0), responses=4)
        groups = TrackerGroups()
        traj = associate([a, b], groups=groups)
        assert groups.wrong == [] and groups.dropped == [1]
        assert 1 not in traj.owners.values()

    def test_disagreeing_strong_neighbour_promoted(self):
        # one off-by-6 frame at a shared endpoint must not throw away a long fragment
        a = frag(0, range(0, 21), responses=21)
        b = frag(1, range(20, 40), shift=(6, 0), responses=20)
        groups = TrackerGroups()
        traj = associate([a, b], groups=groups)
        assert groups.correct == [0, 1]
        assert traj.positions[20] == pytest.approx(path(20)) and traj.owners[21] == 1

    def test_gap_promotes_strong_track(self):
        a = frag(0, range(0, 20), responses=20)
        b = frag(1, range(40, 50), responses=10)
        groups = TrackerGroups()
        traj = associate([a, b], groups=groups)
        assert groups.correct == [0, 1]
        assert len(traj) == 30

    def test_weak_leftovers_dropped(self):
        a = frag(0, range(0, 20), responses=20)
        b = frag(1, range(40, 44), responses=4)
        groups = TrackerGroups()
        traj = associate([a, b], t_valid=5, groups=groups)
        assert groups.dropped == [1] and len(traj) == 20

    def test_seed_is_most_responsive(self):
        a = frag(0, range(10, 20), responses=10)
        b = frag(1, range(5, 30), shift=(30, 0), responses=25)
        groups = TrackerGroups()
        associate([a, b], groups=groups)
        assert groups.correct == [1] and groups.wrong == [0]

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 60), st.integers(3, 25), st.sampled_from([0.0, 0.0, 30.0]),
                              st.integers(2, 30)), min_size=1, max_size=6))
    def test_invariants(self, specs):
        tracks = [frag(i, range(s, s + n), responses=r, shift=(dx, 0)) for i, (s, n, dx, r) in enumerate(specs)]
        groups = TrackerGroups()
        traj = associate(tracks, eps=5, groups=groups)
        ids = [t.id for t in tracks]
        settled = groups.correct + groups.wrong + groups.dropped
        assert sorted(settled) == sorted(ids)
        by_id = {t.id: t for t in tracks}
        for f, owner in traj.owners.items():
            assert owner in groups.correct
            assert by_id[owner].position(f) == pytest.approx(traj.positions[f])
        for tid in groups.wrong:
            t = by_id[tid]
            assert any(f in traj.positions and np.hypot(*(t.position(f) - np.array(traj.positions[f]))) > 5
                       for f in t.frames())
            assert tid not in traj.owners.values()
        again = associate([t.copy() for t in tracks], eps=5)
        assert positions(again) == positions(traj)


class TestTrajectoryIO:
    def test_csv_round_trip(self):
        traj = associate([frag(0, range(3, 8))])
        text = traj.to_csv()
        assert text.splitlines()[0] == "frame,cx,cy,provenance"
        back = Trajectory.from_csv(text)
        assert back.to_csv() == text

    def test_bad_header(self):
        with pytest.raises(ValueError):
            Trajectory.from_csv("a,b,c\n1,2,3\n")

    def test_json(self):
        a, b = frag(0, range(0, 10), responses=10), frag(1, range(5, 8), shift=(40, 0))
        groups = TrackerGroups()
        traj = associate([a, b], groups=groups)
        doc = json.loads(trajectory_json(traj, [a, b], groups))
        meta = {m["id"]: m for m in doc["tracks"]}
        assert meta[0]["group"] == "correct" and meta[0]["contributed"] == 10
        assert meta[1]["group"] == "wrong" and meta[1]["contributed"] == 0
        assert len(doc["frames"]) == 10
