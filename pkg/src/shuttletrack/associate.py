"""Merge tracklets into one ball trajectory and reject the ones that disagree."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .track import Track

PROVENANCE = {"detect": "round1", "intra": "intra", "inter": "inter"}


@dataclass
class Trajectory:
    positions: dict[int, tuple[float, float]] = field(default_factory=dict)
    provenance: dict[int, str] = field(default_factory=dict)
    owners: dict[int, int] = field(default_factory=dict)  # frame -> contributing track id
    track_ids: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.positions)

    def frames(self) -> list[int]:
        return sorted(self.positions)

    @property
    def span(self) -> tuple[int, int]:
        fr = self.frames()
        return fr[0], fr[-1]

    def to_csv(self) -> str:
        lines = ["frame,cx,cy,provenance"]
        for f in self.frames():
            x, y = self.positions[f]
            lines.append(f"{f},{x:.3f},{y:.3f},{self.provenance[f]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        traj = cls()
        rows = [ln for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0].split(",")[:3] != ["frame", "cx", "cy"]:
            raise ValueError("trajectory CSV must start with a frame,cx,cy header")
        for ln in rows[1:]:
            parts = ln.split(",")
            f = int(parts[0])
            traj.positions[f] = (float(parts[1]), float(parts[2]))
            traj.provenance[f] = parts[3] if len(parts) > 3 else "round1"
        return traj


@dataclass
class TrackerGroups:
    original: list[int] = field(default_factory=list)
    correct: list[int] = field(default_factory=list)
    wrong: list[int] = field(default_factory=list)
    dropped: list[int] = field(default_factory=list)


def _compare(traj: Trajectory, track: Track, eps: float) -> tuple[int, int]:
    agree = disagree = 0
    for p in track.points:
        pos = traj.positions.get(p.frame)
        if pos is None:
            continue
        if np.hypot(p.x - pos[0], p.y - pos[1]) <= eps:
            agree += 1
        else:
            disagree += 1
    return agree, disagree


def merge(traj: Trajectory, track: Track, eps: float = 5.0) -> Trajectory:
    """Add the track's points on frames the trajectory does not cover yet."""
    for p in track.points:
        if p.frame in traj.positions:
            continue
        traj.positions[p.frame] = (p.x, p.y)
        traj.provenance[p.frame] = PROVENANCE.get(p.source, p.source)
        traj.owners[p.frame] = track.id
    if track.id not in traj.track_ids:
        traj.track_ids.append(track.id)
    return traj


def _seed_key(t: Track):
    return (-t.responses, t.first_frame, t.id)


def associate(tracks: Sequence[Track], eps: float = 5.0, t_valid: int = 5,
              groups: Optional[TrackerGroups] = None) -> Trajectory:
    """Greedy consistency-driven merging seeded by the most-responsive track.

    Step one settles every track lying inside the trajectory's frame span
    that shares frames with it: all shared positions within ``eps`` merges
    it, any disagreement rejects it.  Step two looks at the nearest
    unresolved track past either end; one agreeing shared frame is enough
    to merge, and a neighbour without one stays unresolved.  When neither
    end makes progress the strongest remaining track (more than
    ``t_valid`` responses) starts a new segment; if none qualifies the rest
    are dropped.
    """
    groups = groups if groups is not None else TrackerGroups()
    traj = Trajectory()
    by_id = {t.id: t for t in tracks}
    original = sorted(by_id)
    groups.original = list(original)
    if not tracks:
        return traj
    pending = set(original)

    def accept(t: Track):
        pending.discard(t.id)
        groups.correct.append(t.id)
        merge(traj, t, eps)

    def reject(t: Track):
        pending.discard(t.id)
        groups.wrong.append(t.id)

    accept(min(tracks, key=_seed_key))
    while pending:
        progressed = True
        while progressed and pending:
            progressed = False
            lo, hi = traj.span
            for tid in sorted(pending, key=lambda i: (by_id[i].first_frame, i)):
                t = by_id[tid]
                if not (lo <= t.first_frame and t.last_frame <= hi):
                    continue
                agree, disagree = _compare(traj, t, eps)
                if agree + disagree == 0:
                    continue
                (reject if disagree else accept)(t)
                progressed = True
            if progressed:
                continue
            for side in ("future", "past"):
                nb = _closest(traj, [by_id[i] for i in pending], side)
                if nb is None:
                    continue
                agree, _ = _compare(traj, nb, eps)
                if not agree:
                    continue
                accept(nb)
                progressed = True
                break
        if not pending:
            break
        strong = [by_id[i] for i in pending if by_id[i].responses > t_valid]
        if not strong:
            groups.dropped.extend(sorted(pending))
            break
        accept(min(strong, key=_seed_key))
    return traj


def _closest(traj: Trajectory, candidates: Sequence[Track], side: str) -> Optional[Track]:
    lo, hi = traj.span
    if side == "future":
        cands = [t for t in candidates if t.last_frame > hi]
        dist = lambda t: max(0, t.first_frame - hi)  # noqa: E731
    else:
        cands = [t for t in candidates if t.first_frame < lo]
        dist = lambda t: max(0, lo - t.last_frame)  # noqa: E731
    return min(cands, key=lambda t: (dist(t), t.first_frame, t.id), default=None)


def trajectory_json(traj: Trajectory, tracks: Sequence[Track], groups: TrackerGroups) -> str:
    by_id = {t.id: t for t in tracks}
    meta = []
    for tid in sorted(by_id):
        t = by_id[tid]
        group = ("correct" if tid in groups.correct else "wrong" if tid in groups.wrong
                 else "dropped" if tid in groups.dropped else "original")
        meta.append({
            "id": tid, "kind": t.kind.value, "first_frame": t.first_frame, "last_frame": t.last_frame,
            "points": len(t.points), "responses": t.responses, "group": group,
            "contributed": sum(1 for owner in traj.owners.values() if owner == tid),
        })
    doc = {
        "frames": [
            {"frame": f, "cx": round(traj.positions[f][0], 3), "cy": round(traj.positions[f][1], 3),
             "provenance": traj.provenance[f], "track": traj.owners.get(f)}
            for f in traj.frames()
        ],
        "tracks": meta,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
