"""Rule-based tracklets.

Two track kinds share one greedy assignment loop.  Normal tracks score a
detection by how well the step from the track end lines up with the
track's direction, but only inside a Manhattan gate.  Fast tracks score by
appearance similarity and only outside that gate.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .classify import Detection


class TrackKind(str, Enum):
    NORMAL = "normal"
    FAST = "fast"


class TrackState(str, Enum):
    TENTATIVE = "tentative"
    VALID = "valid"
    LOST = "lost"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class TrackPoint:
    frame: int
    x: float
    y: float
    source: str = "detect"  # detect | intra | inter

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class TrackerParams:
    d: float = 20.0
    t_valid: int = 5
    t_valid_fast: int = 3
    t_lost: int = 4
    cos_min: float = 0.8
    sim_min: float = 0.9
    k_fit: int = 5
    fast_enabled: bool = True

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("d must be positive")
        if self.t_valid < 3:
            raise ValueError("t_valid must be >= 3")
        if self.t_valid_fast < 1:
            raise ValueError("t_valid_fast must be >= 1")
        if self.t_lost < 1:
            raise ValueError("t_lost must be >= 1")
        if not 0 < self.cos_min <= 1:
            raise ValueError("cos_min must lie in (0, 1]")
        if not 0 < self.sim_min <= 1:
            raise ValueError("sim_min must lie in (0, 1]")
        if self.k_fit < 2:
            raise ValueError("k_fit must be >= 2")


def fit_direction(points: Sequence, k: Optional[int] = None) -> np.ndarray:
    """Unit direction of the least-squares velocity over the last ``k`` points.

    ``points`` holds (frame, (x, y)) pairs or :class:`TrackPoint`.  A
    stationary fit gives the zero vector.
    """
    pts = list(points)
    if k is not None:
        pts = pts[-k:]
    if len(pts) < 2:
        raise ValueError("need at least two points to fit a direction")
    f, xy = _unpack(pts)
    ft = f - f.mean()
    denom = float(ft @ ft)
    if denom == 0:
        raise ValueError("points must span more than one frame")
    vel = ft @ (xy - xy.mean(axis=0)) / denom
    norm = np.linalg.norm(vel)
    return vel / norm if norm > 1e-12 else np.zeros(2)


def _unpack(pts) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pts[0], TrackPoint):
        return np.array([p.frame for p in pts], float), np.array([[p.x, p.y] for p in pts], float)
    return np.array([p[0] for p in pts], float), np.array([p[1] for p in pts], float)


@dataclass
class Track:
    id: int
    kind: TrackKind
    points: list[TrackPoint]
    responses: int = 2
    misses: int = 0
    state: TrackState = TrackState.TENTATIVE
    last_feature: Optional[np.ndarray] = field(default=None, repr=False)
    direction: np.ndarray = field(default_factory=lambda: np.zeros(2), repr=False)
    validated: bool = False

    @property
    def first_frame(self) -> int:
        return self.points[0].frame

    @property
    def last_frame(self) -> int:
        return self.points[-1].frame

    @property
    def end(self) -> np.ndarray:
        return self.points[-1].xy

    def frames(self) -> set[int]:
        return {p.frame for p in self.points}

    def position(self, frame: int) -> Optional[np.ndarray]:
        for p in self.points:
            if p.frame == frame:
                return p.xy
        return None

    def refit(self, k_fit: int) -> None:
        self.direction = fit_direction(self.points, k_fit)

    def insert(self, point: TrackPoint) -> None:
        """Add a point at a frame the track does not cover yet."""
        frames = [p.frame for p in self.points]
        if point.frame in frames:
            raise ValueError(f"track {self.id} already has frame {point.frame}")
        idx = int(np.searchsorted(frames, point.frame))
        self.points.insert(idx, point)

    def copy(self) -> "Track":
        return replace(self, points=list(self.points), direction=self.direction.copy())


def _point(det: Detection) -> TrackPoint:
    return TrackPoint(det.frame, float(det.centroid[0]), float(det.centroid[1]), det.source)


def manhattan(a, b) -> float:
    return float(abs(a[0] - b[0]) + abs(a[1] - b[1]))


def cost_normal(track: Track, det: Detection, d: float) -> float:
    step = np.asarray(det.centroid, float) - track.end
    if manhattan(det.centroid, track.end) >= d:
        return 0.0
    n_step = np.linalg.norm(step)
    if n_step == 0:
        return 1.0
    n_dir = np.linalg.norm(track.direction)
    if n_dir == 0:
        return 0.0
    return float(track.direction @ step / (n_dir * n_step))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def cost_fast(track: Track, det: Detection, d: float) -> float:
    if manhattan(det.centroid, track.end) <= d:
        return 0.0
    if track.last_feature is None or det.feature is None:
        return 0.0
    return cosine(track.last_feature, det.feature)


def score(track: Track, det: Detection, params: TrackerParams) -> float:
    if track.kind is TrackKind.FAST:
        return cost_fast(track, det, params.d)
    return cost_normal(track, det, params.d)


def threshold(track: Track, params: TrackerParams) -> float:
    return params.sim_min if track.kind is TrackKind.FAST else params.cos_min


def greedy_assign(scores: np.ndarray, track_ids: Sequence[int], minimums: Sequence[float]) -> list[tuple[int, int]]:
    """One-to-one matching by descending score.

    Ties go to the lower track id, then the lower detection index.  Rows
    are tracks, columns detections; returns (row, col) pairs.
    """
    cands = [
        (-scores[i, j], track_ids[i], j, i)
        for i in range(scores.shape[0])
        for j in range(scores.shape[1])
        if scores[i, j] >= minimums[i] and scores[i, j] > 0
    ]
    cands.sort()
    used_rows, used_cols, out = set(), set(), []
    for _, _, j, i in cands:
        if i in used_rows or j in used_cols:
            continue
        used_rows.add(i)
        used_cols.add(j)
        out.append((i, j))
    return out


def _new_track(tid: int, kind: TrackKind, a: Detection, b: Detection, k_fit: int) -> Track:
    first, second = sorted((a, b), key=lambda d: d.frame)
    t = Track(tid, kind, [_point(first), _point(second)], last_feature=np.asarray(second.feature))
    t.refit(k_fit)
    return t


def spawn(frames: Sequence[Sequence[Detection]], params: TrackerParams, first_id: int = 0) -> list[Track]:
    """Tentative tracks from detections in up to three consecutive frames.

    Every pair one or two frames apart gives a normal track.  Pairs in
    adjacent frames that are far apart yet look alike also give a fast track.
    """
    flat = [det for dets in frames for det in dets]
    out: list[Track] = []
    tid = first_id
    for i, a in enumerate(flat):
        for b in flat[i + 1:]:
            gap = abs(b.frame - a.frame)
            if gap not in (1, 2):
                continue
            out.append(_new_track(tid, TrackKind.NORMAL, a, b, params.k_fit))
            tid += 1
            if params.fast_enabled and gap == 1 and _fast_pair(a, b, params):
                out.append(_new_track(tid, TrackKind.FAST, a, b, params.k_fit))
                tid += 1
    return out


def _fast_pair(a: Detection, b: Detection, params: TrackerParams) -> bool:
    return manhattan(a.centroid, b.centroid) > params.d and cosine(a.feature, b.feature) >= params.sim_min


class Tracker:
    """Frame-by-frame tracklet state machine.

    Call :meth:`step` once per frame in order, then :meth:`finish`.
    """

    def __init__(self, params: Optional[TrackerParams] = None):
        self.params = params or TrackerParams()
        self.active: list[Track] = []
        self.retired: list[Track] = []
        self._buffer: deque[tuple[int, list[Detection]]] = deque()
        self._next_id = 0

    def _validation_bar(self, track: Track) -> int:
        return self.params.t_valid_fast if track.kind is TrackKind.FAST else self.params.t_valid

    def step(self, frame: int, detections: Sequence[Detection]) -> list[tuple[int, int]]:
        """Match ``detections`` (all at ``frame``) and update lifecycles.

        Returns (track id, detection index) pairs.
        """
        p = self.params
        dets = list(detections)
        tracks = self.active
        if tracks and dets:
            scores = np.array([[score(t, d, p) for d in dets] for t in tracks])
            pairs = greedy_assign(scores, [t.id for t in tracks], [threshold(t, p) for t in tracks])
        else:
            pairs = []

        matched_tracks = {i for i, _ in pairs}
        matched_dets = {j for _, j in pairs}
        for i, j in pairs:
            t, det = tracks[i], dets[j]
            t.points.append(_point(det))
            t.responses += 1
            t.misses = 0
            if det.feature is not None:
                t.last_feature = np.asarray(det.feature)
            t.refit(p.k_fit)
            if t.responses > self._validation_bar(t):
                t.validated = True
            t.state = TrackState.VALID if t.validated else TrackState.TENTATIVE
        for i, t in enumerate(tracks):
            if i in matched_tracks:
                continue
            t.misses += 1
            if t.misses >= p.t_lost:
                t.state = TrackState.TERMINATED
            elif t.validated:
                t.state = TrackState.LOST

        unmatched = [d for j, d in enumerate(dets) if j not in matched_dets]
        while self._buffer and self._buffer[0][0] < frame - 2:
            self._buffer.popleft()
        if unmatched:
            for _, old in self._buffer:
                self._spawn_pairs(old, unmatched)
        self._buffer.append((frame, unmatched))

        still = []
        for t in self.active:
            (self.retired if t.state is TrackState.TERMINATED else still).append(t)
        self.active = still
        return [(tracks[i].id, j) for i, j in pairs]

    def _spawn_pairs(self, old: Iterable[Detection], new: Iterable[Detection]) -> None:
        for a in old:
            for b in new:
                for t in spawn([[a], [b]], self.params, self._next_id):
                    self._next_id = t.id + 1
                    self.active.append(t)

    def finish(self) -> list[Track]:
        """Every track that ever validated, ordered by id."""
        everything = self.retired + self.active
        return sorted((t for t in everything if t.validated), key=lambda t: t.id)

    def all_tracks(self) -> list[Track]:
        return sorted(self.retired + self.active, key=lambda t: t.id)


def run_tracker(detections: dict[int, list[Detection]], n_frames: int,
                params: Optional[TrackerParams] = None) -> list[Track]:
    tracker = Tracker(params)
    for t in range(n_frames):
        tracker.step(t, detections.get(t, []))
    return tracker.finish()


TRACKLET_CSV_HEADER = ("track_id", "kind", "frame", "cx", "cy", "state", "responses")


def tracklet_csv_rows(tracks: Iterable[Track]):
    for t in tracks:
        for p in t.points:
            yield (t.id, t.kind.value, p.frame, f"{p.x:.3f}", f"{p.y:.3f}", t.state.value, t.responses)
