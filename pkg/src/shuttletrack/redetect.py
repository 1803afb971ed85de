"""Second-round detection inside predicted regions of interest.

Intra-track re-detection fills holes between known points; inter-track
re-detection grows a track end toward its nearest neighbour, one frame at
a time, re-extrapolating after every accepted point.  Neither step uses
the motion mask or the player filter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .classify import Detection, is_ball, stack_for, to_detection
from .media import FrameStore
from .proposals import ProposalParams, disc_mask, fine_proposals
from .track import Track, TrackPoint


@dataclass
class RedetectParams:
    r_intra: float = 25.0
    r0: float = 20.0
    r_growth: float = 8.0
    g_max: int = 12
    k_fit: int = 5

    def __post_init__(self):
        if self.r_intra <= 0 or self.r0 <= 0 or self.r_growth < 0:
            raise ValueError("ROI radii must be positive and growth non-negative")
        if self.g_max < 0:
            raise ValueError("g_max must be >= 0")


@dataclass(frozen=True)
class RoiPrediction:
    frame: int
    center: tuple[float, float]
    radius: float


def _linear_fit(points: Sequence[TrackPoint]) -> tuple[float, np.ndarray, np.ndarray]:
    f = np.array([p.frame for p in points], float)
    xy = np.array([[p.x, p.y] for p in points], float)
    f_mean = f.mean()
    ft = f - f_mean
    denom = float(ft @ ft)
    vel = ft @ (xy - xy.mean(axis=0)) / denom if denom > 0 else np.zeros(2)
    return f_mean, xy.mean(axis=0), vel


def predict(track: Track, target_frame: int, params: Optional[RedetectParams] = None,
            shape: Optional[tuple[int, int]] = None) -> RoiPrediction:
    """Constant-velocity extrapolation from the nearer end of ``track``."""
    params = params or RedetectParams()
    if len(track.points) < 2:
        raise ValueError("prediction needs at least two track points")
    if target_frame >= track.last_frame:
        anchor = track.points[-params.k_fit:]
        beyond = target_frame - track.last_frame
    else:
        anchor = track.points[: params.k_fit]
        beyond = track.first_frame - target_frame
    f_mean, xy_mean, vel = _linear_fit(anchor)
    center = xy_mean + vel * (target_frame - f_mean)
    if shape is not None:
        center = np.clip(center, 0, [shape[1] - 1, shape[0] - 1])
    return RoiPrediction(target_frame, (float(center[0]), float(center[1])), params.r0 + params.r_growth * abs(beyond))


def detect_in_roi(store: FrameStore, frame: int, center, radius: float, classifier,
                  proposal_params: ProposalParams, source: str) -> Optional[Detection]:
    """Best ball detection whose centroid falls inside the disc, nearest the centre."""
    if not 0 <= frame < len(store):
        return None
    mask = disc_mask(store.shape, center, radius)
    props = fine_proposals(store[frame], mask, proposal_params, hsl=store.hsl(frame),
                           luminance=store.luminance(frame))
    cx, cy = center
    props = [p for p in props if (p.centroid[0] - cx) ** 2 + (p.centroid[1] - cy) ** 2 <= radius ** 2]
    if not props:
        return None
    results = classifier.classify_many([stack_for(store.frames, p) for p in props])
    best, best_key = None, None
    for p, res in zip(props, results):
        if not is_ball(res[0]):
            continue
        dist = np.hypot(p.centroid[0] - cx, p.centroid[1] - cy)
        key = (dist, -res[1])
        if best_key is None or key < best_key:
            best, best_key = to_detection(p, res, source), key
    return best


def _as_point(det: Detection) -> TrackPoint:
    return TrackPoint(det.frame, float(det.centroid[0]), float(det.centroid[1]), det.source)


def intra_redetect(track: Track, store: FrameStore, classifier, proposal_params: ProposalParams,
                   params: Optional[RedetectParams] = None) -> Track:
    """Fill missing frames between consecutive track points."""
    params = params or RedetectParams()
    out = track.copy()
    known = list(track.points)
    for a, b in zip(known, known[1:]):
        for f in range(a.frame + 1, b.frame):
            w = (f - a.frame) / (b.frame - a.frame)
            center = (a.x + w * (b.x - a.x), a.y + w * (b.y - a.y))
            det = detect_in_roi(store, f, center, params.r_intra, classifier, proposal_params, "intra")
            if det is not None:
                out.insert(_as_point(det))
    return out


def inter_redetect(track: Track, neighbor: Optional[Track], store: FrameStore, classifier,
                   proposal_params: ProposalParams, params: Optional[RedetectParams] = None,
                   direction: str = "future") -> Track:
    """Grow ``track`` toward ``neighbor`` (or the sequence edge when there is none).

    The walk covers every frame up to and including the neighbour's nearest
    frame, so a successful growth overlaps the neighbour by one frame.  Gaps
    longer than ``g_max`` are abandoned untouched.
    """
    params = params or RedetectParams()
    if direction not in ("future", "past"):
        raise ValueError(f"direction must be 'future' or 'past', got {direction!r}")
    n = len(store)
    if direction == "future":
        target = neighbor.first_frame if neighbor is not None else n - 1
        gap = target - track.last_frame
        frames = range(track.last_frame + 1, target + 1)
    else:
        target = neighbor.last_frame if neighbor is not None else 0
        gap = track.first_frame - target
        frames = range(track.first_frame - 1, target - 1, -1)
    if gap <= 0 or gap > params.g_max:
        return track
    out = track.copy()
    for f in frames:
        roi = predict(out, f, params, store.shape)
        det = detect_in_roi(store, f, roi.center, roi.radius, classifier, proposal_params, "inter")
        if det is not None:
            out.insert(_as_point(det))
    return out


def nearest_neighbors(track: Track, others: Sequence[Track]) -> tuple[Optional[Track], Optional[Track]]:
    """Chronologically closest track before and after ``track``."""
    before = [o for o in others if o.id != track.id and o.last_frame < track.first_frame]
    after = [o for o in others if o.id != track.id and o.first_frame > track.last_frame]
    past = max(before, key=lambda o: (o.last_frame, -o.id), default=None)
    future = min(after, key=lambda o: (o.first_frame, o.id), default=None)
    return past, future


def redetect_all(tracks: Sequence[Track], store: FrameStore, classifier, proposal_params: ProposalParams,
                 params: Optional[RedetectParams] = None) -> list[Track]:
    """Intra pass on every track, then inter growth in both directions.

    Neighbours are chosen from the tracks as they stood before growth so the
    result does not depend on processing order.
    """
    params = params or RedetectParams()
    filled = [intra_redetect(t, store, classifier, proposal_params, params) for t in tracks]
    out = []
    for t in filled:
        past, future = nearest_neighbors(t, filled)
        grown = inter_redetect(t, future, store, classifier, proposal_params, params, "future")
        grown = inter_redetect(grown, past, store, classifier, proposal_params, params, "past")
        out.append(grown)
    return out
