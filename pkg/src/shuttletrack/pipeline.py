"""End-to-end orchestration: detect, track, re-detect, associate."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .associate import Trajectory, TrackerGroups, associate, trajectory_json
from .classify import Detection, make_classifier, stack_for, to_detection
from .config import PipelineConfig
from .media import Frame, FrameStore, MediaError, write_pgm, write_ppm
from .motion import motion_mask
from .proposals import PROPOSAL_CSV_HEADER, RegionProposal, coarse_proposals, proposals_csv_rows
from .redetect import redetect_all
from .track import TRACKLET_CSV_HEADER, Track, Tracker, tracklet_csv_rows

log = logging.getLogger(__name__)

STAGES = ("masks", "proposals", "detections", "tracklets")


class PipelineError(Exception):
    """A stage failed; ``stage`` names which one."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class FrameDetections:
    frame: int
    proposals: list[RegionProposal]
    detections: list[Detection]  # every classified proposal, ball or not
    mask: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class PipelineResult:
    trajectory: Trajectory
    groups: TrackerGroups
    round1_tracks: list[Track]
    tracks: list[Track]
    per_frame: dict[int, FrameDetections]

    def ball_detections(self) -> dict[int, list[Detection]]:
        return {t: [d for d in fd.detections if d.ball] for t, fd in self.per_frame.items()}


def _detect_frame(frames: Sequence[Frame], t: int, cfg: PipelineConfig, classifier, keep_mask: bool):
    h, w = frames[0].pixels.shape[:2]
    mask = motion_mask(frames[t - 1], frames[t], frames[t + 1], cfg.a)
    props = coarse_proposals(mask, cfg.proposal_params(w, h), frame=t)
    results = classifier.classify_many([stack_for(frames, p) for p in props]) if props else []
    dets = [to_detection(p, r) for p, r in zip(props, results)]
    return FrameDetections(t, props, dets, mask.bits if keep_mask else None)


def detect_round_one(frames: Sequence[Frame], cfg: PipelineConfig, classifier=None, threads: int = 1,
                     keep_masks: bool = False) -> dict[int, FrameDetections]:
    """Motion mask, coarse proposals and classification for frames 1..N-2."""
    if len(frames) < 3:
        raise PipelineError("detect", f"sequence has {len(frames)} frames; three-frame differencing needs >= 3")
    classifier = classifier or make_classifier("heuristic", cfg.heuristic_params())
    idx = range(1, len(frames) - 1)
    if threads > 1 and getattr(classifier, "name", "") == "heuristic":
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(lambda t: _detect_frame(frames, t, cfg, classifier, keep_masks), idx))
    else:
        out = [_detect_frame(frames, t, cfg, classifier, keep_masks) for t in idx]
    return {fd.frame: fd for fd in out}


def run_pipeline(frames: Sequence[Frame], cfg: Optional[PipelineConfig] = None, classifier=None,
                 threads: int = 1, dump_dir: Optional[Path] = None,
                 dump_stages: Iterable[str] = ()) -> PipelineResult:
    cfg = cfg or PipelineConfig()
    dump_stages = set(dump_stages)
    unknown = dump_stages - set(STAGES)
    if unknown:
        raise PipelineError("config", f"unknown dump stage(s) {sorted(unknown)}")
    if len(frames) < 3:
        raise PipelineError("detect", f"sequence has {len(frames)} frames; three-frame differencing needs >= 3")
    own_classifier = classifier is None
    classifier = classifier or make_classifier(cfg.classifier, cfg.heuristic_params())
    h, w = frames[0].pixels.shape[:2]
    try:
        per_frame = detect_round_one(frames, cfg, classifier, threads, keep_masks="masks" in dump_stages)

        tracker = Tracker(cfg.tracker_params(w))
        for t in range(len(frames)):
            fd = per_frame.get(t)
            tracker.step(t, [d for d in fd.detections if d.ball] if fd else [])
        round1 = tracker.finish()

        store = FrameStore(list(frames), cfg.blur_kernel, cfg.blur_repeats)
        pparams = cfg.proposal_params(w, h)
        tracks = redetect_all(round1, store, classifier, pparams, cfg.redetect_params())

        groups = TrackerGroups()
        traj = associate(tracks, cfg.eps, cfg.t_valid, groups)
    finally:
        if own_classifier:
            classifier.close()

    result = PipelineResult(traj, groups, round1, tracks, per_frame)
    if dump_dir is not None and dump_stages:
        dump_intermediates(result, Path(dump_dir), dump_stages, tracker)
    return result


def dump_intermediates(result: PipelineResult, out: Path, stages: set[str], tracker: Optional[Tracker] = None):
    out.mkdir(parents=True, exist_ok=True)
    if "masks" in stages:
        dump_masks(result.per_frame, out)
    if "proposals" in stages:
        rows = [r for _, fd in sorted(result.per_frame.items()) for r in proposals_csv_rows(fd.proposals)]
        write_csv(out / "proposals.csv", PROPOSAL_CSV_HEADER, rows)
    if "detections" in stages:
        write_csv(out / "detections.csv", DETECTION_CSV_HEADER,
                   [r for _, fd in sorted(result.per_frame.items()) for r in detection_rows(fd.detections)])
    if "tracklets" in stages:
        tracks = tracker.all_tracks() if tracker is not None else result.round1_tracks
        write_csv(out / "tracklets.csv", TRACKLET_CSV_HEADER, tracklet_csv_rows(tracks))
        write_csv(out / "tracklets_redetected.csv", TRACKLET_CSV_HEADER, tracklet_csv_rows(result.tracks))


def dump_masks(per_frame: dict[int, FrameDetections], out: Path) -> None:
    mdir = Path(out) / "masks"
    mdir.mkdir(parents=True, exist_ok=True)
    for t, fd in sorted(per_frame.items()):
        if fd.mask is not None:
            write_pgm(mdir / f"mask_{t:05d}.pgm", fd.mask)


DETECTION_CSV_HEADER = ("frame", "cx", "cy", "x", "y", "w", "h", "label", "name", "confidence", "ball")


def detection_rows(dets: Iterable[Detection]):
    for d in dets:
        x, y, w, h = d.bbox
        yield (d.frame, f"{d.centroid[0]:.3f}", f"{d.centroid[1]:.3f}", x, y, w, h, d.label.id, d.label.name,
               f"{d.confidence:.4f}", int(d.ball))


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def write_outputs(result: PipelineResult, out: Path) -> tuple[Path, Path]:
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / "trajectory.csv", out / "trajectory.json"
    csv_path.write_text(result.trajectory.to_csv())
    json_path.write_text(trajectory_json(result.trajectory, result.tracks, result.groups))
    return csv_path, json_path


MARKER = (255, 0, 0)
TRAIL = (255, 220, 0)


def _draw_line(img: np.ndarray, a, b, color) -> None:
    n = int(max(abs(b[0] - a[0]), abs(b[1] - a[1]))) + 1
    xs = np.rint(np.linspace(a[0], b[0], n + 1)).astype(int)
    ys = np.rint(np.linspace(a[1], b[1], n + 1)).astype(int)
    ok = (xs >= 0) & (xs < img.shape[1]) & (ys >= 0) & (ys < img.shape[0])
    img[ys[ok], xs[ok]] = color


def overlay_frame(pixels: np.ndarray, trajectory: Trajectory, frame: int, trail: int = 10) -> np.ndarray:
    """Trailing polyline over the last ``trail`` frames and a cross at the current position."""
    img = np.array(pixels, copy=True)
    pts = [(f, trajectory.positions[f]) for f in range(frame - trail, frame + 1) if f in trajectory.positions]
    for (_, a), (_, b) in zip(pts, pts[1:]):
        _draw_line(img, a, b, TRAIL)
    pos = trajectory.positions.get(frame)
    if pos is not None:
        cx, cy = int(round(pos[0])), int(round(pos[1]))
        for dx, dy in [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1), (-2, 0), (2, 0), (0, -2), (0, 2)]:
            x, y = cx + dx, cy + dy
            if 0 <= x < img.shape[1] and 0 <= y < img.shape[0]:
                img[y, x] = MARKER
    return img


def overlay(frames: Sequence[Frame], trajectory: Trajectory, out: Path, trail: int = 10) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for f in frames:
        p = out / f"overlay_{f.index:05d}.ppm"
        write_ppm(p, overlay_frame(f.pixels, trajectory, f.index, trail))
        paths.append(p)
    (out / "manifest.txt").write_text("".join(p.name + "\n" for p in paths))
    return paths


__all__ = [
    "FrameDetections", "MediaError", "PipelineError", "PipelineResult", "STAGES", "detect_round_one",
    "dump_intermediates", "dump_masks", "overlay", "overlay_frame", "run_pipeline", "write_outputs",
]
