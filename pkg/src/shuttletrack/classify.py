"""Ball / not-ball decisions on three-frame context patches.

A proposal is cut out of frames t-1, t and t+1 with a window five times
its larger bbox side, resampled to 50x50, and handed to a backend.  The
in-core heuristic backend stands in for a trained network; an external
process can be plugged in over line-delimited JSON.
"""

from __future__ import annotations

import base64
import json
import logging
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .media import Frame, HslPlanes, rgb_to_hsl
from .proposals import RegionProposal

log = logging.getLogger(__name__)

PATCH = 50
CONTEXT = 5
FEATURE_LEN = 64

LABEL_NAMES = (
    "Ball on simple background",
    "Ball on sideline",
    "Ball on complex background",
    "Sideline",
    "Hand",
    "Head",
    "Racket",
    "Trunk",
    "field without sideline",
    "shoe",
    "Score column",
    "Letter",
    "Light",
    "Arm",
    "Leg",
    "pants",
    "Shoulder",
    "Other objects",
)
BALL_IDS = frozenset({0, 1, 2})


class BoundaryError(Exception):
    """A patch stack needs a neighbour frame that does not exist."""


@dataclass(frozen=True)
class ClassLabel:
    id: int

    def __post_init__(self):
        if not 0 <= self.id < len(LABEL_NAMES):
            raise ValueError(f"label id {self.id} outside 0..{len(LABEL_NAMES) - 1}")

    @property
    def name(self) -> str:
        return LABEL_NAMES[self.id]


def is_ball(label: ClassLabel | int) -> bool:
    lid = label.id if isinstance(label, ClassLabel) else int(label)
    return lid in BALL_IDS


@dataclass(frozen=True)
class PatchStack:
    patches: np.ndarray = field(repr=False)  # (3, 50, 50, 3) uint8

    def __post_init__(self):
        if self.patches.shape != (3, PATCH, PATCH, 3):
            raise ValueError(f"patch stack must be 3x{PATCH}x{PATCH}x3, got {self.patches.shape}")


@dataclass
class Detection:
    frame: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]
    label: ClassLabel
    confidence: float
    feature: np.ndarray = field(repr=False)
    source: str = "detect"

    @property
    def ball(self) -> bool:
        return is_ball(self.label)


def _window_coords(center: float, side: float) -> np.ndarray:
    # sample at output pixel centres; integer positions when side == PATCH
    return center - side / 2.0 + (np.arange(PATCH) + 0.5) * side / PATCH


def _resample(pixels: np.ndarray, cx: float, cy: float, side: float) -> np.ndarray:
    xs = _window_coords(cx, side)
    ys = _window_coords(cy, side)
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    out = np.empty((PATCH, PATCH, 3))
    for ch in range(3):
        out[..., ch] = ndimage.map_coordinates(pixels[..., ch].astype(np.float64), [gy, gx], order=1, mode="nearest")
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def extract_patch_stack(frames: Sequence[Frame], proposal: RegionProposal) -> PatchStack:
    """Context patches for ``proposal`` from three consecutive frames."""
    if len(frames) != 3 or any(f is None for f in frames):
        raise BoundaryError(f"frame {proposal.frame}: need both neighbours for a patch stack")
    side = float(CONTEXT * max(proposal.bbox[2], proposal.bbox[3], 1))
    cx, cy = proposal.centroid
    return PatchStack(np.stack([_resample(f.pixels, cx, cy, side) for f in frames]))


def stack_for(frames: Sequence[Frame], proposal: RegionProposal) -> PatchStack:
    """Like :func:`extract_patch_stack` but repeats the centre frame at sequence ends."""
    t = proposal.frame
    center = frames[t]
    prev = frames[t - 1] if t > 0 else center
    nxt = frames[t + 1] if t + 1 < len(frames) else center
    return extract_patch_stack([prev, center, nxt], proposal)


@dataclass
class HeuristicParams:
    bright_pct: float = 85.0
    bright_min: float = 0.8
    var_min: float = 12.0 / 255.0
    max_bright_fraction: float = 0.3
    complex_std: float = 0.12


_C0, _C1 = 2 * PATCH // 5, 3 * PATCH // 5  # central fifth holds the original bbox
_yy, _xx = np.mgrid[:PATCH, :PATCH]
_RADIUS = np.hypot(_yy - (PATCH - 1) / 2, _xx - (PATCH - 1) / 2)
_RING = np.minimum((_RADIUS / (PATCH / 2) * 16).astype(int), 15)
_CENTER = np.zeros((PATCH, PATCH), dtype=bool)
_CENTER[_C0:_C1, _C0:_C1] = True


def _luminance(patch: np.ndarray) -> np.ndarray:
    p = patch.astype(np.float64) / 255.0
    return (p.max(axis=-1) + p.min(axis=-1)) / 2.0


def patch_feature(patch: np.ndarray, hsl: Optional[HslPlanes] = None) -> np.ndarray:
    """64-d unit vector: 16-bin H, S, L histograms of the centre + 16 radial means."""
    if hsl is None:
        hsl = rgb_to_hsl(patch)
    parts = []
    for plane, top in ((hsl.h, 360.0), (hsl.s, 1.0), (hsl.l, 1.0)):
        vals = plane[_CENTER]
        hist, _ = np.histogram(vals, bins=16, range=(0.0, top))
        parts.append(hist / max(vals.size, 1))
    sums = np.bincount(_RING.ravel(), weights=hsl.l.ravel(), minlength=16)
    counts = np.bincount(_RING.ravel(), minlength=16)
    parts.append(sums / np.maximum(counts, 1))
    feat = np.concatenate(parts)
    norm = np.linalg.norm(feat)
    return feat / norm if norm > 0 else np.full(FEATURE_LEN, 1.0 / np.sqrt(FEATURE_LEN))


def _line_like(bright: np.ndarray) -> bool:
    """Bright structure spanning most of the context window."""
    if not bright.any():
        return False
    rows = np.nonzero(bright.any(axis=1))[0]
    cols = np.nonzero(bright.any(axis=0))[0]
    span = max(rows[-1] - rows[0] + 1, cols[-1] - cols[0] + 1)
    return span >= 0.8 * PATCH


def heuristic_backend(stack: PatchStack, params: Optional[HeuristicParams] = None):
    """Rule-based stand-in classifier returning (label, confidence, feature)."""
    params = params or HeuristicParams()
    prev, cur, nxt = stack.patches
    hsl = rgb_to_hsl(cur)
    feature = patch_feature(cur, hsl)
    lum = hsl.l
    centre = lum[_CENTER]

    brightness = float(np.percentile(centre, params.bright_pct))
    variation = min(
        float(np.abs(lum - _luminance(prev))[_CENTER].mean()),
        float(np.abs(lum - _luminance(nxt))[_CENTER].mean()),
    )
    bright_px = lum >= params.bright_min
    line = _line_like(bright_px)

    b_margin = (brightness - params.bright_min) / (1.0 - params.bright_min)
    v_margin = (variation - params.var_min) / params.var_min

    if brightness < params.bright_min:
        sat = hsl.s[_CENTER].mean()
        hue = float(np.median(hsl.h[_CENTER]))
        if sat > 0.2 and 5.0 <= hue <= 50.0 and 0.3 < centre.mean() < 0.8:
            lid = 4
        else:
            lid = 17
        return ClassLabel(lid), float(np.clip(0.5 - 0.5 * b_margin, 0.5, 1.0)), feature

    if variation < params.var_min:
        lid = 3 if line else 12
        return ClassLabel(lid), float(np.clip(0.5 - 0.5 * v_margin, 0.5, 1.0)), feature

    fraction = float(bright_px.mean())
    if fraction > params.max_bright_fraction and not line:
        return ClassLabel(7), float(np.clip(0.5 + fraction - params.max_bright_fraction, 0.5, 1.0)), feature

    if line:
        lid = 1
    elif float(lum[~_CENTER].std()) > params.complex_std:
        lid = 2
    else:
        lid = 0
    conf = 0.55 + 0.45 * min(1.0, 0.5 * (min(b_margin, 1.0) + min(v_margin, 1.0)))
    return ClassLabel(lid), float(conf), feature


class HeuristicClassifier:
    name = "heuristic"

    def __init__(self, params: Optional[HeuristicParams] = None):
        self.params = params or HeuristicParams()

    def classify(self, stack: PatchStack):
        return heuristic_backend(stack, self.params)

    def classify_many(self, stacks: Sequence[PatchStack]):
        return [self.classify(s) for s in stacks]

    def close(self):
        pass


def encode_request(req_id: int, stack: PatchStack) -> str:
    patches = [base64.b64encode(np.ascontiguousarray(p).tobytes()).decode("ascii") for p in stack.patches]
    return json.dumps({"id": req_id, "patches": patches})


def decode_request(line: str) -> tuple[int, PatchStack]:
    msg = json.loads(line)
    arrs = [np.frombuffer(base64.b64decode(p), dtype=np.uint8).reshape(PATCH, PATCH, 3) for p in msg["patches"]]
    return int(msg["id"]), PatchStack(np.stack(arrs))


def encode_response(req_id: int, label: ClassLabel | int, confidence: float, feature) -> str:
    lid = label.id if isinstance(label, ClassLabel) else int(label)
    return json.dumps({"id": req_id, "label": lid, "confidence": float(confidence),
                       "feature": [float(v) for v in feature]})


def decode_response(line: str):
    msg = json.loads(line)
    feat = np.asarray(msg["feature"], dtype=np.float64)
    if feat.shape != (FEATURE_LEN,):
        raise ValueError(f"feature length {feat.size}, expected {FEATURE_LEN}")
    norm = np.linalg.norm(feat)
    if norm == 0:
        raise ValueError("zero feature vector")
    conf = float(msg["confidence"])
    if not 0.0 <= conf <= 1.0:
        raise ValueError(f"confidence {conf} outside [0, 1]")
    return int(msg["id"]), ClassLabel(int(msg["label"])), conf, feat / norm


class ExternalClassifier:
    """Talks to a classifier process over stdin/stdout, one JSON object per line.

    Up to ``window`` requests are in flight; responses may come back in any
    order and are matched by id.  Any failure switches this instance to the
    heuristic backend for good, with a warning.
    """

    name = "external"

    def __init__(self, command: str, window: int = 8, fallback: Optional[HeuristicClassifier] = None):
        self.command = command
        self.window = window
        self.fallback = fallback or HeuristicClassifier()
        self._proc: Optional[subprocess.Popen] = None
        self._next_id = 0
        self.failed = False
        try:
            self._proc = subprocess.Popen(
                shlex.split(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
            )
        except OSError as exc:
            self._fail(f"cannot start {command!r}: {exc}")

    def _fail(self, why: str):
        log.warning("external classifier unavailable (%s); falling back to heuristic backend", why)
        self.failed = True
        self.close()

    def classify(self, stack: PatchStack):
        return self.classify_many([stack])[0]

    def classify_many(self, stacks: Sequence[PatchStack]):
        if self.failed:
            return self.fallback.classify_many(stacks)
        results: dict[int, tuple] = {}
        ids = []
        pending: set[int] = set()
        try:
            it = iter(stacks)
            exhausted = False
            while not exhausted or pending:
                while not exhausted and len(pending) < self.window:
                    try:
                        stack = next(it)
                    except StopIteration:
                        exhausted = True
                        break
                    rid = self._next_id
                    self._next_id += 1
                    ids.append(rid)
                    pending.add(rid)
                    self._proc.stdin.write(encode_request(rid, stack) + "\n")
                    self._proc.stdin.flush()
                if not pending:
                    break
                line = self._proc.stdout.readline()
                if not line:
                    raise EOFError("classifier process closed its output")
                rid, label, conf, feat = decode_response(line)
                if rid not in pending:
                    raise ValueError(f"unexpected response id {rid}")
                pending.discard(rid)
                results[rid] = (label, conf, feat)
        except (OSError, EOFError, ValueError, KeyError, json.JSONDecodeError) as exc:
            self._fail(str(exc))
            return self.fallback.classify_many(stacks)
        return [results[rid] for rid in ids]

    def close(self):
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


def make_classifier(spec: str = "heuristic", params: Optional[HeuristicParams] = None):
    """``heuristic`` or ``external:<command line>``."""
    if spec == "heuristic":
        return HeuristicClassifier(params)
    if spec.startswith("external:"):
        return ExternalClassifier(spec[len("external:"):], fallback=HeuristicClassifier(params))
    raise ValueError(f"unknown classifier backend {spec!r}")


def classify(stack: PatchStack, backend=None):
    backend = backend or HeuristicClassifier()
    return backend.classify(stack)


def to_detection(proposal: RegionProposal, result, source: str = "detect") -> Detection:
    label, conf, feat = result
    return Detection(proposal.frame, proposal.centroid, proposal.bbox, label, conf, np.asarray(feat), source)
