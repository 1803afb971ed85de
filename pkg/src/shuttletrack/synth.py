"""Deterministic synthetic rallies with ground truth.

A fixed camera looks at a green court with white lines.  The ball flies
ballistic segments joined at hit events and is drawn as an anti-aliased
streak covering part of the inter-frame displacement.  Players are
textured blobs whose texture crawls every frame so they light up the
motion mask the way real bodies do.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .media import SequenceManifest, write_sequence

COURT = (46, 122, 70)
LINE = (255, 255, 255)
BALL = (255, 255, 255)
SKIN = (214, 160, 120)
FRAME_CLASSES = ("IF", "OF", "NOF")
OCCLUSION_KINDS = ("player-overlap", "out-of-view", "sideline-overlap")


class SynthError(ValueError):
    pass


@dataclass
class Hit:
    frame: int
    vx: float
    vy: float


@dataclass
class PlayerSpec:
    x: float  # bbox top-left
    y: float
    w: int = 24
    h: int = 64
    shirt: tuple[int, int, int] = (60, 70, 190)
    amp_x: float = 12.0
    period: float = 90.0


@dataclass
class Blinker:
    x: float
    y: float
    start: int
    count: int = 10
    period: int = 2
    radius: float = 2.0


@dataclass
class Occlusion:
    start: int
    end: int  # inclusive
    kind: str = "player-overlap"


@dataclass
class SynthConfig:
    seed: int = 0
    width: int = 640
    height: int = 360
    n_frames: int = 120
    start: tuple[float, float] = (60.0, 250.0)
    velocity: tuple[float, float] = (7.0, -6.0)
    gravity: Optional[float] = None  # px/frame^2, default 0.35 at 720 rows
    hits: list[Hit] = field(default_factory=list)
    ball_radius: float = 2.0
    blur_factor: float = 0.4
    court_lines: bool = True
    players: list[PlayerSpec] = field(default_factory=list)
    specks: list[tuple[float, float]] = field(default_factory=list)
    blinkers: list[Blinker] = field(default_factory=list)
    occlusions: list[Occlusion] = field(default_factory=list)
    noise: float = 2.0
    max_speed: float = 60.0

    def __post_init__(self):
        self.hits = [h if isinstance(h, Hit) else Hit(**h) for h in self.hits]
        self.players = [p if isinstance(p, PlayerSpec) else PlayerSpec(**p) for p in self.players]
        self.blinkers = [b if isinstance(b, Blinker) else Blinker(**b) for b in self.blinkers]
        self.occlusions = [o if isinstance(o, Occlusion) else Occlusion(**o) for o in self.occlusions]
        self.start = tuple(float(v) for v in self.start)
        self.velocity = tuple(float(v) for v in self.velocity)
        self.specks = [tuple(float(v) for v in s) for s in self.specks]
        for p in self.players:
            p.shirt = tuple(int(c) for c in p.shirt)

    @property
    def g(self) -> float:
        return 0.35 * self.height / 720.0 if self.gravity is None else self.gravity

    def validate(self) -> None:
        if self.width < 16 or self.height < 16:
            raise SynthError("resolution must be at least 16x16")
        if self.n_frames < 3:
            raise SynthError("need at least 3 frames")
        frames = [h.frame for h in self.hits]
        if frames != sorted(set(frames)):
            raise SynthError("hit frames must be strictly increasing")
        if any(not 0 < f < self.n_frames for f in frames):
            raise SynthError("hit frames must lie inside the sequence")
        for vx, vy in [self.velocity] + [(h.vx, h.vy) for h in self.hits]:
            if np.hypot(vx, vy) > self.max_speed:
                raise SynthError(f"speed {np.hypot(vx, vy):.1f} exceeds max_speed {self.max_speed}")
        for o in self.occlusions:
            if o.kind not in OCCLUSION_KINDS:
                raise SynthError(f"unknown occlusion kind {o.kind!r}")
            if not 0 <= o.start <= o.end < self.n_frames:
                raise SynthError(f"occlusion window {o.start}-{o.end} outside the sequence")
        if self.ball_radius <= 0 or self.blur_factor < 0:
            raise SynthError("ball radius must be positive and blur factor non-negative")
        centers = ball_path(self)
        visible = np.mean([self._in_view(c) for c in centers])
        if visible < 0.5:
            raise SynthError(f"ball is in view for only {visible:.0%} of frames")

    def _in_view(self, c) -> bool:
        r = self.ball_radius
        return r <= c[0] <= self.width - 1 - r and r <= c[1] <= self.height - 1 - r

    @classmethod
    def from_mapping(cls, data: dict) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise SynthError(f"unknown synth keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "SynthConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise SynthError("synth config must be a key-value mapping")
        return cls.from_mapping(data)

    def to_yaml(self) -> str:
        def plain(v):
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            if isinstance(v, list):
                return [plain(x) for x in v]
            if isinstance(v, dict):
                return {k: plain(x) for k, x in v.items()}
            return v
        return yaml.safe_dump(plain(asdict(self)), sort_keys=False)


@dataclass
class FrameTruth:
    i: int
    cls: str
    cx: Optional[float]
    cy: Optional[float]


@dataclass
class GroundTruth:
    frames: list[FrameTruth]
    hits: list[int] = field(default_factory=list)
    occlusions: list[Occlusion] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        out = {c: 0 for c in FRAME_CLASSES}
        for f in self.frames:
            out[f.cls] += 1
        return out

    def to_json(self) -> str:
        doc = {
            "frames": [{"i": f.i, "class": f.cls, "cx": f.cx, "cy": f.cy} for f in self.frames],
            "events": {
                "hits": list(self.hits),
                "occlusions": [asdict(o) for o in self.occlusions],
            },
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        doc = json.loads(text)
        frames = []
        for k, f in enumerate(doc["frames"]):
            if f["class"] not in FRAME_CLASSES:
                raise ValueError(f"frame {f.get('i')}: unknown class {f['class']!r}")
            frames.append(FrameTruth(int(f.get("i", k)), f["class"], f.get("cx"), f.get("cy")))
        events = doc.get("events", {})
        occ = [Occlusion(**o) for o in events.get("occlusions", [])]
        return cls(frames, list(events.get("hits", [])), occ)

    @classmethod
    def read(cls, path: str | os.PathLike) -> "GroundTruth":
        return cls.from_json(Path(path).read_text())


def _segments(cfg: SynthConfig) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """(start time, start position, start velocity) for every ballistic piece."""
    g = np.array([0.0, cfg.g])
    segs = [(0.0, np.array(cfg.start, float), np.array(cfg.velocity, float))]
    for h in cfg.hits:
        t0, p0, v0 = segs[-1]
        dt = h.frame - t0
        segs.append((float(h.frame), p0 + v0 * dt + 0.5 * g * dt * dt, np.array([h.vx, h.vy], float)))
    return segs


def position_at(cfg: SynthConfig, t: float, segs=None) -> np.ndarray:
    segs = segs or _segments(cfg)
    t0, p0, v0 = segs[0]
    for seg in segs:
        if seg[0] <= t:
            t0, p0, v0 = seg
    dt = t - t0
    return p0 + v0 * dt + 0.5 * np.array([0.0, cfg.g]) * dt * dt


def ball_path(cfg: SynthConfig) -> np.ndarray:
    segs = _segments(cfg)
    return np.array([position_at(cfg, float(t), segs) for t in range(cfg.n_frames)])


def _occluders(cfg: SynthConfig, centers: np.ndarray) -> list[PlayerSpec]:
    """A stationary player under the ball for every player-overlap window."""
    out = []
    pad = cfg.ball_radius + 2.0
    for o in cfg.occlusions:
        if o.kind != "player-overlap":
            continue
        pts = centers[o.start:o.end + 1]
        x0, y0 = pts.min(axis=0) - pad
        x1, y1 = pts.max(axis=0) + pad
        w = max(int(np.ceil(x1 - x0)), 16)
        h = max(int(np.ceil(y1 - y0)), 48)
        cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
        out.append(PlayerSpec(x=cx - w / 2, y=cy - h / 2, w=w, h=h, shirt=(170, 50, 50), amp_x=0.0))
    return out


def _court(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    img = np.empty((cfg.height, cfg.width, 3), np.float64)
    img[:] = COURT
    img += rng.normal(0.0, 3.0, size=(cfg.height, cfg.width, 1))
    if cfg.court_lines:
        W, H = cfg.width, cfg.height
        mx, my = round(0.05 * W), round(0.1 * H)
        t = max(1, round(H / 180))
        for y in (my, H - my - t, H // 2):
            img[y:y + t, mx:W - mx] = LINE
        for x in (mx, W - mx - t):
            img[my:H - my, x:x + t] = LINE
    return img


def _capsule_coverage(shape, a: np.ndarray, b: np.ndarray, radius: float, ss: int = 4):
    """Fractional pixel coverage of a capsule, by ss x ss supersampling.

    Returns (coverage, row slice, col slice) restricted to the capsule's bbox.
    """
    H, W = shape
    lo = np.floor(np.minimum(a, b) - radius - 1).astype(int)
    hi = np.ceil(np.maximum(a, b) + radius + 1).astype(int)
    c0, r0 = max(lo[0], 0), max(lo[1], 0)
    c1, r1 = min(hi[0] + 1, W), min(hi[1] + 1, H)
    if c0 >= c1 or r0 >= r1:
        return None
    offs = (np.arange(ss) + 0.5) / ss - 0.5
    ys = (np.arange(r0, r1)[:, None] + offs[None, :]).ravel()
    xs = (np.arange(c0, c1)[:, None] + offs[None, :]).ravel()
    py, px = np.meshgrid(ys, xs, indexing="ij")
    ab = b - a
    denom = float(ab @ ab)
    if denom > 0:
        t = np.clip(((px - a[0]) * ab[0] + (py - a[1]) * ab[1]) / denom, 0.0, 1.0)
    else:
        t = np.zeros_like(px)
    dx = px - (a[0] + t * ab[0])
    dy = py - (a[1] + t * ab[1])
    inside = (dx * dx + dy * dy <= radius * radius).astype(np.float64)
    cov = inside.reshape(r1 - r0, ss, c1 - c0, ss).mean(axis=(1, 3))
    return cov, slice(r0, r1), slice(c0, c1)


def _draw_ball(img, cfg: SynthConfig, t: int, segs) -> None:
    half = cfg.blur_factor / 2.0
    samples = [position_at(cfg, t + s, segs) for s in np.linspace(-half, half, 9)]
    cov_total = np.zeros(img.shape[:2])
    for a, b in zip(samples, samples[1:]):
        res = _capsule_coverage(img.shape[:2], a, b, cfg.ball_radius)
        if res is None:
            continue
        cov, rs, cs = res
        cov_total[rs, cs] = np.maximum(cov_total[rs, cs], cov)
    alpha = cov_total[..., None]
    img[:] = img * (1 - alpha) + np.array(BALL, float) * alpha


def _draw_player(img, p: PlayerSpec, t: int, texture: np.ndarray) -> None:
    H, W = img.shape[:2]
    x = p.x + p.amp_x * np.sin(2 * np.pi * t / p.period)
    x0, y0 = int(round(x)), int(round(p.y))
    head = max(4, p.w // 3)
    body_top = y0 + head
    r0, r1 = max(body_top, 0), min(y0 + p.h, H)
    c0, c1 = max(x0, 0), min(x0 + p.w, W)
    if r0 < r1 and c0 < c1:
        # texture crawls one pixel per frame, as cloth folds and limbs would
        tex = np.roll(texture, t, axis=1)[r0 - body_top:r1 - body_top, c0 - x0:c1 - x0]
        img[r0:r1, c0:c1] = np.clip(np.array(p.shirt, float) + tex, 0, 255)
    cy, cx = y0 + head / 2, x0 + p.w / 2
    yy, xx = np.ogrid[:H, :W]
    disc = (yy - cy) ** 2 + (xx - cx) ** 2 <= (head / 2) ** 2
    img[disc] = SKIN


def render(cfg: SynthConfig) -> tuple[list[np.ndarray], GroundTruth]:
    """Render every frame and the matching ground truth."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    segs = _segments(cfg)
    centers = ball_path(cfg)
    background = _court(cfg, rng)
    for sx, sy in cfg.specks:
        res = _capsule_coverage(background.shape[:2], np.array([sx, sy]), np.array([sx, sy]), 1.5)
        if res is not None:
            cov, rs, cs = res
            background[rs, cs] = background[rs, cs] * (1 - cov[..., None]) + 255.0 * cov[..., None]

    players = list(cfg.players) + _occluders(cfg, centers)
    textures = [rng.uniform(-60, 60, size=(p.h, p.w, 3)) for p in players]

    hidden = set()
    classes = {}
    for o in cfg.occlusions:
        for f in range(o.start, o.end + 1):
            if o.kind == "out-of-view":
                hidden.add(f)
                classes[f] = "IF"
            elif o.kind == "player-overlap":
                classes[f] = "OF"

    images, truth = [], []
    for t in range(cfg.n_frames):
        img = background.copy()
        for b in cfg.blinkers:
            k = t - b.start
            if 0 <= k < b.count * b.period and k % b.period == 0:
                res = _capsule_coverage(img.shape[:2], np.array([b.x, b.y]), np.array([b.x, b.y]), b.radius)
                if res is not None:
                    cov, rs, cs = res
                    img[rs, cs] = img[rs, cs] * (1 - cov[..., None]) + 255.0 * cov[..., None]
        for p, tex in zip(players, textures):
            _draw_player(img, p, t, tex)
        if t not in hidden:
            _draw_ball(img, cfg, t, segs)
        if cfg.noise > 0:
            img = img + rng.normal(0.0, cfg.noise, size=img.shape)
        images.append(np.clip(np.rint(img), 0, 255).astype(np.uint8))

        c = centers[t]
        in_view = cfg._in_view(c)
        cls = classes.get(t, "NOF" if in_view else "IF")
        if not in_view:
            cls = "IF"
        shown = in_view and t not in hidden
        truth.append(FrameTruth(t, cls, float(c[0]) if shown else None, float(c[1]) if shown else None))
    return images, GroundTruth(truth, [h.frame for h in cfg.hits], list(cfg.occlusions))


def generate(cfg: SynthConfig, out_dir: str | os.PathLike) -> tuple[SequenceManifest, GroundTruth]:
    """Write frames, ``manifest.txt``, ``truth.json`` and ``synth.yaml`` under ``out_dir``."""
    images, truth = render(cfg)
    out_dir = Path(out_dir)
    manifest = write_sequence(out_dir, images)
    (out_dir / "truth.json").write_text(truth.to_json())
    (out_dir / "synth.yaml").write_text(cfg.to_yaml())
    return manifest, truth
