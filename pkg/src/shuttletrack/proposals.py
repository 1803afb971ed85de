"""Candidate ball regions.

Round one groups the motion mask into 8-connected components and drops
anything that looks like a player.  Round two grows regions from the
brightest remaining masked pixel until the mask is exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage

from .media import Frame, HslPlanes, mean_blur, rgb_to_hsl

EIGHT = np.ones((3, 3), dtype=bool)


@dataclass
class RegionProposal:
    frame: int
    bbox: tuple[int, int, int, int]  # x, y, w, h
    centroid: tuple[float, float]  # x, y
    perimeter: float
    source: str  # "coarse" | "fine"
    seed: Optional[tuple[int, int]] = None  # x, y
    area: int = 0
    pixels: Optional[np.ndarray] = field(default=None, repr=False)  # (N, 2) rows, cols

    @property
    def side(self) -> int:
        return max(self.bbox[2], self.bbox[3])


@dataclass
class ProposalParams:
    a_seg: tuple[float, float, float] = (10.0, 0.15, 0.12)  # hue deg, sat, lum
    c_min: float = 4.0
    c_max: float = 75.0
    a_human: float = 375.0
    max_regions: int = 64
    blur_kernel: int = 3
    blur_repeats: int = 2

    def __post_init__(self):
        if not 0 < self.c_min < self.c_max:
            raise ValueError(f"need 0 < c_min < c_max, got {self.c_min}, {self.c_max}")
        if self.a_human <= self.c_max ** 2 / 16:
            raise ValueError(f"a_human={self.a_human} must exceed c_max^2/16={self.c_max ** 2 / 16:.1f}")
        if self.max_regions < 1:
            raise ValueError("max_regions must be >= 1")


def _as_mask(region) -> np.ndarray:
    if isinstance(region, np.ndarray) and region.dtype == bool and region.ndim == 2:
        return region
    pts = np.asarray(list(region) if not isinstance(region, np.ndarray) else region, dtype=int).reshape(-1, 2)
    if len(pts) == 0:
        return np.zeros((0, 0), dtype=bool)
    pts = pts - pts.min(axis=0)
    mask = np.zeros(tuple(pts.max(axis=0) + 1), dtype=bool)
    mask[pts[:, 0], pts[:, 1]] = True
    return mask


def contour_perimeter(region) -> float:
    """Length of the outer boundary of a pixel set, in pixel edges.

    ``region`` is a boolean image or an iterable of (row, col) pairs.
    Interior holes do not count.
    """
    mask = _as_mask(region)
    if not mask.any():
        raise ValueError("perimeter of an empty region")
    filled = ndimage.binary_fill_holes(np.pad(mask, 1))
    vertical = np.count_nonzero(filled[1:, :] != filled[:-1, :])
    horizontal = np.count_nonzero(filled[:, 1:] != filled[:, :-1])
    return float(vertical + horizontal)


def _proposal_from_mask(frame: int, sub: np.ndarray, r0: int, c0: int, source: str,
                        seed=None) -> RegionProposal:
    rows, cols = np.nonzero(sub)
    rows = rows + r0
    cols = cols + c0
    x, y = int(cols.min()), int(rows.min())
    w, h = int(cols.max()) - x + 1, int(rows.max()) - y + 1
    return RegionProposal(
        frame=frame,
        bbox=(x, y, w, h),
        centroid=(float(cols.mean()), float(rows.mean())),
        perimeter=contour_perimeter(sub),
        source=source,
        seed=seed,
        area=int(rows.size),
        pixels=np.stack([rows, cols], axis=1),
    )


def _boxes_intersect(a, b) -> bool:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    return ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah


def coarse_proposals(mask, params: ProposalParams, frame: Optional[int] = None,
                     human_filter: bool = True) -> list[RegionProposal]:
    bits = getattr(mask, "bits", mask)
    if frame is None:
        frame = getattr(mask, "index", 0)
    labels, n = ndimage.label(bits, structure=EIGHT)
    if n == 0:
        return []
    areas = np.bincount(labels.ravel())[1:]
    slices = ndimage.find_objects(labels)

    human_boxes = []
    small = []
    for lab, (sl, area) in enumerate(zip(slices, areas), start=1):
        box = (sl[1].start, sl[0].start, sl[1].stop - sl[1].start, sl[0].stop - sl[0].start)
        if human_filter and area > params.a_human:
            human_boxes.append(box)
        else:
            small.append((lab, sl, box))

    out = []
    for lab, sl, box in small:
        if any(_boxes_intersect(box, hb) for hb in human_boxes):
            continue
        sub = labels[sl] == lab
        prop = _proposal_from_mask(frame, sub, sl[0].start, sl[1].start, "coarse")
        if params.c_min < prop.perimeter < params.c_max:
            out.append(prop)
    return out


def _hue_distance(h: np.ndarray, h0: float) -> np.ndarray:
    d = np.abs(h - h0)
    return np.minimum(d, 360.0 - d)


def _grow(hsl: HslPlanes, seed: tuple[int, int], a_seg, blocked: np.ndarray) -> tuple[np.ndarray, int, int]:
    """8-connected region around ``seed`` whose HSL lies in the seed's window.

    Works on a crop that doubles until the region no longer touches its
    border, so small regions stay cheap on large frames.
    """
    r, c = seed
    H, W = hsl.l.shape
    h0, s0, l0 = hsl.h[r, c], hsl.s[r, c], hsl.l[r, c]
    half = 16
    while True:
        r0, r1 = max(0, r - half), min(H, r + half + 1)
        c0, c1 = max(0, c - half), min(W, c + half + 1)
        inside = (
            (_hue_distance(hsl.h[r0:r1, c0:c1], h0) <= a_seg[0])
            & (np.abs(hsl.s[r0:r1, c0:c1] - s0) <= a_seg[1])
            & (np.abs(hsl.l[r0:r1, c0:c1] - l0) <= a_seg[2])
            & ~blocked[r0:r1, c0:c1]
        )
        labels, _ = ndimage.label(inside, structure=EIGHT)
        region = labels == labels[r - r0, c - c0]
        whole = r0 == 0 and c0 == 0 and r1 == H and c1 == W
        touches = (
            (r0 > 0 and region[0].any()) or (r1 < H and region[-1].any())
            or (c0 > 0 and region[:, 0].any()) or (c1 < W and region[:, -1].any())
        )
        if whole or not touches:
            return region, r0, c0
        half *= 2


def fine_proposals(frame: Frame, mask: np.ndarray, params: ProposalParams,
                   hsl: Optional[HslPlanes] = None, luminance: Optional[np.ndarray] = None,
                   ) -> list[RegionProposal]:
    """Brightness-seeded region growing over the set bits of ``mask``.

    Each pass seeds at the brightest remaining masked pixel (after box
    blurring), grows the connected region inside the seed's HSL window,
    keeps it when its perimeter is within bounds and erases it from the
    mask.  ``hsl`` and ``luminance`` (the blurred L plane) may be passed in
    to reuse work across calls on the same frame.
    """
    if hsl is None:
        hsl = rgb_to_hsl(frame)
    if luminance is None:
        luminance = mean_blur(hsl.l, params.blur_kernel, params.blur_repeats)
    m = np.array(mask, dtype=bool, copy=True)
    if m.shape != hsl.l.shape:
        raise ValueError(f"mask shape {m.shape} does not match frame {hsl.l.shape}")
    claimed = np.zeros_like(m)
    out: list[RegionProposal] = []
    for _ in range(params.max_regions):
        if not m.any():
            break
        masked = np.where(m, luminance, -np.inf)
        # argmax returns the first maximum in row-major order: smallest row, then column
        r, c = np.unravel_index(int(np.argmax(masked)), masked.shape)
        region, r0, c0 = _grow(hsl, (r, c), params.a_seg, claimed)
        prop = _proposal_from_mask(frame.index, region, r0, c0, "fine", seed=(int(c), int(r)))
        if params.c_min < prop.perimeter < params.c_max:
            out.append(prop)
        rr, cc = prop.pixels[:, 0], prop.pixels[:, 1]
        m[rr, cc] = False
        claimed[rr, cc] = True
    return out


def disc_mask(shape: tuple[int, int], center: tuple[float, float], radius: float) -> np.ndarray:
    """Boolean disc of ``radius`` around ``center`` (x, y)."""
    yy, xx = np.ogrid[: shape[0], : shape[1]]
    return (xx - center[0]) ** 2 + (yy - center[1]) ** 2 <= radius ** 2


def proposals_csv_rows(props: Iterable[RegionProposal]):
    for p in props:
        x, y, w, h = p.bbox
        yield (p.frame, x, y, w, h, f"{p.centroid[0]:.3f}", f"{p.centroid[1]:.3f}", f"{p.perimeter:.1f}", p.source)


PROPOSAL_CSV_HEADER = ("frame", "x", "y", "w", "h", "cx", "cy", "perimeter", "source")
