"""Three-frame differencing motion masks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .media import Frame, MediaError


@dataclass(frozen=True)
class MotionMask:
    index: int
    bits: np.ndarray = field(repr=False)  # (height, width) bool

    @property
    def count(self) -> int:
        return int(self.bits.sum())


def abs_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-pixel max over channels of |a - b|, as uint8."""
    d = np.abs(a.astype(np.int16) - b.astype(np.int16))
    if d.ndim == 3:
        d = d.max(axis=-1)
    return d.astype(np.uint8)


def binarize(diff: np.ndarray, a: int) -> np.ndarray:
    return np.asarray(diff) > a


def motion_mask(prev: Frame, cur: Frame, next: Frame, a: int = 25) -> MotionMask:
    shapes = {prev.pixels.shape, cur.pixels.shape, next.pixels.shape}
    if len(shapes) != 1:
        raise MediaError(f"motion_mask: frame dimensions differ: {sorted(shapes)}")
    back = binarize(abs_diff(cur.pixels, prev.pixels), a)
    fwd = binarize(abs_diff(cur.pixels, next.pixels), a)
    return MotionMask(cur.index, back & fwd)


def sequence_masks(frames: list[Frame], a: int = 25) -> dict[int, MotionMask]:
    """Masks for every frame that has neighbours on both sides."""
    return {t: motion_mask(frames[t - 1], frames[t], frames[t + 1], a) for t in range(1, len(frames) - 1)}
