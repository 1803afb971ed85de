"""Frames, pixmap I/O, HSL conversion and box blurring."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

MIN_SIDE = 16


class MediaError(Exception):
    """Raised for unreadable or inconsistent frame data."""


@dataclass(frozen=True)
class Frame:
    index: int
    pixels: np.ndarray = field(repr=False)  # (height, width, 3) uint8

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise MediaError(f"frame {self.index}: expected HxWx3 uint8, got {px.shape} {px.dtype}")
        if px.shape[0] < MIN_SIDE or px.shape[1] < MIN_SIDE:
            raise MediaError(f"frame {self.index}: {px.shape[1]}x{px.shape[0]} is below {MIN_SIDE}x{MIN_SIDE}")
        if self.index < 0:
            raise MediaError("frame index must be non-negative")
        px.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class HslPlanes:
    h: np.ndarray  # degrees in [0, 360)
    s: np.ndarray
    l: np.ndarray

    def stack(self) -> np.ndarray:
        return np.stack([self.h, self.s, self.l], axis=-1)


@dataclass
class SequenceManifest:
    directory: Path
    files: list[str]
    fps: float = 30.0

    @classmethod
    def read(cls, path: str | os.PathLike, fps: float = 30.0) -> "SequenceManifest":
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise MediaError(f"cannot read manifest {path}: {exc}") from exc
        files = [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
        return cls(path.parent, files, fps)

    def write(self, path: str | os.PathLike) -> None:
        Path(path).write_text("".join(f"{name}\n" for name in self.files), encoding="utf-8")

    def paths(self) -> list[Path]:
        return [self.directory / name for name in self.files]


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        if data[pos:pos + 1].isspace():
            pos += 1
        elif data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def _parse_pnm(data: bytes, magic: bytes, channels: int, source: str) -> np.ndarray:
    tok, pos = _read_token(data, 0)
    if tok != magic:
        raise MediaError(f"{source}: bad magic {tok!r}, expected {magic!r}")
    header = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        if not tok.isdigit():
            raise MediaError(f"{source}: malformed header field {tok!r}")
        header.append(int(tok))
    width, height, maxval = header
    if maxval != 255:
        raise MediaError(f"{source}: maxval {maxval} unsupported (need 255)")
    if width <= 0 or height <= 0:
        raise MediaError(f"{source}: empty image {width}x{height}")
    # exactly one whitespace byte separates the header from the raster
    pos += 1
    need = width * height * channels
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise MediaError(f"{source}: truncated raster ({len(raster)} of {need} bytes)")
    arr = np.frombuffer(raster, dtype=np.uint8)
    return arr.reshape(height, width, channels) if channels > 1 else arr.reshape(height, width)


def read_ppm(path: str | os.PathLike) -> np.ndarray:
    """Read a binary P6 pixmap into an (H, W, 3) uint8 array."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise MediaError(f"cannot read {path}: {exc}") from exc
    return _parse_pnm(data, b"P6", 3, str(path)).copy()


def write_ppm(path: str | os.PathLike, pixels: np.ndarray) -> None:
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    h, w = pixels.shape[:2]
    Path(path).write_bytes(b"P6\n%d %d\n255\n" % (w, h) + pixels.tobytes())


def write_pgm(path: str | os.PathLike, plane: np.ndarray) -> None:
    """Write a P5 grayscale pixmap; boolean planes are stretched to 0/255."""
    plane = np.asarray(plane)
    if plane.dtype == bool:
        plane = plane.astype(np.uint8) * 255
    plane = np.ascontiguousarray(plane, dtype=np.uint8)
    h, w = plane.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + plane.tobytes())


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    return _parse_pnm(Path(path).read_bytes(), b"P5", 1, str(path)).copy()


def load_sequence(manifest: SequenceManifest) -> list[Frame]:
    frames: list[Frame] = []
    for i, path in enumerate(manifest.paths()):
        if not path.is_file():
            raise MediaError(f"missing frame file {path}")
        frame = Frame(i, read_ppm(path))
        if frames and frame.pixels.shape != frames[0].pixels.shape:
            raise MediaError(
                f"dimension mismatch: {path.name} is {frame.width}x{frame.height}, "
                f"expected {frames[0].width}x{frames[0].height}"
            )
        frames.append(frame)
    return frames


def write_sequence(directory: str | os.PathLike, images: list[np.ndarray], pattern: str = "frame_{:05d}.ppm",
                   fps: float = 30.0) -> SequenceManifest:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i, img in enumerate(images):
        name = pattern.format(i)
        write_ppm(directory / name, img)
        names.append(name)
    manifest = SequenceManifest(directory, names, fps)
    manifest.write(directory / "manifest.txt")
    return manifest


def rgb_to_hsl(frame: Frame | np.ndarray) -> HslPlanes:
    """Hexcone HSL. Hue is fixed to 0 for achromatic pixels."""
    px = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    rgb = px.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    cmax = rgb.max(axis=-1)
    cmin = rgb.min(axis=-1)
    chroma = cmax - cmin
    light = (cmax + cmin) / 2.0

    denom = 1.0 - np.abs(2.0 * light - 1.0)
    sat = np.divide(chroma, denom, out=np.zeros_like(chroma), where=(chroma > 0) & (denom > 0))
    sat = np.clip(sat, 0.0, 1.0)

    hue = np.zeros_like(chroma)
    safe = np.where(chroma > 0, chroma, 1.0)
    is_r = (chroma > 0) & (cmax == r)
    is_g = (chroma > 0) & (cmax == g) & ~is_r
    is_b = (chroma > 0) & ~is_r & ~is_g
    hue = np.where(is_r, np.mod((g - b) / safe, 6.0), hue)
    hue = np.where(is_g, (b - r) / safe + 2.0, hue)
    hue = np.where(is_b, (r - g) / safe + 4.0, hue)
    hue = np.mod(hue * 60.0, 360.0)
    return HslPlanes(hue, sat, light)


def hsl_to_rgb(planes: HslPlanes) -> np.ndarray:
    """Inverse of :func:`rgb_to_hsl`, rounded to uint8."""
    h, s, l = planes.h, planes.s, planes.l
    chroma = (1.0 - np.abs(2.0 * l - 1.0)) * s
    hp = h / 60.0
    x = chroma * (1.0 - np.abs(np.mod(hp, 2.0) - 1.0))
    zeros = np.zeros_like(h)
    sector = np.floor(hp).astype(int) % 6
    table = [
        (chroma, x, zeros), (x, chroma, zeros), (zeros, chroma, x),
        (zeros, x, chroma), (x, zeros, chroma), (chroma, zeros, x),
    ]
    rgb = np.zeros(h.shape + (3,))
    for k, (r1, g1, b1) in enumerate(table):
        sel = sector == k
        rgb[sel, 0], rgb[sel, 1], rgb[sel, 2] = r1[sel], g1[sel], b1[sel]
    rgb += (l - chroma / 2.0)[..., None]
    return np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)


def mean_blur(plane: np.ndarray, kernel: int = 3, repeats: int = 2) -> np.ndarray:
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError(f"blur kernel must be a positive odd integer, got {kernel}")
    if repeats < 0:
        raise ValueError("repeats must be >= 0")
    out = np.asarray(plane, dtype=np.float64)
    if repeats == 0:
        return out.copy()
    for _ in range(repeats):
        out = ndimage.uniform_filter(out, size=kernel, mode="nearest")
    return out


class FrameStore:
    """Frames plus lazily cached HSL planes and blurred luminance."""

    def __init__(self, frames: list[Frame], blur_kernel: int = 3, blur_repeats: int = 2):
        self.frames = frames
        self.blur_kernel = blur_kernel
        self.blur_repeats = blur_repeats
        self._hsl: dict[int, HslPlanes] = {}
        self._lum: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> Frame:
        return self.frames[i]

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames[0].pixels.shape[:2]

    def hsl(self, i: int) -> HslPlanes:
        if i not in self._hsl:
            self._hsl[i] = rgb_to_hsl(self.frames[i])
        return self._hsl[i]

    def luminance(self, i: int) -> np.ndarray:
        if i not in self._lum:
            self._lum[i] = mean_blur(self.hsl(i).l, self.blur_kernel, self.blur_repeats)
        return self._lum[i]
