"""Pipeline tunables in one flat, file-loadable config.

Pixel-scale values (``d``, ``a_human``, ``c_min``, ``c_max``) are given at
1280x720 and rescaled to the actual frame size: lengths by the width
ratio, areas by the pixel-count ratio.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .classify import HeuristicParams
from .proposals import ProposalParams
from .redetect import RedetectParams
from .track import TrackerParams

REF_WIDTH, REF_HEIGHT = 1280, 720
ENV_PREFIX = "SHUTTLETRACK_"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    a: int = 25
    a_seg: tuple[float, float, float] = (10.0, 0.15, 0.12)
    blur_kernel: int = 3
    blur_repeats: int = 2
    c_min: float = 8.0
    c_max: float = 150.0
    a_human: float = 1500.0
    max_regions: int = 64
    d: float = 40.0
    t_valid: int = 5
    t_valid_fast: int = 3
    t_lost: int = 4
    cos_min: float = 0.8
    sim_min: float = 0.9
    k_fit: int = 5
    fast_tracker: bool = True
    r_intra: float = 25.0
    r0: float = 20.0
    r_growth: float = 8.0
    g_max: int = 12
    eps: float = 5.0
    tau: float = 5.0
    classifier: str = "heuristic"
    bright_pct: float = 85.0
    bright_min: float = 0.8
    var_min: float = 12.0 / 255.0
    scale_to_resolution: bool = True

    def __post_init__(self):
        try:
            self.a_seg = tuple(float(v) for v in self.a_seg)
        except TypeError as exc:
            raise ConfigError("a_seg must be a triple of numbers") from exc
        if len(self.a_seg) != 3:
            raise ConfigError("a_seg must have exactly three entries (hue, saturation, luminance)")
        self.validate()

    def validate(self) -> None:
        checks = [
            (0 <= self.a <= 255, "a must lie in [0, 255]"),
            (all(v > 0 for v in self.a_seg), "a_seg entries must be positive"),
            (self.blur_kernel >= 1 and self.blur_kernel % 2 == 1, "blur_kernel must be odd and >= 1"),
            (self.blur_repeats >= 0, "blur_repeats must be >= 0"),
            (0 < self.c_min < self.c_max, "need 0 < c_min < c_max"),
            (self.a_human > self.c_max ** 2 / 16, "a_human must exceed c_max^2/16"),
            (self.max_regions >= 1, "max_regions must be >= 1"),
            (self.d > 0, "d must be positive"),
            (self.t_valid >= 3, "t_valid must be >= 3"),
            (self.t_valid_fast >= 1, "t_valid_fast must be >= 1"),
            (self.t_lost >= 1, "t_lost must be >= 1"),
            (0 < self.cos_min <= 1, "cos_min must lie in (0, 1]"),
            (0 < self.sim_min <= 1, "sim_min must lie in (0, 1]"),
            (self.k_fit >= 2, "k_fit must be >= 2"),
            (self.r_intra > 0 and self.r0 > 0 and self.r_growth >= 0, "ROI radii must be positive"),
            (self.g_max >= 0, "g_max must be >= 0"),
            (self.eps > 0 and self.tau > 0, "eps and tau must be positive"),
            (0 < self.bright_pct <= 100, "bright_pct must lie in (0, 100]"),
            (0 < self.bright_min < 1, "bright_min must lie in (0, 1)"),
            (self.var_min > 0, "var_min must be positive"),
            (self.classifier == "heuristic" or self.classifier.startswith("external:"),
             "classifier must be 'heuristic' or 'external:<command>'"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**dict(data))
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | os.PathLike | None = None, env: Mapping[str, str] | None = None,
             **overrides) -> "PipelineConfig":
        """File values, then ``SHUTTLETRACK_<KEY>`` environment overrides, then keyword overrides."""
        data: dict[str, Any] = {}
        if path is not None:
            try:
                loaded = yaml.safe_load(Path(path).read_text())
            except (OSError, yaml.YAMLError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            if loaded is not None and not isinstance(loaded, dict):
                raise ConfigError("config file must be a key-value mapping")
            data.update(loaded or {})
        env = os.environ if env is None else env
        names = {f.name for f in fields(cls)}
        for key, raw in env.items():
            if not key.startswith(ENV_PREFIX):
                continue
            name = key[len(ENV_PREFIX):].lower()
            if name not in names:
                raise ConfigError(f"unknown config key in environment variable {key}")
            data[name] = yaml.safe_load(raw)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(data)

    def to_yaml(self) -> str:
        d = asdict(self)
        d["a_seg"] = list(self.a_seg)
        return yaml.safe_dump(d, sort_keys=False)

    def _length_scale(self, width: int) -> float:
        return width / REF_WIDTH if self.scale_to_resolution else 1.0

    def _area_scale(self, width: int, height: int) -> float:
        return width * height / (REF_WIDTH * REF_HEIGHT) if self.scale_to_resolution else 1.0

    def proposal_params(self, width: int, height: int) -> ProposalParams:
        s = self._length_scale(width)
        try:
            return ProposalParams(
                a_seg=self.a_seg, c_min=self.c_min * s, c_max=self.c_max * s,
                a_human=self.a_human * self._area_scale(width, height), max_regions=self.max_regions,
                blur_kernel=self.blur_kernel, blur_repeats=self.blur_repeats,
            )
        except ValueError as exc:
            raise ConfigError(f"at {width}x{height}: {exc}") from exc

    def tracker_params(self, width: int) -> TrackerParams:
        return TrackerParams(
            d=self.d * self._length_scale(width), t_valid=self.t_valid, t_valid_fast=self.t_valid_fast,
            t_lost=self.t_lost, cos_min=self.cos_min, sim_min=self.sim_min, k_fit=self.k_fit,
            fast_enabled=self.fast_tracker,
        )

    def redetect_params(self) -> RedetectParams:
        return RedetectParams(r_intra=self.r_intra, r0=self.r0, r_growth=self.r_growth, g_max=self.g_max,
                              k_fit=self.k_fit)

    def heuristic_params(self) -> HeuristicParams:
        return HeuristicParams(bright_pct=self.bright_pct, bright_min=self.bright_min, var_min=self.var_min)
