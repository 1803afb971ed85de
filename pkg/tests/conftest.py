from __future__ import annotations

import functools

import numpy as np
import pytest

from shuttletrack.classify import ClassLabel, Detection
from shuttletrack.config import PipelineConfig
from shuttletrack.media import Frame
from shuttletrack.pipeline import run_pipeline
from shuttletrack.scenarios import SCENARIOS
from shuttletrack.synth import render
from shuttletrack.track import Track, TrackKind, TrackPoint


def make_frame(pixels, index=0) -> Frame:
    return Frame(index, np.ascontiguousarray(pixels, dtype=np.uint8))


def unit(v) -> np.ndarray:
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def make_det(frame, x, y, feature=None, label=0, source="detect") -> Detection:
    feat = unit(np.ones(64)) if feature is None else unit(feature)
    return Detection(frame, (float(x), float(y)), (int(x) - 2, int(y) - 2, 5, 5), ClassLabel(label), 0.9, feat, source)


def make_track(tid, pts, responses=None, kind=TrackKind.NORMAL, source="detect") -> Track:
    """Track from (frame, x, y) triples; responses default to the point count."""
    points = [TrackPoint(f, float(x), float(y), source) for f, x, y in pts]
    t = Track(tid, kind, points, responses=len(points) if responses is None else responses)
    if len(points) >= 2:
        t.refit(5)
    return t


@functools.lru_cache(maxsize=None)
def scenario_frames(name: str):
    images, truth = render(SCENARIOS[name]())
    return [make_frame(img, i) for i, img in enumerate(images)], truth


@functools.lru_cache(maxsize=None)
def scenario_result(name: str, fast_tracker: bool = True):
    frames, truth = scenario_frames(name)
    return run_pipeline(frames, PipelineConfig(fast_tracker=fast_tracker)), truth


@pytest.fixture(scope="session")
def clean_run():
    return scenario_result("clean")


ACCEPTANCE_LINES: list[str] = []


def record(name: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
