"""Valid-frame precision / recall / F1 and per-fragment audit."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .synth import GroundTruth
from .track import Track

REASONS = {"hit": 0, "player-overlap": 1, "sideline-overlap": 2}


class EvalError(ValueError):
    pass


@dataclass
class FragmentAudit:
    id: int
    length: int
    reason: Optional[int]
    is_ball: bool


@dataclass
class EvalReport:
    IF: int
    OF: int
    NOF: int
    VF: int
    TP: int
    FP: int
    FN: int
    precision: float
    recall: float
    f1: float
    fragments: list[FragmentAudit] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    def table(self, name: str = "seq") -> str:
        head = f"{'Video':<8}{'IF':>6}{'OF':>6}{'NOF':>6}{'Frames':>8}{'VF':>6}{'Pre(%)':>9}{'Re(%)':>8}{'F1(%)':>8}"
        total = self.IF + self.VF
        row = (f"{name:<8}{self.IF:>6}{self.OF:>6}{self.NOF:>6}{total:>8}{self.VF:>6}"
               f"{100 * self.precision:>9.1f}{100 * self.recall:>8.1f}{100 * self.f1:>8.1f}")
        lines = [head, row]
        if self.fragments:
            lines += ["", f"{'Clip':>5}{'Number':>8}{'Reason':>8}{'Ball':>6}"]
            for k, fr in enumerate(self.fragments, start=1):
                reason = "-" if fr.reason is None else str(fr.reason)
                lines.append(f"{k:>5}{fr.length:>8}{reason:>8}{int(fr.is_ball):>6}")
        return "\n".join(lines) + "\n"


def f1_score(precision: float, recall: float) -> float:
    s = precision + recall
    return 0.0 if s == 0 else 2.0 * precision * recall / s


def frame_taxonomy(truth: GroundTruth | Sequence[str]) -> dict[str, int]:
    classes = [f.cls for f in truth.frames] if isinstance(truth, GroundTruth) else list(truth)
    counts = {c: classes.count(c) for c in ("IF", "OF", "NOF")}
    if sum(counts.values()) != len(classes):
        raise EvalError("unknown frame class in truth")
    counts["VF"] = len(classes) - counts["IF"]
    counts["total"] = len(classes)
    return counts


def _positions(trajectory) -> Mapping[int, tuple[float, float]]:
    return getattr(trajectory, "positions", trajectory)


def score(trajectory, truth: GroundTruth, tau: float = 5.0,
          fragments: Optional[Sequence[Track]] = None) -> EvalReport:
    positions = _positions(trajectory)
    n = len(truth.frames)
    out_of_range = [f for f in positions if not 0 <= f < n]
    if out_of_range:
        raise EvalError(f"trajectory frames {out_of_range[:5]} outside truth range 0..{n - 1}")
    tp = fp = fn = 0
    for ft in truth.frames:
        pos = positions.get(ft.i)
        if ft.cls == "IF":
            if pos is not None:
                fp += 1
            continue
        if pos is None:
            fn += 1
        elif ft.cx is not None and np.hypot(pos[0] - ft.cx, pos[1] - ft.cy) <= tau:
            tp += 1
        else:
            fp += 1
            fn += 1
    counts = frame_taxonomy(truth)
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = tp / counts["VF"] if counts["VF"] else 0.0
    audit = fragment_audit(fragments, truth, tau) if fragments else []
    return EvalReport(counts["IF"], counts["OF"], counts["NOF"], counts["VF"], tp, fp, fn,
                      precision, recall, f1_score(precision, recall), audit)


def _reason(track: Track, truth: GroundTruth, slack: int = 2) -> Optional[int]:
    end = track.last_frame
    if any(abs(h - end) <= slack for h in truth.hits):
        return REASONS["hit"]
    for o in truth.occlusions:
        if o.kind in REASONS and o.start - slack <= end + 1 <= o.end + slack:
            return REASONS[o.kind]
    return None


def fragment_audit(tracks: Sequence[Track], truth: GroundTruth, tau: float = 5.0) -> list[FragmentAudit]:
    """Length, interruption reason and ball/not-ball for each fragment.

    A fragment counts as ball when most of its points sit within ``tau`` of
    the true centre.  The reason is only reported for ball fragments.
    """
    by_frame = {f.i: f for f in truth.frames}
    out = []
    for t in sorted(tracks, key=lambda t: (t.first_frame, t.id)):
        hits = 0
        for p in t.points:
            ft = by_frame.get(p.frame)
            if ft is not None and ft.cx is not None and np.hypot(p.x - ft.cx, p.y - ft.cy) <= tau:
                hits += 1
        ball = hits * 2 > len(t.points)
        out.append(FragmentAudit(t.id, len(t.points), _reason(t, truth) if ball else None, ball))
    return out
