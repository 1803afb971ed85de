"""Fast-tracker ablation on the smash scenario.

Counts how many of the six smash frames end up in the trajectory (within
tau of the truth) with the fast tracker on and off, across several seeds.

    python3 scripts/smash_ablation.py --seeds 7 8 9
"""

from __future__ import annotations

import argparse

import numpy as np

from shuttletrack.config import PipelineConfig
from shuttletrack.media import Frame
from shuttletrack.pipeline import run_pipeline
from shuttletrack.scenarios import SMASH_FRAMES, smash_rally
from shuttletrack.synth import render


def captured(res, truth, tau: float) -> int:
    pos = res.trajectory.positions
    n = 0
    for f in SMASH_FRAMES:
        ft = truth.frames[f]
        if f in pos and np.hypot(pos[f][0] - ft.cx, pos[f][1] - ft.cy) <= tau:
            n += 1
    return n


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[7])
    ap.add_argument("--tau", type=float, default=5.0)
    args = ap.parse_args()
    print(f"{'seed':>5}{'fast on':>9}{'fast off':>10}")
    for seed in args.seeds:
        images, truth = render(smash_rally(seed))
        frames = [Frame(i, im) for i, im in enumerate(images)]
        on = captured(run_pipeline(frames, PipelineConfig(fast_tracker=True)), truth, args.tau)
        off = captured(run_pipeline(frames, PipelineConfig(fast_tracker=False)), truth, args.tau)
        print(f"{seed:>5}{on:>7}/6{off:>8}/6")


if __name__ == "__main__":
    main()
