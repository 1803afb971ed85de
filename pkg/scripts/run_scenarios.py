"""Run every named synthetic scenario through the full pipeline and print a results table.

    python3 scripts/run_scenarios.py [--scenario clean --scenario smash] [--out runs] [--set d=30]
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

import yaml

from shuttletrack.config import PipelineConfig
from shuttletrack.evaluation import score
from shuttletrack.media import Frame
from shuttletrack.pipeline import run_pipeline, write_outputs
from shuttletrack.scenarios import SCENARIOS
from shuttletrack.synth import render


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", action="append", choices=sorted(SCENARIOS))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", type=Path, help="write trajectory.csv/json and report.json per scenario")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--tau", type=float, default=5.0)
    args = ap.parse_args()

    overrides = {k: yaml.safe_load(v) for k, _, v in (s.partition("=") for s in args.set)}
    cfg = PipelineConfig.load(env={}, **overrides)
    names = args.scenario or [n for n in SCENARIOS if n != "static"]
    print(f"{'scenario':<10}{'VF':>5}{'TP':>5}{'FP':>5}{'FN':>5}{'P':>8}{'R':>8}{'F1':>8}"
          f"{'tracks':>8}{'correct':>9}{'wrong':>7}{'secs':>7}")
    for name in names:
        synth_cfg = SCENARIOS[name](args.seed) if args.seed is not None else SCENARIOS[name]()
        images, truth = render(synth_cfg)
        frames = [Frame(i, im) for i, im in enumerate(images)]
        t0 = time.perf_counter()
        res = run_pipeline(frames, cfg)
        secs = time.perf_counter() - t0
        rep = score(res.trajectory, truth, args.tau, fragments=res.tracks)
        print(f"{name:<10}{rep.VF:>5}{rep.TP:>5}{rep.FP:>5}{rep.FN:>5}{rep.precision:>8.3f}{rep.recall:>8.3f}"
              f"{rep.f1:>8.3f}{len(res.tracks):>8}{len(res.groups.correct):>9}{len(res.groups.wrong):>7}{secs:>7.1f}")
        if args.out:
            out = args.out / name
            write_outputs(res, out)
            (out / "report.json").write_text(rep.to_json())
            (out / "groups.json").write_text(json.dumps(vars(res.groups), indent=2) + "\n")


if __name__ == "__main__":
    main()
