"""Command-line entry point.

    shuttletrack synth --scenario clean --out runs/clean
    shuttletrack track runs/clean/manifest.txt --out runs/clean/out
    shuttletrack eval runs/clean/out/trajectory.csv runs/clean/truth.json
    shuttletrack overlay runs/clean/manifest.txt runs/clean/out/trajectory.csv --out runs/clean/overlay

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .associate import Trajectory
from .classify import make_classifier
from .config import ConfigError, PipelineConfig
from .evaluation import EvalError, score
from .media import MediaError, SequenceManifest, load_sequence
from .pipeline import (STAGES, DETECTION_CSV_HEADER, PipelineError, write_csv, detect_round_one,
                       detection_rows, dump_masks, overlay, run_pipeline, write_outputs)
from .proposals import PROPOSAL_CSV_HEADER, proposals_csv_rows
from .scenarios import SCENARIOS
from .synth import GroundTruth, SynthConfig, SynthError, generate

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

log = logging.getLogger("shuttletrack")


def _config(args) -> PipelineConfig:
    overrides = {}
    if getattr(args, "classifier", None):
        overrides["classifier"] = args.classifier
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = yaml.safe_load(value)
    return PipelineConfig.load(getattr(args, "config", None), **overrides)


def _frames(manifest_path: str):
    return load_sequence(SequenceManifest.read(manifest_path))


def cmd_synth(args) -> int:
    if args.scenario:
        cfg = SCENARIOS[args.scenario](args.seed) if args.seed is not None else SCENARIOS[args.scenario]()
    elif args.config:
        cfg = SynthConfig.from_file(args.config)
    else:
        raise ConfigError("synth needs --scenario or a config file")
    manifest, truth = generate(cfg, args.out)
    counts = truth.counts()
    print(f"wrote {len(manifest.files)} frames to {args.out} (IF={counts['IF']} OF={counts['OF']} NOF={counts['NOF']})")
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _config(args)
    frames = _frames(args.manifest)
    classifier = make_classifier(cfg.classifier, cfg.heuristic_params())
    try:
        per_frame = detect_round_one(frames, cfg, classifier, args.threads, keep_masks="masks" in args.dump_stage)
    finally:
        classifier.close()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ordered = [fd for _, fd in sorted(per_frame.items())]
    write_csv(out / "proposals.csv", PROPOSAL_CSV_HEADER, [r for fd in ordered for r in proposals_csv_rows(fd.proposals)])
    write_csv(out / "detections.csv", DETECTION_CSV_HEADER, [r for fd in ordered for r in detection_rows(fd.detections)])
    if "masks" in args.dump_stage:
        dump_masks(per_frame, out)
    n_ball = sum(d.ball for fd in ordered for d in fd.detections)
    print(f"{sum(len(fd.proposals) for fd in ordered)} proposals, {n_ball} ball detections -> {out}")
    return EXIT_OK


def cmd_track(args) -> int:
    cfg = _config(args)
    frames = _frames(args.manifest)
    out = Path(args.out)
    result = run_pipeline(frames, cfg, threads=args.threads, dump_dir=out, dump_stages=args.dump_stage)
    csv_path, _ = write_outputs(result, out)
    print(f"{len(result.trajectory)} trajectory points from {len(result.groups.correct)} fragments -> {csv_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    traj = Trajectory.from_csv(Path(args.trajectory).read_text())
    truth = GroundTruth.read(args.truth)
    report = score(traj, truth, args.tau)
    print(report.table(args.name), end="")
    if args.json:
        Path(args.json).write_text(report.to_json())
    return EXIT_OK


def cmd_overlay(args) -> int:
    frames = _frames(args.manifest)
    traj = Trajectory.from_csv(Path(args.trajectory).read_text())
    paths = overlay(frames, traj, Path(args.out), args.trail)
    print(f"wrote {len(paths)} overlay frames -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shuttletrack", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def pipeline_opts(sp):
        sp.add_argument("manifest", help="manifest.txt listing P6 frames")
        sp.add_argument("--out", required=True)
        sp.add_argument("--config", help="YAML key-value pipeline config")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        sp.add_argument("--classifier", help="heuristic | external:<command>")
        sp.add_argument("--threads", type=int, default=1, help="worker cap for the detection stage")
        sp.add_argument("--dump-stage", action="append", default=[], choices=STAGES,
                        help="write intermediate artifacts for a stage (repeatable)")

    sp = sub.add_parser("synth", help="render a synthetic rally with ground truth")
    sp.add_argument("config", nargs="?", help="YAML synth config")
    sp.add_argument("--scenario", choices=sorted(SCENARIOS))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("detect", help="round-one detection only")
    pipeline_opts(sp)
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("track", help="full pipeline: detect, track, re-detect, associate")
    pipeline_opts(sp)
    sp.set_defaults(func=cmd_track)

    sp = sub.add_parser("eval", help="score a trajectory against ground truth")
    sp.add_argument("trajectory")
    sp.add_argument("truth")
    sp.add_argument("--tau", type=float, default=5.0)
    sp.add_argument("--name", default="seq")
    sp.add_argument("--json", help="also write the report as JSON")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("overlay", help="draw a trajectory onto the frames")
    sp.add_argument("manifest")
    sp.add_argument("trajectory")
    sp.add_argument("--out", required=True)
    sp.add_argument("--trail", type=int, default=10)
    sp.set_defaults(func=cmd_overlay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SynthError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if exc.stage == "config" else EXIT_DATA
    except (MediaError, EvalError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
