"""Command-line orchestration: synth, eval, finetune.

Exit codes are a stable scripting contract: 0 success, 1 runtime failure,
2 usage or configuration error. Every run directory receives the fully
resolved configuration next to its outputs, and identical flags plus seeds
reproduce identical report numbers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from runstyle import deepnet as dn
from runstyle import evaluation as ev
from runstyle.domain import SensorLocation
from runstyle.ingest import load_manifest
from runstyle.profiles import PROFILES
from runstyle.synthgait import GeneratorConfig, generate_dataset
from runstyle.windowing import segment_dataset

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

DEFAULT_OUT_ROOT_ENV = "RUNSTYLE_OUT"


class ConfigError(Exception):
    pass


def _out_root() -> Path:
    return Path(os.environ.get(DEFAULT_OUT_ROOT_ENV, "runs"))


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def cmd_synth(args) -> int:
    profile = PROFILES[args.profile]
    duration = args.duration if args.duration is not None else profile.duration_s
    try:
        cfg = GeneratorConfig(n_subjects=args.subjects, duration_s=duration,
                              personalization=args.p, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    if out.exists() and any(out.iterdir()) and not args.force:
        raise ConfigError(f"output directory {out} is not empty; use --force")
    generate_dataset(cfg, out_dir=out, overwrite=True)
    print(f"wrote {cfg.n_subjects * 8 * 5} recordings to {out}/manifest.json")
    return EXIT_OK


def _load_table(data_path: str):
    dataset = load_manifest(data_path)
    return segment_dataset(dataset)


def _run_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    return _out_root() / f"{args.scheme}_{args.model}_seed{args.seed}"


def cmd_eval(args) -> int:
    profile = PROFILES[args.profile]
    table = _load_table(args.data)

    if args.scheme == "random_segments":
        plan = ev.plan_random_segment_split(table, trials=args.trials,
                                            seed=args.seed)
    else:
        plan = ev.plan_leave_subjects_out(table, seed=args.seed)

    train_cfg = dn.TrainConfig(**{**profile.train.to_json(), "seed": args.seed})
    run_dir = _run_dir(args)
    run_dir.mkdir(parents=True, exist_ok=True)
    _write_json(run_dir / "config.json", {
        "command": "eval", "data": str(args.data), "scheme": args.scheme,
        "model": args.model, "seed": args.seed, "profile": args.profile,
        "jobs": args.jobs, "train_cfg": train_cfg.to_json(),
    })
    _write_json(run_dir / "plan.json", plan.to_json())

    deep = args.model in ev.DEEP_FAMILIES
    report, models = ev.run_scheme(table, plan, args.model,
                                   train_cfg=train_cfg if deep else None,
                                   seed=args.seed, n_jobs=args.jobs,
                                   return_models=True)
    _write_json(run_dir / "report.json", report.to_json())
    (run_dir / "report.txt").write_text(report.render_table() + "\n")
    report.confusion_to_csv(run_dir / "confusion.csv")
    if deep:
        for (trial, sensor), model in models.items():
            dn.save_model(model, run_dir / "models" / f"trial{trial}" / sensor.key)
    print(report.render_table())
    print(f"report written to {run_dir / 'report.json'}")
    return EXIT_OK


def cmd_finetune(args) -> int:
    run_dir = Path(args.run)
    plan_path = run_dir / "plan.json"
    models_dir = run_dir / "models"
    if not plan_path.is_file() or not models_dir.is_dir():
        print(f"error: no evaluation artifacts under {run_dir} "
              f"(expected {plan_path} and {models_dir})", file=sys.stderr)
        return EXIT_RUNTIME

    with open(plan_path) as fh:
        plan = ev.SplitPlan.from_json(json.load(fh))
    if plan.scheme != "leave_subjects_out":
        raise ConfigError("fine-tuning requires a leave_subjects_out run")

    fractions = sorted({float(f) for f in args.fractions.split(",")})
    for f in fractions:
        if not 0 <= f < 1:
            raise ConfigError(f"fraction {f} outside [0, 1)")

    profile = PROFILES[args.profile]
    table = _load_table(args.data)

    models = {}
    for trial in range(len(plan.trials)):
        for sensor in SensorLocation:
            path = models_dir / f"trial{trial}" / sensor.key
            if not path.is_dir():
                print(f"error: missing model artifact {path}", file=sys.stderr)
                return EXIT_RUNTIME
            models[(trial, sensor)] = dn.load_model(path)

    tune_cfg = dn.TrainConfig(**{**profile.tune.to_json(), "seed": args.seed})
    ladder = ev.run_finetune_ladder(models, table, plan, fractions=fractions,
                                    tune_cfg=tune_cfg, n_jobs=args.jobs)
    payload = {
        "fractions": {str(f): {
            "mean_accuracy": ladder[f]["mean_accuracy"],
            "mean_f1": ladder[f]["mean_f1"],
            "trials": [m.to_json() for m in ladder[f]["trials"]],
        } for f in fractions},
        "tune_cfg": tune_cfg.to_json(),
    }
    out_path = Path(args.out) if args.out else run_dir / "finetune.json"
    _write_json(out_path, payload)
    for f in fractions:
        print(f"fraction {f:5.2%}: accuracy {ladder[f]['mean_accuracy']:.3f} "
              f"F1 {ladder[f]['mean_f1']:.3f}")
    print(f"ladder written to {out_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="runstyle",
        description="Synthetic running-style classification workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate the synthetic dataset")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--seed", type=int, default=42)
    synth.add_argument("--subjects", type=int, default=10)
    synth.add_argument("--duration", type=float, default=None,
                       help="seconds per recording (default: profile value)")
    synth.add_argument("--p", type=float, default=0.15,
                       help="personalization level")
    synth.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    synth.add_argument("--force", action="store_true",
                       help="overwrite a non-empty output directory")
    synth.set_defaults(func=cmd_synth)

    evalp = sub.add_parser("eval", help="run an evaluation scheme end to end")
    evalp.add_argument("--data", required=True, help="dataset directory or manifest")
    evalp.add_argument("--scheme", choices=ev.SCHEMES, default="random_segments")
    evalp.add_argument("--model", choices=ev.MODEL_FAMILIES, default="cnn_lstm")
    evalp.add_argument("--seed", type=int, default=0)
    evalp.add_argument("--trials", type=int, default=5,
                       help="trial count for random_segments")
    evalp.add_argument("--out", default=None, help="run directory")
    evalp.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    evalp.add_argument("--jobs", type=int, default=1,
                       help="parallel per-sensor trainings")
    evalp.set_defaults(func=cmd_eval)

    ft = sub.add_parser("finetune", help="fine-tuning ladder on a LOSO run")
    ft.add_argument("--run", required=True,
                    help="directory of a leave_subjects_out eval run")
    ft.add_argument("--data", required=True, help="dataset directory or manifest")
    ft.add_argument("--fractions", default="0,0.02,0.05,0.10,0.20")
    ft.add_argument("--seed", type=int, default=0)
    ft.add_argument("--out", default=None, help="output JSON path")
    ft.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    ft.add_argument("--jobs", type=int, default=1)
    ft.set_defaults(func=cmd_finetune)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
