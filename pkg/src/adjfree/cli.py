"""Command-line front end.

Subcommands:

* ``attack``    run the search against a target wav, write artifacts
* ``sweep-lag`` trace a perturbation's confidence-vs-lag curve
* ``select``    pick a representative entry from a saved front
* ``corpus``    write the synthetic labeled corpus as wav files

Artifacts are plain JSON/CSV plus wav files; no plotting happens here.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

from .audio import UnsupportedWavError, WavFormatError, Waveform, read_wav, write_wav
from .classifier import (
    DEFAULT_LABELS,
    ClassifierError,
    SubprocessClassifier,
    TemplateClassifier,
    make_synthetic_corpus,
)
from .moead import RunAborted, RunConfig, run
from .objectives import EvalContext, Genome, default_lag_schedule, is_adjust_free
from .report import knee_index, load_front, project_front

log = logging.getLogger("adjfree")

OBJECTIVE_CHOICES = {"f1f3": ("f1", "f3"), "f1f2f3": ("f1", "f2", "f3")}


def _build_model(spec: str, target: Waveform, corpus_seed: int):
    """Instantiate the classifier named by --classifier.

    ``builtin`` derives template waveforms at the target's rate and
    duration so feature shapes line up; ``cmd:<command>`` launches the
    command as a line-protocol subprocess.
    """
    if spec == "builtin":
        corpus = make_synthetic_corpus(
            DEFAULT_LABELS,
            duration=target.duration,
            rate=target.sample_rate,
            seed=corpus_seed,
        )
        return TemplateClassifier.from_waveforms(corpus)
    if spec.startswith("cmd:"):
        command = spec[4:].strip()
        if not command:
            raise ValueError("empty command in --classifier cmd:<command>")
        return SubprocessClassifier(command)
    raise ValueError(f"unknown classifier spec {spec!r}; use builtin or cmd:<command>")


def _close_model(model) -> None:
    close = getattr(model, "close", None)
    if close is not None:
        close()


def _sorted_entries(archive):
    """Archive entries in canonical order: ascending (f1, f2, f3)."""
    return sorted(
        archive.entries,
        key=lambda e: (e.objectives.f1, e.objectives.f2, e.objectives.f3),
    )


def _export_indices(entries, limit: int) -> list[int]:
    """Pick up to ``limit`` knee-adjacent entries to export as wavs."""
    if limit <= 0 or not entries:
        return []
    if len(entries) <= limit:
        return list(range(len(entries)))
    points = [(e.objectives.f1, e.objectives.f2) for e in entries]
    knee = knee_index(points)
    ranked = sorted(range(len(entries)), key=lambda i: (abs(i - knee), i))
    return sorted(ranked[:limit])


def cmd_attack(args) -> int:
    target = read_wav(args.target)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    schedule = default_lag_schedule(args.tmax, args.lags)
    cfg = RunConfig(
        n_pop=args.pop,
        n_gen=args.gens,
        neighborhood=min(20, args.pop),  # tiny populations shrink T with them
        seed=args.seed,
        objectives=OBJECTIVE_CHOICES[args.objectives],
        bound=args.bound,
        max_queries=args.max_queries,
    )
    config_doc = {
        **asdict(cfg),
        "target": str(args.target),
        "classifier": args.classifier,
        "t_max": schedule.t_max,
        "n_lags": len(schedule),
    }

    model = _build_model(args.classifier, target, args.corpus_seed)
    checkpoint = out_dir / "checkpoint.json"
    started = time.monotonic()
    try:
        result = run(
            target,
            model,
            cfg,
            lag_schedule=schedule,
            checkpoint_path=checkpoint,
            resume_from=args.resume,
        )
    except RunAborted as exc:
        log.error("%s", exc)
        if exc.checkpoint_path is not None:
            log.error("resume with: --resume %s", exc.checkpoint_path)
        return 3
    finally:
        _close_model(model)
    elapsed = time.monotonic() - started

    entries = _sorted_entries(result.archive)
    exported = set(_export_indices(entries, args.wav_exports))
    front_entries = []
    for idx, entry in enumerate(entries):
        wav_name = None
        if idx in exported:
            wav_name = f"entry_{idx:03d}.wav"
            write_wav(out_dir / wav_name, entry.genome.as_waveform(target.sample_rate))
        front_entries.append({"objectives": entry.objectives.as_dict(), "wav": wav_name})

    front_doc = {"entries": front_entries, "config": config_doc, "queries": result.queries}
    with open(out_dir / "front.json", "w", encoding="utf-8") as fh:
        json.dump(front_doc, fh, indent=2, sort_keys=True)

    with open(out_dir / "history.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["generation", "best_f1", "best_f2", "best_f3",
             "mean_f1", "mean_f2", "mean_f3", "queries"]
        )
        for stats in result.history:
            writer.writerow(
                [stats.generation,
                 stats.best["f1"], stats.best["f2"], stats.best["f3"],
                 stats.mean["f1"], stats.mean["f2"], stats.mean["f3"],
                 stats.queries]
            )

    meta = {
        "config": config_doc,
        "seed": cfg.seed,
        "queries": result.queries,
        "wall_time_seconds": elapsed,
        "correct_label": result.correct_label,
        "clean_confidence": result.clean_confidence,
        "generations_run": result.generations_run,
        "archive_size": len(entries),
    }
    with open(out_dir / "run_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)

    best_f1 = min((e.objectives.f1 for e in entries), default=float("nan"))
    print(
        f"archive {len(entries)} entries, min f1 {best_f1:.4f}, "
        f"{result.queries} queries in {elapsed:.1f}s -> {out_dir / 'front.json'}"
    )
    return 0


def cmd_sweep_lag(args) -> int:
    target = read_wav(args.target)
    perturbation = read_wav(args.perturbation)
    if perturbation.sample_rate != target.sample_rate:
        raise ValueError("perturbation and target sample rates differ")
    if len(perturbation) != len(target):
        raise ValueError("perturbation and target lengths differ")

    model = _build_model(args.classifier, target, args.corpus_seed)
    try:
        schedule = default_lag_schedule(args.tmax, args.dense_lags)
        ctx = EvalContext(target, model, lag_schedule=schedule)
        genome = Genome(perturbation.samples, bound=1.0)
        report = is_adjust_free(
            genome, ctx, dense_n=args.dense_lags, threshold=args.threshold
        )
    finally:
        _close_model(model)

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lag_seconds", "correct_class_confidence"])
        for lag, conf in report.curve():
            writer.writerow([lag, conf])

    verdict = "true" if report.passed else "false"
    print(
        f"adjust-free: {verdict} (max confidence {report.max_confidence:.4f}, "
        f"threshold {report.threshold}, {len(report.lags)} lags) -> {args.out}"
    )
    return 0


def cmd_select(args) -> int:
    summary = load_front(args.front)
    if not summary.entries:
        raise ValueError("front is empty; nothing to select")
    entries = summary.entries
    if args.strategy == "min-f1":
        chosen = min(range(len(entries)), key=lambda i: entries[i].objectives["f1"])
    elif args.strategy == "min-f1f2":
        chosen = min(
            range(len(entries)),
            key=lambda i: entries[i].objectives["f1"] + entries[i].objectives["f2"],
        )
    else:
        chosen = knee_index(project_front(entries, ("f1", "f2")))
    entry = entries[chosen]
    print(json.dumps({"objectives": entry.objectives, "wav": entry.wav}, sort_keys=True))
    return 0


def cmd_corpus(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = tuple(args.labels.split(",")) if args.labels else DEFAULT_LABELS
    corpus = make_synthetic_corpus(
        labels, duration=args.duration, rate=args.rate, seed=args.seed
    )
    for label, wave in sorted(corpus.items()):
        write_wav(out_dir / f"{label}.wav", wave)
    print(f"wrote {len(corpus)} wav files to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adjfree",
        description="Lag-robust black-box adversarial audio search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_classifier(p):
        p.add_argument(
            "--classifier",
            default="builtin",
            help="builtin (synthetic template surrogate) or cmd:<command> "
            "(external process speaking the JSON line protocol)",
        )
        p.add_argument(
            "--corpus-seed",
            type=int,
            default=0,
            help="seed of the builtin surrogate's template corpus",
        )

    attack = sub.add_parser("attack", help="run the multi-objective attack")
    attack.add_argument("--target", required=True, help="target speech wav (16-bit mono PCM)")
    add_classifier(attack)
    attack.add_argument("--pop", type=int, default=91, help="population / subproblem count")
    attack.add_argument("--gens", type=int, default=2000, help="generations to run")
    attack.add_argument("--tmax", type=float, default=0.5, help="max |lag| in seconds")
    attack.add_argument("--lags", type=int, default=9, help="odd number of schedule lags")
    attack.add_argument("--bound", type=float, default=0.10, help="perturbation box bound")
    attack.add_argument("--seed", type=int, default=0)
    attack.add_argument("--objectives", choices=sorted(OBJECTIVE_CHOICES), default="f1f2f3")
    attack.add_argument("--out", required=True, help="output directory for artifacts")
    attack.add_argument("--max-queries", type=int, default=None, help="classifier query budget")
    attack.add_argument("--resume", default=None, help="checkpoint file to resume from")
    attack.add_argument(
        "--wav-exports",
        type=int,
        default=5,
        help="max knee-adjacent entries exported as wav files",
    )
    attack.set_defaults(func=cmd_attack)

    sweep = sub.add_parser("sweep-lag", help="confidence-vs-lag curve for a perturbation")
    sweep.add_argument("--perturbation", required=True, help="perturbation wav")
    sweep.add_argument("--target", required=True, help="target speech wav")
    add_classifier(sweep)
    sweep.add_argument("--tmax", type=float, default=0.5)
    sweep.add_argument("--dense-lags", type=int, default=41, help="odd number of grid points")
    sweep.add_argument("--threshold", type=float, default=0.49)
    sweep.add_argument("--out", default="curve.csv", help="output csv path")
    sweep.set_defaults(func=cmd_sweep_lag)

    select = sub.add_parser("select", help="pick a representative front entry")
    select.add_argument("--front", required=True, help="front.json path")
    select.add_argument(
        "--strategy", choices=("min-f1", "min-f1f2", "knee"), default="knee"
    )
    select.set_defaults(func=cmd_select)

    corpus = sub.add_parser("corpus", help="write the synthetic corpus as wav files")
    corpus.add_argument("--out", required=True, help="output directory")
    corpus.add_argument("--duration", type=float, default=0.5, help="seconds per clip")
    corpus.add_argument("--rate", type=int, default=8000, help="sample rate in Hz")
    corpus.add_argument("--seed", type=int, default=0)
    corpus.add_argument("--labels", default=None, help="comma-separated label names")
    corpus.set_defaults(func=cmd_corpus)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (WavFormatError, UnsupportedWavError, ClassifierError) as exc:
        log.error("%s", exc)
        return 2
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
