"""Operator command-line entry points.

Every command reads an optional INI config file (section per command, plus
[common] and [arch]); flags override file values, which override defaults.
Each run writes a deterministic run report (config snapshot, seed, input
digests, metrics, artifact digests) into the output directory. Exit codes:
0 success, 2 config error, 3 missing input, 1 anything else.
"""

from __future__ import annotations

import configparser
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path
from typing import Dict, List, Optional

import click

from .data.joins import labeled_clips, stage2_examples
from .data.manifest import load_dataset
from .data.stats import corpus_statistics, write_word_table
from .data.synthetic import generate_synthetic_dataset
from .eval.harness import EvalClip, agreement_from_pairs, evaluate_classifier, evaluate_generative
from .eval.study import RatingStore, SessionStore, study_summary
from .eval.tables import (
    classification_rows_from_reports,
    confusion_lines,
    format_classification_table,
    format_study_table,
    study_rows_from_report,
    write_study_csv,
)
from .labels import Severity
from .model.pipeline import InferencePipeline
from .training.checkpoint import (
    CheckpointManifest,
    file_digest,
    load_stage1_handles,
    load_stage2_handles,
)
from .training.config import ArchConfig, Stage1Config, Stage2Config, config_to_dict
from .training.stage1 import train_stage1
from .training.stage2 import train_stage2


class ConfigError(ValueError):
    pass


class MissingInputError(FileNotFoundError):
    pass


def _read_config(path: Optional[str]) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    if path:
        if not Path(path).exists():
            raise MissingInputError(f"config file not found: {path}")
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}")
    return parser


def _section(parser: configparser.ConfigParser, name: str) -> Dict[str, str]:
    merged: Dict[str, str] = {}
    for sec in ("common", name):
        if parser.has_section(sec):
            merged.update(dict(parser.items(sec)))
    return merged


def _build_dataclass(cls, section: Dict[str, str], overrides: Dict[str, object]):
    kwargs = {}
    names = {f.name: f for f in dataclass_fields(cls)}
    for key, raw in section.items():
        if key not in names:
            continue
        typ = names[key].type
        if "int" in str(typ):
            kwargs[key] = int(raw)
        elif "float" in str(typ) or "number" in str(typ):
            kwargs[key] = float(raw)
        else:
            kwargs[key] = raw
    for key, value in overrides.items():
        if value is not None:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {cls.__name__}: {exc}")


def _arch_from(parser: configparser.ConfigParser) -> ArchConfig:
    if parser.has_section("arch"):
        return ArchConfig.from_dict(dict(parser.items("arch")))
    return ArchConfig()


def _require(path: Optional[str], what: str) -> Path:
    if not path:
        raise MissingInputError(f"{what} is required (flag or config file)")
    p = Path(path)
    if not p.exists():
        raise MissingInputError(f"{what} not found: {p}")
    return p


def write_run_report(
    out_dir: Path,
    command: str,
    seed: Optional[int],
    config: Dict[str, str],
    inputs: Dict[str, str],
    outputs: Dict[str, str],
    metrics: Dict[str, str],
) -> Path:
    """Deterministic report: enough to replay the run (config + seed + digests)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"command={command}"]
    if seed is not None:
        lines.append(f"seed={seed}")
    for title, table in (("config", config), ("inputs", inputs), ("outputs", outputs), ("metrics", metrics)):
        lines.append(f"[{title}]")
        for key in sorted(table):
            lines.append(f"{key}={table[key]}")
    path = out_dir / "run_report.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _run(fn):
    try:
        fn()
    except (ConfigError, configparser.Error) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except (MissingInputError, FileNotFoundError) as exc:
        click.echo(f"missing input: {exc}", err=True)
        sys.exit(3)
    except Exception as exc:  # categorized catch-all: nonzero, named error
        click.echo(f"error [{type(exc).__name__}]: {exc}", err=True)
        sys.exit(1)


@click.group()
def main():
    """Video referee pipeline: training, evaluation, service, and study tooling."""


common_options = [
    click.option("--config", "config_path", type=str, default=None, help="INI config file"),
    click.option("--seed", type=int, default=None, help="random seed (overrides config)"),
    click.option("--out", "out_dir", type=str, default=None, help="output directory"),
    click.option("--device", type=str, default="cpu", help="compute device (cpu)"),
]


def with_common(fn):
    for opt in reversed(common_options):
        fn = opt(fn)
    return fn


@main.command("make-synthetic")
@with_common
@click.option("--clips", "n_clips", type=int, default=256)
@click.option("--frames", "frames_per_clip", type=int, default=8)
@click.option("--size", "frame_size", type=int, default=16)
@click.option("--train-fraction", type=float, default=0.8)
def make_synthetic(config_path, seed, out_dir, device, n_clips, frames_per_clip, frame_size, train_fraction):
    """Generate the pixel-pattern synthetic dataset."""

    def body():
        parser = _read_config(config_path)
        section = _section(parser, "make-synthetic")
        out = Path(out_dir or section.get("out") or "synthetic")
        use_seed = seed if seed is not None else int(section.get("seed", 0))
        manifest = generate_synthetic_dataset(
            out, n_clips=n_clips, frames_per_clip=frames_per_clip,
            frame_size=frame_size, seed=use_seed, train_fraction=train_fraction,
        )
        write_run_report(
            out, "make-synthetic", use_seed,
            {"clips": str(n_clips), "frames_per_clip": str(frames_per_clip),
             "frame_size": str(frame_size), "train_fraction": str(train_fraction)},
            {}, {"manifest": "manifest.csv", "manifest_digest": file_digest(manifest)}, {},
        )
        click.echo(f"wrote {manifest}")

    _run(body)


@main.command("train-stage1")
@with_common
@click.option("--dataset", "dataset_path", type=str, default=None, help="dataset manifest CSV")
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--frames-per-clip", type=int, default=None)
def train_stage1_cmd(config_path, seed, out_dir, device, dataset_path, epochs,
                     learning_rate, batch_size, frames_per_clip):
    """Fine-tune the encoder and classification heads (multi-task)."""

    def body():
        parser = _read_config(config_path)
        section = _section(parser, "train-stage1")
        dataset_file = _require(dataset_path or section.get("dataset"), "dataset manifest")
        out = Path(out_dir or section.get("out") or "runs/stage1")
        cfg = _build_dataclass(Stage1Config, section, {
            "seed": seed, "epochs": epochs, "learning_rate": learning_rate,
            "batch_size": batch_size, "frames_per_clip": frames_per_clip,
        })
        arch = _arch_from(parser)
        clips, _ = load_dataset(dataset_file)
        train = labeled_clips(clips, dataset_file.parent, cfg.frames_per_clip, split="train")
        manifest, history = train_stage1(train, cfg, arch, out)
        write_run_report(
            out, "train-stage1", cfg.seed, config_to_dict(cfg),
            {"dataset_manifest": str(dataset_file), "dataset_digest": file_digest(dataset_file),
             "n_train_clips": str(len(train))},
            {"checkpoint": "manifest.txt",
             "encoder_digest": manifest.digests["encoder"],
             "heads_digest": manifest.digests["heads"]},
            {"steps": str(len(history)),
             "final_loss": f"{history[-1].loss:.6f}" if history else "n/a"},
        )
        click.echo(f"stage-1 checkpoint at {out}")

    _run(body)


@main.command("train-stage2")
@with_common
@click.option("--dataset", "dataset_path", type=str, default=None)
@click.option("--manifest", "stage1_path", type=str, default=None, help="stage-1 checkpoint manifest")
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--trainable-fraction", type=float, default=None)
@click.option("--adapter-rank", type=int, default=None)
@click.option("--base-warmup-steps", type=int, default=None)
def train_stage2_cmd(config_path, seed, out_dir, device, dataset_path, stage1_path, epochs,
                     learning_rate, batch_size, trainable_fraction, adapter_rank, base_warmup_steps):
    """Frozen-encoder alignment: train the projection and LM adapters."""

    def body():
        parser = _read_config(config_path)
        section = _section(parser, "train-stage2")
        dataset_file = _require(dataset_path or section.get("dataset"), "dataset manifest")
        stage1_file = _require(stage1_path or section.get("manifest"), "stage-1 manifest")
        out = Path(out_dir or section.get("out") or "runs/stage2")
        cfg = _build_dataclass(Stage2Config, section, {
            "seed": seed, "epochs": epochs, "learning_rate": learning_rate,
            "batch_size": batch_size, "trainable_fraction": trainable_fraction,
            "adapter_rank": adapter_rank, "base_warmup_steps": base_warmup_steps,
        })
        stage1_manifest = CheckpointManifest.load(stage1_file)
        frames_per_clip = int(stage1_manifest.config.get("stage1.frames_per_clip", "16"))
        clips, triplets = load_dataset(dataset_file)
        examples = stage2_examples(clips, triplets, dataset_file.parent, frames_per_clip, split="train")
        manifest, freeze, history = train_stage2(examples, stage1_manifest, cfg, out)
        (out / "freeze_report.txt").write_text("\n".join(freeze.summary_lines()) + "\n", encoding="utf-8")
        write_run_report(
            out, "train-stage2", cfg.seed, config_to_dict(cfg),
            {"dataset_manifest": str(dataset_file), "dataset_digest": file_digest(dataset_file),
             "stage1_manifest": str(stage1_file), "n_examples": str(len(examples))},
            {"checkpoint": "manifest.txt",
             **{f"{k}_digest": v for k, v in manifest.digests.items()}},
            {"steps": str(len(history)),
             "final_loss": f"{history[-1].loss:.6f}" if history else "n/a",
             "trainable_fraction": f"{freeze.fraction:.6f}",
             "adapter_layers": str(freeze.adapter_layer_count),
             "adapter_parameters": str(freeze.adapter_parameter_count)},
        )
        click.echo(f"stage-2 checkpoint at {out}")

    _run(body)


def _load_eval_clips(dataset_file: Path, frames_per_clip: int, split: str) -> List[EvalClip]:
    clips, _ = load_dataset(dataset_file)
    labeled = labeled_clips(clips, dataset_file.parent, frames_per_clip, split=split)
    return [EvalClip(clip=lc.clip, gt_foul=lc.foul, gt_severity=lc.severity) for lc in labeled]


@main.command("eval-classify")
@with_common
@click.option("--dataset", "dataset_path", type=str, default=None)
@click.option("--manifest", "manifest_path", type=str, default=None)
@click.option("--split", type=click.Choice(["train", "test"]), default="test")
def eval_classify(config_path, seed, out_dir, device, dataset_path, manifest_path, split):
    """Classification metrics (accuracy / balanced accuracy per task)."""

    def body():
        parser = _read_config(config_path)
        section = _section(parser, "eval-classify")
        dataset_file = _require(dataset_path or section.get("dataset"), "dataset manifest")
        manifest_file = _require(manifest_path or section.get("manifest"), "checkpoint manifest")
        out = Path(out_dir or section.get("out") or "runs/eval-classify")
        manifest = CheckpointManifest.load(manifest_file)
        frames_per_clip = int(manifest.config.get("stage1.frames_per_clip", "16"))
        if manifest.stage == 2:
            encoder, heads, _, _ = load_stage2_handles(manifest)
        else:
            encoder, heads = load_stage1_handles(manifest)
        pipeline = InferencePipeline(encoder, heads)
        eval_clips = _load_eval_clips(dataset_file, frames_per_clip, split)
        foul_report, severity_report = evaluate_classifier(pipeline.classify_clip, eval_clips)
        table = format_classification_table([
            classification_rows_from_reports("Encoder heads", "Single-view", foul_report, severity_report),
        ])
        out.mkdir(parents=True, exist_ok=True)
        (out / "classification_table.txt").write_text(table, encoding="utf-8")
        detail = confusion_lines(foul_report) + [""] + confusion_lines(severity_report)
        (out / "confusions.txt").write_text("\n".join(detail) + "\n", encoding="utf-8")
        write_run_report(
            out, "eval-classify", seed, {"split": split},
            {"dataset_manifest": str(dataset_file), "dataset_digest": file_digest(dataset_file),
             "checkpoint": str(manifest_file)},
            {"table": "classification_table.txt"},
            {"foul_accuracy": f"{foul_report.accuracy:.4f}",
             "foul_balanced_accuracy": f"{foul_report.balanced_accuracy:.4f}",
             "severity_accuracy": f"{severity_report.accuracy:.4f}",
             "severity_balanced_accuracy": f"{severity_report.balanced_accuracy:.4f}",
             "n_evaluated": str(foul_report.n_evaluated)},
        )
        click.echo(table)

    _run(body)


@main.command("eval-generate")
@with_common
@click.option("--dataset", "dataset_path", type=str, default=None)
@click.option("--manifest", "manifest_path", type=str, default=None)
@click.option("--split", type=click.Choice(["train", "test"]), default="test")
@click.option("--question", type=str, default="What card would you give? Why?")
@click.option("--max-new-tokens", type=int, default=64)
@click.option("--no-predictions", is_flag=True, default=False,
              help="ablation: assemble prompts without the prediction label text")
def eval_generate(config_path, seed, out_dir, device, dataset_path, manifest_path, split,
                  question, max_new_tokens, no_predictions):
    """Generate answers, extract severities, and score against ground truth."""

    def body():
        parser = _read_config(config_path)
        section = _section(parser, "eval-generate")
        dataset_file = _require(dataset_path or section.get("dataset"), "dataset manifest")
        manifest_file = _require(manifest_path or section.get("manifest"), "checkpoint manifest")
        out = Path(out_dir or section.get("out") or "runs/eval-generate")
        manifest = CheckpointManifest.load(manifest_file)
        if manifest.stage != 2:
            raise ConfigError("eval-generate needs a stage-2 checkpoint")
        frames_per_clip = int(manifest.config.get("stage1.frames_per_clip", "16"))
        encoder, heads, projection, lm = load_stage2_handles(manifest)
        pipeline = InferencePipeline(encoder, heads, projection, lm,
                                     include_predictions=not no_predictions)
        eval_clips = _load_eval_clips(dataset_file, frames_per_clip, split)
        evaluation = evaluate_generative(pipeline, eval_clips, question=question,
                                         max_new_tokens=max_new_tokens)
        out.mkdir(parents=True, exist_ok=True)
        _write_generation_records(out / "records.csv", evaluation.records)
        report = evaluation.report
        write_run_report(
            out, "eval-generate", seed,
            {"split": split, "question": question, "max_new_tokens": str(max_new_tokens),
             "include_predictions": str(not no_predictions)},
            {"dataset_manifest": str(dataset_file), "dataset_digest": file_digest(dataset_file),
             "checkpoint": str(manifest_file)},
            {"records": "records.csv"},
            {"severity_accuracy": f"{report.accuracy:.4f}",
             "severity_balanced_accuracy": f"{report.balanced_accuracy:.4f}",
             "n_evaluated": str(report.n_evaluated),
             "n_extraction_failures": str(report.n_extraction_failures),
             "n_attempted": str(report.n_attempted),
             "foul_type_coverage": f"{evaluation.foul_type_coverage:.4f}"},
        )
        click.echo(
            f"severity accuracy {report.accuracy:.4f} over {report.n_evaluated} extracted "
            f"({report.n_extraction_failures} failures of {report.n_attempted} attempted)"
        )

    _run(body)


def _write_generation_records(path: Path, records) -> None:
    import csv

    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_id", "answer", "extracted_severity", "injected_severity", "gt_severity", "error"])
        for r in records:
            writer.writerow([
                r.clip_id, r.answer,
                r.extracted_severity.display if r.extracted_severity else "",
                r.injected_severity.display if r.injected_severity else "",
                r.gt_severity.display, r.error or "",
            ])


@main.command("agreement")
@with_common
@click.option("--records", "records_path", type=str, default=None,
              help="records.csv produced by eval-generate")
def agreement_cmd(config_path, seed, out_dir, device, records_path):
    """Agreement between generated-text severity and the injected predictions."""

    def body():
        import csv

        parser = _read_config(config_path)
        section = _section(parser, "agreement")
        records_file = _require(records_path or section.get("records"), "records file")
        out = Path(out_dir or section.get("out") or "runs/agreement")
        extracted, injected = [], []
        with records_file.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if not row["injected_severity"]:
                    continue
                ext = Severity.from_display(row["extracted_severity"]) if row["extracted_severity"] else None
                extracted.append((row["clip_id"], ext))
                injected.append((row["clip_id"], Severity.from_display(row["injected_severity"])))
        report = agreement_from_pairs(extracted, injected)
        out.mkdir(parents=True, exist_ok=True)
        lines = [
            f"clips_attempted={report.n_pairs}",
            f"clips_extracted={report.n_extracted}",
            f"agreements={report.n_agree}",
            f"agreement_rate_over_extracted={report.rate:.4f}",
            "disagreements:",
        ] + [f"  {cid}: injected={inj} extracted={ext}" for cid, inj, ext in report.disagreements]
        (out / "agreement.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        write_run_report(
            out, "agreement", seed, {},
            {"records": str(records_file), "records_digest": file_digest(records_file)},
            {"report": "agreement.txt"},
            {"agreement_rate": f"{report.rate:.4f}", "n_extracted": str(report.n_extracted),
             "n_pairs": str(report.n_pairs)},
        )
        click.echo(f"agreement {report.rate:.4f} over {report.n_extracted} extracted clips")

    _run(body)


@main.command("stats")
@with_common
@click.option("--dataset", "dataset_path", type=str, default=None)
@click.option("--top-k", type=int, default=30)
def stats_cmd(config_path, seed, out_dir, device, dataset_path, top_k):
    """Corpus statistics over the referee answers."""

    def body():
        parser = _read_config(config_path)
        section = _section(parser, "stats")
        dataset_file = _require(dataset_path or section.get("dataset"), "dataset manifest")
        out = Path(out_dir or section.get("out") or "runs/stats")
        _, triplets = load_dataset(dataset_file)
        stats = corpus_statistics(triplets)
        out.mkdir(parents=True, exist_ok=True)
        write_word_table(stats, out / "word_frequencies.csv", top_k=top_k)
        write_run_report(
            out, "stats", seed, {"top_k": str(top_k)},
            {"dataset_manifest": str(dataset_file), "dataset_digest": file_digest(dataset_file)},
            {"word_table": "word_frequencies.csv"},
            {"total_answers": str(stats.total_answers),
             "total_words": str(stats.total_words),
             "mean_words_per_answer": f"{stats.mean_words_per_answer:.4f}",
             "min_words": str(stats.min_words),
             "max_words": str(stats.max_words),
             "answers_per_action_mean": f"{stats.answers_per_action_mean:.4f}"},
        )
        click.echo(
            f"{stats.total_answers} answers, {stats.total_words} words, "
            f"mean {stats.mean_words_per_answer:.1f} words/answer"
        )

    _run(body)


@main.command("chat")
@with_common
@click.option("--dataset", "dataset_path", type=str, default=None)
@click.option("--manifest", "manifest_path", type=str, default=None)
@click.option("--clip", "clip_id", type=str, default=None)
@click.option("--max-new-tokens", type=int, default=64)
def chat_cmd(config_path, seed, out_dir, device, dataset_path, manifest_path, clip_id, max_new_tokens):
    """Terminal chat: /clip <id> selects a clip, plain text asks, /quit exits."""

    def body():
        from .model.lm import generate_answer
        from .model.prompt import append_answer, append_follow_up

        parser = _read_config(config_path)
        section = _section(parser, "chat")
        dataset_file = _require(dataset_path or section.get("dataset"), "dataset manifest")
        manifest_file = _require(manifest_path or section.get("manifest"), "checkpoint manifest")
        manifest = CheckpointManifest.load(manifest_file)
        if manifest.stage != 2:
            raise ConfigError("chat needs a stage-2 checkpoint")
        frames_per_clip = int(manifest.config.get("stage1.frames_per_clip", "16"))
        encoder, heads, projection, lm = load_stage2_handles(manifest)
        pipeline = InferencePipeline(encoder, heads, projection, lm)
        clips, _ = load_dataset(dataset_file)
        by_id = {c.clip_id: c for c in clips}

        state = {"prompt": None, "visual": None, "bundle": None, "clip": None}

        def select(cid):
            if cid not in by_id:
                click.echo(f"unknown clip {cid!r}")
                return
            from .data.sampling import sample_frames

            clip = sample_frames(by_id[cid], frames_per_clip, dataset_file.parent)
            visual, bundle = pipeline.encode_clip(clip)
            state.update(prompt=None, visual=visual, bundle=bundle, clip=clip)
            click.echo(
                f"clip {cid}: predicted {bundle.predicted_foul.display} / "
                f"{bundle.predicted_severity.display}"
            )

        if clip_id:
            select(clip_id)
        click.echo("commands: /clip <id>, /quit")
        for line in sys.stdin:
            text = line.strip()
            if not text:
                continue
            if text == "/quit":
                break
            if text.startswith("/clip "):
                select(text.split(maxsplit=1)[1])
                continue
            if state["visual"] is None:
                click.echo("select a clip first: /clip <id>")
                continue
            if state["prompt"] is None:
                state["prompt"] = pipeline.build_prompt(text, state["visual"], state["bundle"])
            else:
                append_follow_up(state["prompt"], text, lm.tokenizer)
            answer = generate_answer(state["prompt"], lm, max_new_tokens=max_new_tokens)
            append_answer(state["prompt"], answer, lm.tokenizer)
            click.echo(f"assistant: {answer}")

    _run(body)


@main.command("serve")
@with_common
@click.option("--port", type=int, default=None)
@click.option("--manifest", "manifest_path", type=str, default=None)
@click.option("--dataset", "dataset_path", type=str, default=None)
def serve_cmd(config_path, seed, out_dir, device, port, manifest_path, dataset_path):
    """Run the HTTP service."""

    def body():
        import uvicorn

        from .service.app import create_app
        from .service.config import load_service_config
        from .service.state import AppState

        cfg = load_service_config(Path(config_path) if config_path else None)
        if port is not None:
            cfg.port = port
        if manifest_path is not None:
            cfg.model_manifest = Path(manifest_path)
        if dataset_path is not None:
            cfg.dataset_manifest = Path(dataset_path)
        app = create_app(AppState(cfg))
        uvicorn.run(app, host="127.0.0.1", port=cfg.port, log_level="warning")

    _run(body)


@main.command("study-export")
@with_common
@click.option("--stores", "stores_dir", type=str, default=None, help="service stores directory")
def study_export(config_path, seed, out_dir, device, stores_dir):
    """Export the study summary table and the per-source distributions."""

    def body():
        parser = _read_config(config_path)
        section = _section(parser, "study-export")
        stores = _require(stores_dir or section.get("stores"), "stores directory")
        out = Path(out_dir or section.get("out") or "runs/study")
        sessions = SessionStore(stores / "study_sessions.json").load()
        ratings = RatingStore(stores / "ratings.jsonl").load()
        if not sessions:
            raise MissingInputError(f"no study sessions found under {stores}")
        report = study_summary(ratings, sessions)
        rows = study_rows_from_report(report)
        out.mkdir(parents=True, exist_ok=True)
        table = format_study_table(rows, footer=report.rounding_note)
        (out / "study_table.txt").write_text(table, encoding="utf-8")
        write_study_csv(rows, out / "study_summary.csv")
        write_run_report(
            out, "study-export", seed, {},
            {"stores": str(stores)},
            {"table": "study_table.txt", "summary": "study_summary.csv"},
            {"n_ratings": str(len(ratings)),
             "model_outscored_fraction": f"{report.model_outscored_fraction:.4f}",
             "n_paired_clips": str(report.n_paired_clips)},
        )
        click.echo(table)

    _run(body)


if __name__ == "__main__":
    main()
