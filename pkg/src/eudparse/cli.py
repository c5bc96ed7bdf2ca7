"""Command-line entry points.

Commands: ``train``, ``parse``, ``eval``, ``repair``, ``concat`` and
``baseline-copy``. Every command that writes an output file also writes a
``<output>.manifest`` recording the command line, the effective
configuration, input checksums and per-stage statistics, so runs can be
audited and reproduced. Exit codes: 0 success, 1 runtime failure, 2
configuration error, 3 data-alignment error.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import ConfigError, build_settings, config_snapshot, load_config
from .conllu import (ConlluError, iter_blocks, parse_sentence as parse_block, read_conllu,
                     sentence_lines, write_conllu_file)
from .decoding import connect_graph, copy_tree_to_enhanced
from .evaluation import AlignmentError, evaluate, format_report, report_key_values
from .graph import GraphError, from_graph, to_graph
from .pipeline import ParseStats, parse_sentence
from .report import (render_eval_summary, render_training_curves, write_history_tsv,
                     write_per_sentence_tsv)
from .training import (CheckpointError, TrainingError, concat_treebanks, load_checkpoint,
                       save_checkpoint, train)

logger = logging.getLogger(__name__)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(output: Path, command: str, argv: Sequence[str], inputs: Sequence[Path],
                   snapshot: Optional[dict] = None, seed: Optional[int] = None,
                   stats: Optional[dict] = None, started: Optional[float] = None) -> Path:
    lines = [
        f"command={command}",
        "argv=" + " ".join(argv),
        f"version={__version__}",
    ]
    if seed is not None:
        lines.append(f"seed={seed}")
    if started is not None:
        lines.append(f"wall_clock_sec={time.monotonic() - started:.3f}")
    for key, value in (snapshot or {}).items():
        lines.append(f"config.{key}={value}")
    for path in inputs:
        lines.append(f"input.{path.name}.sha256={_sha256(path)}")
    for key, value in (stats or {}).items():
        lines.append(f"stat.{key}={value}")
    manifest_path = Path(str(output) + ".manifest")
    manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest_path


def cmd_train(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    overrides = {}
    if args.seed is not None:
        overrides["training.seed"] = args.seed
    if args.loss_interpolation is not None:
        overrides["model.loss_interpolation"] = args.loss_interpolation
    if args.mtl:
        overrides["model.mtl_enabled"] = True
    if args.coarse:
        overrides["training.dev_metric"] = "coarse"
    hp, config = build_settings(load_config(args.config), overrides)
    train_paths = [Path(p) for p in args.train]
    treebanks = [read_conllu(p) for p in train_paths]
    names = [p.stem for p in train_paths]
    if len(treebanks) > 1:
        train_data = concat_treebanks(treebanks, names)
    else:
        train_data = treebanks[0]
    dev_data = read_conllu(args.dev)
    checkpoint = train(train_data, dev_data, hp, config)
    out = Path(args.out)
    save_checkpoint(checkpoint, out)
    write_history_tsv(checkpoint.history, Path(str(out) + ".history.tsv"))
    render_training_curves(checkpoint.history, Path(str(out) + ".curves.png"))
    best = checkpoint.history[checkpoint.epoch]
    write_manifest(
        out, "train", argv, train_paths + [Path(args.dev)],
        snapshot=config_snapshot(hp, config), seed=config.seed, started=started,
        stats={
            "concat_order": ",".join(names),
            "epochs_run": len(checkpoint.history),
            "best_epoch": checkpoint.epoch,
            "best_dev_elas_exact": f"{best['dev_elas_exact']:.4f}",
            "best_dev_elas_coarse": f"{best['dev_elas_coarse']:.4f}",
        })
    print(f"saved checkpoint to {out} (best epoch {checkpoint.epoch}, "
          f"dev ELAS {best['dev_elas_exact']:.4f})")
    return 0


def cmd_parse(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    checkpoint = load_checkpoint(args.checkpoint)
    model = checkpoint.build_model()
    threshold = args.threshold if args.threshold is not None else model.hp.edge_threshold
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"edge threshold {threshold} outside (0, 1)")
    input_path = Path(args.input)
    text = input_path.read_text(encoding="utf-8")
    stats = ParseStats()
    chunks = []
    for start_line, block in iter_blocks(text.splitlines()):
        try:
            sentence = parse_block(block, start_line)
            parsed, sentence_stats = parse_sentence(model, sentence, threshold)
            rendered = "\n".join(sentence_lines(parsed)) + "\n\n"
        except (ConlluError, GraphError) as exc:
            logger.warning("copying sentence at line %d through unchanged: %s", start_line, exc)
            stats.skipped += 1
            chunks.append("\n".join(block) + "\n\n")
            continue
        stats.merge(sentence_stats)
        chunks.append(rendered)
    out = Path(args.out)
    out.write_text("".join(chunks), encoding="utf-8")
    write_manifest(
        out, "parse", argv, [Path(args.checkpoint), input_path],
        snapshot=config_snapshot(model.hp, checkpoint.train_config),
        seed=checkpoint.train_config.seed, started=started,
        stats={
            "sentences": stats.sentences,
            "fallback_heads": stats.fallback_heads,
            "repair_edges": stats.repair_edges,
            "skipped": stats.skipped,
            "threshold": threshold,
        })
    print(f"parsed {stats.sentences} sentence(s) to {out} "
          f"({stats.fallback_heads} fallback heads, {stats.repair_edges} repair edges, "
          f"{stats.skipped} skipped)")
    return 0


def cmd_eval(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    gold = read_conllu(args.gold)
    system = read_conllu(args.system)
    report = evaluate(gold, system)
    print(format_report(report, coarse_only=args.coarse))
    print()
    for line in report_key_values(report):
        print(line)
    if args.report_dir:
        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        metrics_path = report_dir / "metrics.tsv"
        metrics_path.write_text("\n".join(report_key_values(report)) + "\n", encoding="utf-8")
        write_per_sentence_tsv(report, report_dir / "per_sentence.tsv")
        render_eval_summary(report, report_dir / "eval_summary.png")
        write_manifest(metrics_path, "eval", argv, [Path(args.gold), Path(args.system)],
                       started=started, stats={"sentences": len(gold)})
    return 0


def cmd_repair(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    sentences = read_conllu(args.input)
    repaired = []
    added = 0
    for sentence in sentences:
        decoded = connect_graph(to_graph(sentence))
        added += len(decoded.added_root_edges)
        repaired.append(from_graph(decoded.graph, sentence))
    out = Path(args.out)
    write_conllu_file(repaired, out)
    write_manifest(out, "repair", argv, [Path(args.input)], started=started,
                   stats={"sentences": len(sentences), "repair_edges": added})
    print(f"repaired {len(sentences)} sentence(s), added {added} root edge(s)")
    return 0


def cmd_concat(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    paths = [Path(p) for p in args.inputs]
    names = [p.stem for p in paths]
    combined = concat_treebanks([read_conllu(p) for p in paths], names)
    out = Path(args.out)
    write_conllu_file(combined, out)
    write_manifest(out, "concat", argv, paths, started=started,
                   stats={"concat_order": ",".join(names), "sentences": len(combined)})
    print(f"wrote {len(combined)} sentence(s) to {out}")
    return 0


def cmd_baseline_copy(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    sentences = read_conllu(args.input)
    copied = [from_graph(copy_tree_to_enhanced(s), s) for s in sentences]
    out = Path(args.out)
    write_conllu_file(copied, out)
    write_manifest(out, "baseline-copy", argv, [Path(args.input)], started=started,
                   stats={"sentences": len(sentences)})
    print(f"copied basic trees of {len(sentences)} sentence(s) to {out}")
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eudparse",
                                     description="Train, run, repair and evaluate enhanced-dependency graph parsers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a parser on CoNLL-U treebanks")
    p_train.add_argument("train", nargs="+", help="training treebank(s); several are concatenated")
    p_train.add_argument("--dev", required=True, help="development treebank for model selection")
    p_train.add_argument("--out", required=True, help="checkpoint output path")
    p_train.add_argument("--config", help="key-value configuration file")
    p_train.add_argument("--seed", type=int, help="override training.seed")
    p_train.add_argument("--lambda", dest="loss_interpolation", type=float,
                         help="override model.loss_interpolation")
    p_train.add_argument("--mtl", action="store_true", help="enable the joint basic-tree head")
    p_train.add_argument("--coarse", action="store_true", help="select on coarse instead of exact dev ELAS")
    p_train.set_defaults(func=cmd_train)

    p_parse = sub.add_parser("parse", help="parse a CoNLL-U file with a trained model")
    p_parse.add_argument("input", help="tokenized CoNLL-U input")
    p_parse.add_argument("--checkpoint", required=True)
    p_parse.add_argument("--out", required=True)
    p_parse.add_argument("--threshold", type=float, help="override the edge prediction threshold")
    p_parse.set_defaults(func=cmd_parse)

    p_eval = sub.add_parser("eval", help="score a system file against gold")
    p_eval.add_argument("gold")
    p_eval.add_argument("system")
    p_eval.add_argument("--coarse", action="store_true", help="show only coarse ELAS in the table")
    p_eval.add_argument("--report-dir", help="write metrics TSVs and figures into this directory")
    p_eval.set_defaults(func=cmd_eval)

    p_repair = sub.add_parser("repair", help="make every sentence graph reachable from ROOT")
    p_repair.add_argument("input")
    p_repair.add_argument("--out", required=True)
    p_repair.set_defaults(func=cmd_repair)

    p_concat = sub.add_parser("concat", help="concatenate treebanks with provenance comments")
    p_concat.add_argument("inputs", nargs="+")
    p_concat.add_argument("--out", required=True)
    p_concat.set_defaults(func=cmd_concat)

    p_base = sub.add_parser("baseline-copy", help="copy basic trees into the DEPS column")
    p_base.add_argument("input")
    p_base.add_argument("--out", required=True)
    p_base.set_defaults(func=cmd_baseline_copy)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    level = os.environ.get("EUDPARSE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except AlignmentError as exc:
        print(f"alignment error: {exc}", file=sys.stderr)
        return 3
    except (ConlluError, GraphError, TrainingError, CheckpointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
