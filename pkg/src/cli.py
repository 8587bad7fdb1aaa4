"""
Command-line interface.

Subcommands:
    check      verify one (code, summary) pair
    evaluate   run the pipeline over an annotated dataset and score it
    generate   produce summaries for code snippets with each configured model
    ner-eval   compare predicted summary entities with reference entities
    stats      dataset statistics, optionally with inter-annotator kappa
    convert    turn a tuple-per-row export into dataset JSONL

Exit codes: 0 NOT_HALLUCINATED (or success), 1 HALLUCINATED,
2 INDETERMINATE, 3 operational error, 4 usage error.
"""

import argparse
import asyncio
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .backend_manager import BackendManager
from .config import RunConfig, load_config, load_environment
from .constants import INSTANCE_EXIT_CODES, ExitCode, NerSource, RunMode
from .dataset import (
    convert_upstream,
    dataset_statistics,
    dump_jsonl_line,
    find_record,
    iter_jsonl,
    load_code_units,
    load_dataset,
    load_summaries,
    write_jsonl,
)
from .errors import ConfigurationError, EtfError, InputDecodeError
from .log_sanitizer import safe_log_error
from .metrics import (
    aligned_entity_labels,
    cohen_kappa,
    corpus_stats,
    direct_entity_predictions,
    entity_gold,
    entity_level_metrics,
    entity_predictions,
    instance_gold,
    instance_level_metrics,
    instance_metrics_by_model,
    ner_eval_corpus,
)
from .models import SourceUnit, Summary
from .pipeline import EntityTracingPipeline, run_records, taxonomy_hint
from .reports import (
    corpus_table,
    metrics_table,
    ner_table,
    report_json,
    report_text,
    reports_jsonl,
    statistics_table,
    to_json,
)
from .summary_ner import normalize_tag

logger = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors exit with USAGE_ERROR instead of 2."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(ExitCode.USAGE_ERROR, f"{self.prog}: error: {message}\n")


# ============================================================================
# Helpers
# ============================================================================

def _read_text(path: Path) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except UnicodeDecodeError as e:
        raise InputDecodeError(path, "not UTF-8 text", original_error=e)


def _emit(text: str, path: Optional[Path]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.info(f"Wrote {path}")


def build_config(args: argparse.Namespace, uses_backends: bool = True) -> RunConfig:
    """
    Load the config file and apply command-line overrides.

    Raises:
        ConfigurationError: If the merged configuration cannot run
    """
    config = load_config(getattr(args, "config", None))
    fixtures_dir = getattr(args, "fixtures_dir", None)
    config = config.with_overrides(
        mode=getattr(args, "mode", None),
        fixtures_dir=Path(fixtures_dir) if fixtures_dir else None,
        threshold=getattr(args, "threshold", None),
        count_extrinsic=getattr(args, "count_extrinsic", None),
        lenient_case=getattr(args, "lenient_case", None),
        macro_average=getattr(args, "macro_average", None),
        direct=getattr(args, "direct", None),
        ner=getattr(args, "ner", None),
        format=getattr(args, "format", None),
        output=getattr(args, "out", None),
        strict=False if getattr(args, "lenient", False) else None,
    )
    return config.validate(require_backends=uses_backends)


def _pipeline(manager: BackendManager, config: RunConfig) -> EntityTracingPipeline:
    return EntityTracingPipeline(manager.extractor(), manager.judge(), config.pipeline)


# ============================================================================
# Subcommands
# ============================================================================

async def cmd_check(args: argparse.Namespace, config: RunConfig) -> int:
    """Verify one pair; the exit code carries the instance label."""
    code_text = _read_text(Path(args.code))
    summary_text = _read_text(Path(args.summary))

    records = []
    unit_id = args.id or Path(args.summary).stem
    if config.mode == RunMode.ORACLE or config.ner == NerSource.GOLD:
        if not args.dataset or not args.id:
            raise ConfigurationError("Oracle mode requires --dataset and --id")
        records = load_dataset(args.dataset, strict=config.strict)
        if find_record(records, args.id) is None:
            raise ConfigurationError(f"Record '{args.id}' not found in {args.dataset}")

    record = find_record(records, unit_id) if records else None
    manager = BackendManager(config, records=records)
    try:
        pipeline = _pipeline(manager, config)
        code = SourceUnit(text=code_text, id=unit_id)
        summary = Summary(
            text=summary_text,
            id=unit_id,
            source_model=record.source_model if record else None,
        )
        hint = taxonomy_hint(record) if record else None
        if config.direct:
            report = await pipeline.direct(code, summary, hint)
        else:
            report = await pipeline.check(code, summary, hint)
    finally:
        await manager.aclose()

    if config.format == "text":
        _emit(report_text(report, summary_text), config.output)
    else:
        _emit(report_json(report), config.output)
    return INSTANCE_EXIT_CODES[report.instance_label]


async def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> int:
    """Run over a dataset and write reports plus metrics."""
    records = load_dataset(args.dataset, strict=config.strict)
    manager = BackendManager(config, records=records)
    try:
        pipeline = _pipeline(manager, config)
        batch = await run_records(
            pipeline,
            records,
            direct=config.direct,
            max_concurrent=config.pipeline.max_concurrent_records,
        )
        stats = manager.get_statistics()
    finally:
        await manager.aclose()

    name = "Direct" if config.direct else "ETF"
    reports = batch.reports
    gold_entities = entity_gold(records)
    if config.direct:
        entity_preds = direct_entity_predictions(reports, gold_entities)
    else:
        entity_preds = entity_predictions(reports)

    entity = entity_level_metrics(
        entity_preds,
        gold_entities,
        name=name,
        macro_average=config.pipeline.macro_average,
        strict=config.ner == NerSource.GOLD,
    )
    instance = instance_level_metrics(
        {r.unit_id: r.instance_label.value for r in reports},
        instance_gold(records),
        name=name,
        macro_average=config.pipeline.macro_average,
    )
    per_model = instance_metrics_by_model(
        reports, records, name=name, macro_average=config.pipeline.macro_average
    )

    corpus = None
    traced = [t for t in batch.traces if t.match is not None]
    summaries = {r.id: r.summary_obj() for r in records}
    if traced:
        corpus = corpus_stats(
            [summaries[t.report.unit_id] for t in traced],
            [t.match for t in traced],
            [len(t.code_entities) for t in traced],
            [len(t.filtration.fabricated) for t in traced],
        )

    metrics = {
        "method": name,
        "records": len(records),
        "failures": batch.failures,
        "entity_level": entity.to_dict(),
        "instance_level": instance.to_dict(),
        "instance_level_by_model": {m: b.to_dict() for m, b in per_model.items()},
        "corpus": corpus.to_dict() if corpus else None,
    }
    table = metrics_table([entity, instance, *per_model.values()])
    if corpus:
        table += "\n" + corpus_table(corpus)

    logger.info(f"Backend usage: {stats}")
    if config.output is not None:
        out_dir = config.output
        out_dir.mkdir(parents=True, exist_ok=True)
        _emit(reports_jsonl(reports), out_dir / "reports.jsonl")
        _emit(to_json(metrics), out_dir / "metrics.json")
        _emit(table, out_dir / "metrics.txt")
    else:
        _emit(table if config.format == "text" else to_json(metrics), None)

    if batch.failures and not batch.traces:
        return ExitCode.OPERATIONAL_ERROR
    return ExitCode.NOT_HALLUCINATED


async def cmd_generate(args: argparse.Namespace, config: RunConfig) -> int:
    """
    Summarize every code unit with every configured generator.

    Rows already present in the output file are kept and not regenerated;
    each new summary is appended as soon as it arrives.
    """
    if config.output is None:
        raise ConfigurationError("generate requires --out")

    units = load_code_units(args.codes)
    done = load_summaries(config.output)
    manager = BackendManager(config)
    failed = 0
    created = 0
    try:
        generators = manager.generators()
        config.output.parent.mkdir(parents=True, exist_ok=True)
        with open(config.output, "a", encoding="utf-8", newline="\n") as handle:
            for unit in units:
                for generator in generators:
                    if (unit.id, str(generator.source_model)) in done:
                        continue
                    try:
                        summary = await generator.generate_summary(unit)
                    except EtfError as e:
                        failed += 1
                        logger.warning(safe_log_error(e, f"Generation failed for '{unit.id}'"))
                        continue
                    handle.write(dump_jsonl_line({
                        "id": summary.id,
                        "source_model": summary.source_model,
                        "summary": summary.text,
                    }))
                    handle.flush()
                    created += 1
    finally:
        await manager.aclose()

    logger.info(f"Generated {created} summaries ({len(done)} already present, {failed} failed)")
    return ExitCode.OPERATIONAL_ERROR if failed else ExitCode.NOT_HALLUCINATED


def _entity_rows(path: Path) -> Tuple[Dict[str, List[Tuple[str, str]]], Dict[str, str], Dict[str, int]]:
    """
    Entities per record id from a prediction or reference file.

    Lines carry ``entities`` (or a dataset's ``gold_entities``) as objects
    with ``surface``/``name`` and ``tag``, and optionally ``source_model``
    and a ``fabricated`` list.
    """
    entities: Dict[str, List[Tuple[str, str]]] = {}
    models: Dict[str, str] = {}
    fabricated: Dict[str, int] = {}
    for number, row in iter_jsonl(path):
        record_id = str(row.get("id"))
        items = row.get("entities", row.get("gold_entities", []))
        pairs = []
        for item in items:
            surface = item.get("surface", item.get("name", ""))
            tag = normalize_tag(str(item.get("tag", "")))
            if tag is None:
                logger.warning(f"{path}:{number}: unknown tag '{item.get('tag')}' for '{surface}'")
                continue
            pairs.append((surface, tag.value))
        entities[record_id] = pairs
        if row.get("source_model"):
            models[record_id] = str(row["source_model"])
        if "fabricated" in row:
            fabricated[record_id] = len(row["fabricated"])
    return entities, models, fabricated


async def cmd_ner_eval(args: argparse.Namespace, config: RunConfig) -> int:
    pred, pred_models, fabricated = _entity_rows(Path(args.pred))
    gold, gold_models, _ = _entity_rows(Path(args.gold))
    models = {**pred_models, **gold_models}

    groups: Dict[str, List[str]] = defaultdict(list)
    for record_id in gold:
        groups[models.get(record_id, "all")].append(record_id)

    scores = {}
    fabricated_pct = {}
    for model in sorted(groups):
        ids = groups[model]
        scores[model], _ = ner_eval_corpus(
            {k: pred[k] for k in ids if k in pred}, {k: gold[k] for k in ids}
        )
        if fabricated:
            kept = sum(len(pred.get(k, [])) for k in ids)
            dropped = sum(fabricated.get(k, 0) for k in ids)
            fabricated_pct[model] = round(dropped / (kept + dropped) * 100, 2) if kept + dropped else 0.0

    overall, mismatched = ner_eval_corpus(pred, gold)
    scores["overall"] = overall
    for record_id in mismatched:
        logger.warning(f"Record '{record_id}' present in only one of the two files")

    if config.format == "text":
        _emit(ner_table(scores, fabricated_pct), config.output)
    else:
        _emit(to_json({
            "scores": {m: {"jaccard": s.jaccard, "type_f1": s.type_f1} for m, s in scores.items()},
            "fabricated_pct": fabricated_pct,
            "mismatched_ids": mismatched,
        }), config.output)
    return ExitCode.NOT_HALLUCINATED


async def cmd_stats(args: argparse.Namespace, config: RunConfig) -> int:
    records = load_dataset(args.dataset, strict=config.strict)
    stats = dataset_statistics(records)
    if args.against:
        other = load_dataset(args.against, strict=config.strict)
        labels_a, labels_b = aligned_entity_labels(records, other)
        stats["kappa"] = cohen_kappa(labels_a, labels_b)

    _emit(statistics_table(stats) if config.format == "text" else to_json(stats), config.output)
    return ExitCode.NOT_HALLUCINATED


async def cmd_convert(args: argparse.Namespace, config: RunConfig) -> int:
    source = Path(args.input)
    if source.suffix == ".json":
        try:
            rows = json.loads(_read_text(source))
        except json.JSONDecodeError as e:
            raise InputDecodeError(source, f"invalid JSON: {e}", original_error=e)
        if not isinstance(rows, list):
            raise ConfigurationError(f"{source} must hold a JSON list of rows")
    else:
        rows = [row for _, row in iter_jsonl(source)]

    records = convert_upstream(rows)
    if config.output is None:
        sys.stdout.write("".join(dump_jsonl_line(r.to_dict()) for r in records))
    else:
        write_jsonl(config.output, (r.to_dict() for r in records))
    return ExitCode.NOT_HALLUCINATED


# ============================================================================
# Parser
# ============================================================================

def _shared_flags() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help="YAML run configuration")
    shared.add_argument("--mode", choices=[m.value for m in RunMode])
    shared.add_argument("--fixtures-dir", help="Directory of recorded responses")
    shared.add_argument("--threshold", type=int, help="Hallucinated entities needed to flag a summary")
    shared.add_argument(
        "--count-extrinsic", action="store_const", const=True,
        help="Count ungrounded entities toward the threshold",
    )
    shared.add_argument(
        "--lenient-case", action="store_const", const=True,
        help="Match entity names case-insensitively",
    )
    shared.add_argument("--direct", action="store_const", const=True, help="Use the direct baseline")
    shared.add_argument("--ner", choices=[s.value for s in NerSource])
    shared.add_argument("--out", type=Path, help="Output file (directory for evaluate)")
    shared.add_argument("--format", choices=["json", "text"])
    shared.add_argument("--lenient", action="store_true", help="Skip invalid dataset lines")
    shared.add_argument("--macro-average", choices=["present", "all"])
    shared.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    return shared


_BACKEND_COMMANDS = (cmd_check, cmd_evaluate, cmd_generate)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="etf", description="Entity tracing for code summaries")
    sub = parser.add_subparsers(dest="command", required=True)
    shared = _shared_flags()

    check = sub.add_parser("check", parents=[shared], help="Check one code/summary pair")
    check.add_argument("code", help="Java source file")
    check.add_argument("summary", help="Summary text file")
    check.add_argument("--dataset", help="Annotated dataset (oracle mode)")
    check.add_argument("--id", help="Record id of the pair")
    check.set_defaults(func=cmd_check)

    evaluate = sub.add_parser("evaluate", parents=[shared], help="Evaluate over a dataset")
    evaluate.add_argument("dataset", help="Dataset JSONL")
    evaluate.set_defaults(func=cmd_evaluate)

    generate = sub.add_parser("generate", parents=[shared], help="Generate summaries")
    generate.add_argument("codes", help='JSONL of {"id", "code"} rows')
    generate.set_defaults(func=cmd_generate)

    ner = sub.add_parser("ner-eval", parents=[shared], help="Score NER output against a reference")
    ner.add_argument("pred", help="Predicted entities JSONL")
    ner.add_argument("gold", help="Reference entities JSONL (or a dataset file)")
    ner.set_defaults(func=cmd_ner_eval)

    stats = sub.add_parser("stats", parents=[shared], help="Dataset statistics")
    stats.add_argument("dataset", help="Dataset JSONL")
    stats.add_argument("--against", help="Second annotation pass for Cohen's kappa")
    stats.set_defaults(func=cmd_stats)

    convert = sub.add_parser("convert", parents=[shared], help="Convert upstream rows to JSONL")
    convert.add_argument("input", help="Tuple-per-row export (.json list or JSONL)")
    convert.set_defaults(func=cmd_convert)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    load_environment()

    try:
        config = build_config(args, uses_backends=args.func in _BACKEND_COMMANDS)
        return asyncio.run(args.func(args, config))
    except EtfError as e:
        logger.error(safe_log_error(e, f"{args.command} failed"))
        return ExitCode.OPERATIONAL_ERROR
    except OSError as e:
        logger.error(safe_log_error(e, f"{args.command} failed"))
        return ExitCode.OPERATIONAL_ERROR
    except KeyboardInterrupt:
        logger.error("Interrupted")
        return ExitCode.OPERATIONAL_ERROR
    except Exception as e:
        # exit 1 is a verdict, never a crash
        logger.error(safe_log_error(e, f"{args.command} crashed"))
        return ExitCode.OPERATIONAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
