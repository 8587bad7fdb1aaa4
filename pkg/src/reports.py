"""
Rendering of reports, metrics and statistics as JSON or plain-text tables.

JSON output keeps the key order of the models' ``to_dict`` methods and never
includes timestamps, so replay runs reproduce files byte for byte.
"""

import json
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

from .models import CorpusStats, MetricsBundle, NerScores, SummaryReport


def to_json(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def report_json(report: SummaryReport) -> str:
    return to_json(report.to_dict())


def reports_jsonl(reports: Iterable[SummaryReport]) -> str:
    return "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in reports)


def report_text(report: SummaryReport, summary_text: str = "") -> str:
    """Human-readable view of one report."""
    lines = [
        f"{report.unit_id}: {report.instance_label.value} "
        f"(method={report.method}, hallucinated entities={report.hallucinated_entity_count}, "
        f"threshold={report.threshold})"
    ]
    if report.parse_mode is not None:
        lines.append(f"  code parse: {report.parse_mode.value}")

    for tv in report.tuples:
        raw = tv.verdict.label.value
        effective = tv.verdict.effective_label.value
        shown = raw if raw == effective else f"{raw} -> {effective}"
        lines.append(
            f"  [{shown}] {tv.intent.entity.surface} "
            f"({tv.intent.code_entity.kind.value}, {len(tv.intent.relevant_sentences)} sentences)"
        )
    for flag in report.extrinsic_flags:
        lines.append(f"  [UNGROUNDED] {flag.entity.surface} ({flag.entity.tag.value})")
    for entity in report.fabricated:
        lines.append(f"  [FABRICATED] {entity.surface}")
    for finding in report.baseline_findings:
        note = "" if finding.grounded else " (not in summary)"
        lines.append(f"  [FINDING] {finding.entity_name}{note}: {finding.relevant_sentence}")

    if report.localization:
        lines.append("  localization:")
        for span in report.localization:
            excerpt = summary_text[span.start:span.end] if summary_text else ""
            excerpt = f" {' '.join(excerpt.split())}" if excerpt else ""
            lines.append(
                f"    {span.reason.value} {span.start}-{span.end} [{span.entity}]{excerpt}"
            )
    if report.taxonomy_hint is not None:
        lines.append(f"  taxonomy hint: {report.taxonomy_hint.value}")
    return "\n".join(lines) + "\n"


def _table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [[str(c) for c in header]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]

    def fmt(row: Sequence[str]) -> str:
        return "  ".join(
            cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i])
            for i, cell in enumerate(row)
        ).rstrip()

    out = [fmt(cells[0]), "  ".join("-" * w for w in widths)]
    out.extend(fmt(row) for row in cells[1:])
    return "\n".join(out) + "\n"


def metrics_table(bundles: Sequence[MetricsBundle]) -> str:
    """Macro P/R/F1 per method and level, one row each."""
    rows = [
        (
            b.name,
            b.level,
            f"{b.macro_precision:.2f}",
            f"{b.macro_recall:.2f}",
            f"{b.macro_f1:.2f}",
            sum(b.support.values()),
            b.skipped_indeterminate,
            b.unaligned,
        )
        for b in bundles
    ]
    return _table(("method", "level", "P", "R", "F1", "n", "skipped", "unaligned"), rows)


def corpus_table(stats: CorpusStats) -> str:
    rows = [
        (
            s.model,
            s.summaries,
            f"{s.mean_summary_length:.2f}",
            f"{s.mean_code_entity_count:.2f}",
            f"{s.mapped_pct:.2f}",
            f"{s.unmapped_pct:.2f}",
            f"{s.nl_pct:.2f}",
            f"{s.fabricated_pct:.2f}",
        )
        for s in stats.per_model.values()
    ]
    return _table(
        ("model", "n", "length", "CE count", "mapped %", "unmapped %", "NL %", "fabricated %"),
        rows,
    )


def ner_table(
    scores: Mapping[str, NerScores], fabricated_pct: Optional[Mapping[str, float]] = None
) -> str:
    fabricated_pct = fabricated_pct or {}
    rows = []
    for model, s in scores.items():
        row = [model, f"{s.jaccard:.2f}", f"{s.type_f1:.2f}"]
        if fabricated_pct:
            row.append(f"{fabricated_pct.get(model, 0.0):.2f}")
        rows.append(row)
    header = ["model", "jaccard", "type F1"] + (["fabricated %"] if fabricated_pct else [])
    return _table(header, rows)


def statistics_table(stats: Dict[str, Any]) -> str:
    """Dataset statistics as a two-column table."""
    rows: List[Sequence[Any]] = [
        ("summaries", stats["summaries"]),
        ("hallucinated", f"{stats['hallucinated']} ({stats['hallucinated_percent']:.2f}%)"),
        ("entities", stats["entities"]),
    ]
    rows.extend((f"  {label}", count) for label, count in stats["labels"].items())
    rows.extend((f"rating {rating}", count) for rating, count in stats["ratings"].items())
    rows.append(("mean INCORRECT (FAIR/POOR)", f"{stats['mean_incorrect_fair_poor']:.2f}"))
    rows.extend((f"model {model}", count) for model, count in stats["models"].items())
    rows.extend((f"taxonomy {code}", count) for code, count in stats["taxonomy"].items())
    if "kappa" in stats:
        rows.append(("cohen kappa", f"{stats['kappa']:.2f}"))
    return _table(("statistic", "value"), rows)
