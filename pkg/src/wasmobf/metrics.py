"""Per-script conversion metrics and subset/category/rule aggregation."""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field

from . import ir
from .pipeline import ConversionOutcome


@dataclass
class ConversionReport:
    script_id: str
    coverage_pct: float
    success: bool
    stage_reached: str                  # excluded | 1 | 2 | 3
    conversion_time_s: float
    validation_time_s: float
    size_change_pct: float
    per_rule_matches: dict[str, int] = field(default_factory=dict)
    module_byte_len: int = 0
    infra_error: bool = False

    @property
    def excluded(self) -> bool:
        return self.stage_reached == "excluded"

    def to_json(self) -> dict:
        return {
            "script_id": self.script_id,
            "coverage_pct": self.coverage_pct,
            "success": self.success,
            "stage_reached": self.stage_reached,
            "conversion_time_s": self.conversion_time_s,
            "validation_time_s": self.validation_time_s,
            "size_change_pct": self.size_change_pct,
            "per_rule_matches": self.per_rule_matches,
            "module_byte_len": self.module_byte_len,
        }


def coverage_pct(chars_transformed: int, chars_original: int) -> float:
    if chars_original == 0:
        return 0.0
    return 100.0 * chars_transformed / chars_original


def relative_increase_pct(size_out: int, size_original: int) -> float:
    if size_original == 0:
        return 0.0
    return 100.0 * (size_out - size_original) / size_original


def report(outcome: ConversionOutcome,
           count_sidecar: bool = False) -> ConversionReport:
    """Fill a ConversionReport from one pipeline run.

    Sizes are on-disk byte counts: the single output file in embedded-bytes
    mode, plus the .wasm sidecar when one is written separately.
    """
    script = outcome.script
    original_bytes = script.byte_len
    if outcome.status != "converted" or outcome.obf is None:
        return ConversionReport(
            script_id=script.id, coverage_pct=0.0, success=False,
            stage_reached=outcome.stage_reached,
            conversion_time_s=outcome.conversion_time_s,
            validation_time_s=outcome.validation_time_s,
            size_change_pct=0.0,
            per_rule_matches=_rule_counts(outcome))
    kept = outcome.plan.kept if outcome.plan else []
    transformed = sum(len(artifact.span) for artifact in kept)
    out_bytes = len(outcome.obf.text.encode("utf-8"))
    if count_sidecar:
        out_bytes += len(outcome.obf.embedded_module)
    return ConversionReport(
        script_id=script.id,
        coverage_pct=coverage_pct(transformed, len(script.text)),
        success=outcome.success,
        stage_reached=outcome.stage_reached,
        conversion_time_s=outcome.conversion_time_s,
        validation_time_s=outcome.validation_time_s,
        size_change_pct=relative_increase_pct(out_bytes, original_bytes),
        per_rule_matches=_rule_counts(outcome),
        module_byte_len=len(outcome.obf.embedded_module),
        infra_error=bool(outcome.validation
                         and outcome.validation.infra_error))


def _rule_counts(outcome: ConversionOutcome) -> dict[str, int]:
    counts: dict[str, int] = {}
    for artifact in outcome.artifacts:
        counts[artifact.rule] = counts.get(artifact.rule, 0) + 1
    return counts


@dataclass
class AggregateRow:
    group_key: str
    n_scripts: int
    n_excluded: int
    success_rate_pct: float
    mean_coverage_pct: float
    mean_conversion_time_s: float
    mean_validation_time_s: float
    mean_size_change_pct: float

    def to_json(self) -> dict:
        return {
            "group": self.group_key,
            "n_scripts": self.n_scripts,
            "n_excluded": self.n_excluded,
            "success_rate": self.success_rate_pct,
            "conversion_coverage": self.mean_coverage_pct,
            "mean_conversion_time": self.mean_conversion_time_s,
            "mean_validation_time": self.mean_validation_time_s,
            "size_change": self.mean_size_change_pct,
        }


_COLUMNS = ("success_rate", "conversion_coverage", "mean_conversion_time",
            "mean_validation_time", "size_change")


def aggregate_group(key: str, reports: list[ConversionReport]) -> AggregateRow:
    """Group metrics; excluded scripts and harness infrastructure errors
    stay out of every denominator."""
    counted = [r for r in reports if not r.excluded and not r.infra_error]
    n = len(counted)
    if n == 0:
        return AggregateRow(key, len(reports), len(reports), 0.0, 0.0, 0.0,
                            0.0, 0.0)
    return AggregateRow(
        group_key=key,
        n_scripts=len(reports),
        n_excluded=len(reports) - n,
        success_rate_pct=100.0 * sum(r.success for r in counted) / n,
        mean_coverage_pct=statistics.fmean(r.coverage_pct for r in counted),
        mean_conversion_time_s=statistics.fmean(
            r.conversion_time_s for r in counted),
        mean_validation_time_s=statistics.fmean(
            r.validation_time_s for r in counted),
        mean_size_change_pct=statistics.fmean(
            r.size_change_pct for r in counted))


@dataclass
class MeanSd:
    mean: float
    sd: float
    single_group: bool = False   # SD undefined; reported as 0 with this flag


def mean_sd(values: list[float]) -> MeanSd:
    """Across-group mean with sample (n-1) standard deviation."""
    if len(values) == 1:
        return MeanSd(mean=values[0], sd=0.0, single_group=True)
    return MeanSd(mean=statistics.fmean(values),
                  sd=statistics.stdev(values))


def aggregate(grouped: dict[str, list[ConversionReport]]
              ) -> tuple[list[AggregateRow], dict[str, MeanSd]]:
    if not grouped:
        raise ValueError("need at least one group")
    rows = [aggregate_group(key, reports) for key, reports in grouped.items()]
    summary = {
        "success_rate": mean_sd([r.success_rate_pct for r in rows]),
        "conversion_coverage": mean_sd([r.mean_coverage_pct for r in rows]),
        "mean_conversion_time": mean_sd([r.mean_conversion_time_s for r in rows]),
        "mean_validation_time": mean_sd([r.mean_validation_time_s for r in rows]),
        "size_change": mean_sd([r.mean_size_change_pct for r in rows]),
    }
    return rows, summary


def ablate(scripts, rules: list[str], convert_one) -> list[AggregateRow]:
    """Single-rule runs: re-run the pipeline once per rule over the corpus.

    `convert_one(script, enabled) -> ConversionOutcome` supplies the
    pipeline so ablation stays decoupled from translator/harness setup.
    """
    rows = []
    for rule in rules:
        if rule not in ir.RULE_IDS:
            raise ValueError(f"unknown rule {rule!r}")
        reports = [report(convert_one(script, {rule})) for script in scripts]
        rows.append(aggregate_group(rule, reports))
    return rows


def rows_to_csv(rows: list[AggregateRow], group_header: str) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow((group_header,) + _COLUMNS)
    for row in rows:
        writer.writerow([
            row.group_key,
            f"{row.success_rate_pct:.4f}",
            f"{row.mean_coverage_pct:.4f}",
            f"{row.mean_conversion_time_s:.4f}",
            f"{row.mean_validation_time_s:.4f}",
            f"{row.mean_size_change_pct:.4f}",
        ])
    return buffer.getvalue()


def rows_to_json(rows: list[AggregateRow],
                 summary: dict[str, MeanSd] | None = None) -> str:
    payload: dict = {"rows": [row.to_json() for row in rows]}
    if summary is not None:
        payload["mean_sd"] = {
            column: {"mean": ms.mean, "sd": ms.sd,
                     "single_group": ms.single_group}
            for column, ms in summary.items()
        }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
