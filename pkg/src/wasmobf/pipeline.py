"""Single-script conversion pipeline: parse, match, filter, synthesize,
assemble, validate. The CLI, metrics, and ablation harness all drive this."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import ir
from .assemble import (ObfuscatedScript, PatchPlan, assemble, filter_overlaps,
                       synthesize_plan_module)
from .errors import EmitError, OversizeError, ParseError
from .jsparser import parse
from .rules import RuleConfig, apply_all
from .scripts import SourceScript
from .validate import ValidationOutcome, validate


@dataclass
class ConversionOutcome:
    script: SourceScript
    status: str                          # converted | excluded | emit_failed
    error: str | None = None
    artifacts: list[ir.TransformArtifact] = field(default_factory=list)
    plan: PatchPlan | None = None
    obf: ObfuscatedScript | None = None
    validation: ValidationOutcome | None = None
    conversion_time_s: float = 0.0
    validation_time_s: float = 0.0

    @property
    def success(self) -> bool:
        return (self.status == "converted" and self.validation is not None
                and self.validation.success)

    @property
    def stage_reached(self) -> str:
        if self.status == "excluded":
            return "excluded"
        if self.status == "emit_failed" or self.validation is None:
            return "1"
        return str(self.validation.stage_reached)


def convert_script(script: SourceScript, enabled: set[str],
                   translator=None, config: RuleConfig | None = None,
                   harness=None, timeout_s: float = 5.0,
                   run_validation: bool = True) -> ConversionOutcome:
    start = time.perf_counter()
    try:
        root = parse(script)
    except (ParseError, OversizeError) as exc:
        return ConversionOutcome(script=script, status="excluded",
                                 error=str(exc),
                                 conversion_time_s=time.perf_counter() - start)
    artifacts = apply_all(root, script, enabled, translator=translator,
                          config=config)
    plan = filter_overlaps(artifacts)
    try:
        synthesize_plan_module(plan)
        obf = assemble(script, plan)
    except EmitError as exc:
        return ConversionOutcome(script=script, status="emit_failed",
                                 error=str(exc), artifacts=artifacts,
                                 plan=plan,
                                 conversion_time_s=time.perf_counter() - start)
    conversion_time = time.perf_counter() - start

    outcome = ConversionOutcome(script=script, status="converted",
                                artifacts=artifacts, plan=plan, obf=obf,
                                conversion_time_s=conversion_time)
    if run_validation:
        vstart = time.perf_counter()
        outcome.validation = validate(obf, harness=harness,
                                      timeout_s=timeout_s)
        outcome.validation_time_s = time.perf_counter() - vstart
    return outcome
