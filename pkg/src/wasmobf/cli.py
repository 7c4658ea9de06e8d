"""Command-line surface for the conversion, corpus, and analysis workflows."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import metrics as metrics_mod
from . import signals as signals_mod
from .assemble import plan_to_json
from .corpus import (ingest, label_record, load_chunks, load_label_rules,
                     sample, write_chunks, write_subsets)
from .errors import WasmobfError
from .harness_client import HarnessClient
from .pipeline import convert_script
from .rules import RuleConfig, parse_rule_set
from .scripts import SourceScript
from .translator import make_translator

EXIT_OK = 0
EXIT_SCRIPT_FAILURE = 1
EXIT_CONFIG = 2


def _add_rule_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rules", default="all",
                        help="'all' or comma-separated rule identifiers")
    parser.add_argument("--translator", default="stub",
                        choices=("stub", "service", "off"))
    parser.add_argument("--service-endpoint", default=None,
                        help="chat-completion URL for --translator service")
    parser.add_argument("--model", default="default")
    parser.add_argument("--strict", action="store_true",
                        help="exit 1 on any script-level failure; translator "
                             "transport errors propagate")
    parser.add_argument("--no-dom", action="store_true",
                        help="disable the class-definition rule (no DOM)")
    parser.add_argument("--fp-api-file", default=None,
                        help="plain-text fingerprinting API list (one per line)")
    parser.add_argument("--callee-file", default=None,
                        help="extra sensitive callee names (one per line)")
    parser.add_argument("--harness", default=None,
                        help="runtime harness command for stage-3 validation")
    parser.add_argument("--timeout", type=float, default=5.0,
                        help="stage-3 timeout per script (seconds)")


def _build_pipeline_args(args):
    enabled = parse_rule_set(args.rules)
    translator = make_translator(args.translator,
                                 endpoint=args.service_endpoint,
                                 model=args.model, strict=args.strict)
    config = RuleConfig.from_files(fp_api_file=args.fp_api_file,
                                   callee_file=args.callee_file,
                                   dom_enabled=not args.no_dom)
    harness = HarnessClient(args.harness) if args.harness else None
    return enabled, translator, config, harness


def _load_input_scripts(inputs: list[str]) -> list[SourceScript]:
    scripts = []
    for name in inputs:
        path = Path(name)
        if not path.exists():
            raise FileNotFoundError(name)
        scripts.append(SourceScript.from_text(
            path.read_bytes().decode("utf-8"), origin=str(path)))
    return scripts


def cmd_convert(args) -> int:
    enabled, translator, config, harness = _build_pipeline_args(args)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scripts = _load_input_scripts(args.inputs)
    reports = []
    timings = {}
    failures = 0

    def convert_one(script):
        return convert_script(script, enabled, translator=translator,
                              config=config, harness=harness,
                              timeout_s=args.timeout)

    try:
        if args.workers > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=args.workers) as pool:
                outcomes = list(pool.map(convert_one, scripts))
        else:
            outcomes = [convert_one(script) for script in scripts]
        for name, script, outcome in zip(args.inputs, scripts, outcomes):
            stem = Path(name).stem
            rep = metrics_mod.report(outcome, count_sidecar=args.sidecar)
            reports.append(rep)
            timings[script.id] = {
                "conversion_time_s": outcome.conversion_time_s,
                "validation_time_s": outcome.validation_time_s,
            }
            if outcome.obf is not None:
                (out_dir / f"{stem}.obf.js").write_text(outcome.obf.text,
                                                        encoding="utf-8")
                if args.sidecar and outcome.obf.embedded_module:
                    (out_dir / f"{stem}.wasm").write_bytes(
                        outcome.obf.embedded_module)
            if outcome.plan is not None:
                (out_dir / f"{stem}.plan.json").write_text(
                    plan_to_json(outcome.plan), encoding="utf-8")
            if not outcome.success:
                failures += 1
            if args.json:
                print(json.dumps({"script": stem, **{
                    k: v for k, v in rep.to_json().items()
                    if not k.endswith("_time_s")}}, sort_keys=True))
            else:
                print(f"{stem}: status={outcome.stage_reached} "
                      f"success={outcome.success} "
                      f"coverage={rep.coverage_pct:.2f}% "
                      f"size_change={rep.size_change_pct:+.2f}%")
    finally:
        if harness is not None:
            harness.close()
    payload = [{k: v for k, v in rep.to_json().items()
                if not k.endswith("_time_s")} for rep in reports]
    (out_dir / "reports.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out_dir / "timings.json").write_text(
        json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.strict and failures:
        return EXIT_SCRIPT_FAILURE
    return EXIT_OK


def cmd_validate(args) -> int:
    from .assemble import ObfuscatedScript, embedded_bytes_roundtrip
    from .errors import ExtractError
    from .validate import validate

    harness = HarnessClient(args.harness) if args.harness else None
    failures = 0
    try:
        for name in args.inputs:
            text = Path(name).read_text(encoding="utf-8")
            obf = ObfuscatedScript(text=text, embedded_module=b"",
                                   original_id="")
            try:
                obf.embedded_module = embedded_bytes_roundtrip(obf)
            except ExtractError:
                pass  # unwrapped script: stage 1 is trivially satisfied
            outcome = validate(obf, harness=harness, timeout_s=args.timeout)
            print(f"{name}: stage1={outcome.stage1_compile} "
                  f"stage2={outcome.stage2_parse} "
                  f"stage3={outcome.stage3_execute} "
                  f"success={outcome.success}"
                  + (f" error={outcome.error}" if outcome.error else ""))
            if not outcome.success:
                failures += 1
    finally:
        if harness is not None:
            harness.close()
    return EXIT_SCRIPT_FAILURE if failures and args.strict else EXIT_OK


def cmd_ingest(args) -> int:
    records, stats = ingest(args.inputs)
    if args.label:
        rules = load_label_rules(args.rules_file) if args.rules_file else None
        for record in records:
            label_record(record, rules)
    paths = write_chunks(records, args.output_dir)
    print(f"ingested {stats.records} records "
          f"({stats.duplicates} duplicates, {stats.decode_errors} decode "
          f"errors) into {len(paths)} chunk(s)")
    return EXIT_OK


def cmd_label(args) -> int:
    records = load_chunks(args.corpus)
    rules = load_label_rules(args.rules_file) if args.rules_file else None
    for record in records:
        label_record(record, rules)
    write_chunks(records, args.output_dir or args.corpus)
    fp = sum(record.label == "fingerprinting" for record in records)
    print(f"labeled {len(records)} records: {fp} fingerprinting, "
          f"{len(records) - fp} non-fingerprinting")
    return EXIT_OK


def cmd_sample(args) -> int:
    records = load_chunks(args.corpus)
    subsets = sample(records, n_subsets=args.subsets, seed=args.seed,
                     fp_total=args.fp_total, non_fp_total=args.non_fp_total)
    paths = write_subsets(subsets, args.output_dir)
    for subset, path in zip(subsets, paths):
        print(f"subset {subset.index}: {len(subset.fp)} fp + "
              f"{len(subset.non_fp)} non-fp -> {path}")
    return EXIT_OK


def _convert_corpus(args, records, enabled, translator, config, harness):
    outcomes = {}
    for record in records:
        outcomes[record.id] = convert_script(
            record.script, enabled, translator=translator, config=config,
            harness=harness, timeout_s=args.timeout)
    return outcomes


def cmd_metrics(args) -> int:
    enabled, translator, config, harness = _build_pipeline_args(args)
    records = load_chunks(args.corpus)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        outcomes = _convert_corpus(args, records, enabled, translator, config,
                                   harness)
    finally:
        if harness is not None:
            harness.close()
    reports = {rid: metrics_mod.report(outcome)
               for rid, outcome in outcomes.items()}

    grouped: dict[str, list[metrics_mod.ConversionReport]] = {}
    if args.subsets_dir:
        for path in sorted(Path(args.subsets_dir).glob("subset-*.json")):
            subset = json.loads(path.read_text(encoding="utf-8"))
            members = subset["fp"] + subset["non_fp"]
            grouped[str(subset["index"])] = [
                reports[rid] for rid in members if rid in reports]
    elif args.group_by == "category":
        for record in records:
            key = record.categories[0] if record.categories else "Non-Fingerprinting"
            grouped.setdefault(key, []).append(reports[record.id])
    else:
        grouped["all"] = list(reports.values())

    rows, summary = metrics_mod.aggregate(grouped)
    (out_dir / "aggregate.csv").write_text(
        metrics_mod.rows_to_csv(rows, group_header="group"), encoding="utf-8")
    (out_dir / "aggregate.json").write_text(
        metrics_mod.rows_to_json(rows, summary), encoding="utf-8")
    (out_dir / "reports.json").write_text(
        json.dumps({rid: rep.to_json() for rid, rep in reports.items()},
                   indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(metrics_mod.rows_to_csv(rows, group_header="group"))
    return EXIT_OK


def cmd_ablate(args) -> int:
    enabled, translator, config, harness = _build_pipeline_args(args)
    records = load_chunks(args.corpus)
    scripts = [record.script for record in records]
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def convert_one(script, rule_set):
        return convert_script(script, rule_set, translator=translator,
                              config=config, harness=harness,
                              timeout_s=args.timeout)

    try:
        rows = metrics_mod.ablate(scripts, sorted(enabled), convert_one)
    finally:
        if harness is not None:
            harness.close()
    csv_text = metrics_mod.rows_to_csv(rows, group_header="conversion_rule")
    (out_dir / "ablation.csv").write_text(csv_text, encoding="utf-8")
    (out_dir / "ablation.json").write_text(
        metrics_mod.rows_to_json(rows), encoding="utf-8")
    print(csv_text)
    return EXIT_OK


def cmd_signals(args) -> int:
    watchlist = (signals_mod.load_watchlist(args.watchlist)
                 if args.watchlist else signals_mod.DEFAULT_WATCHLIST)
    original = Path(args.original).read_text(encoding="utf-8")
    converted = Path(args.converted).read_text(encoding="utf-8")
    deltas = signals_mod.evasion_report(original, converted, watchlist)
    if args.json:
        print(json.dumps(signals_mod.report_json(deltas), indent=2))
    else:
        print(signals_mod.report_table(deltas), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wasmobf",
        description="JS-to-WASM obfuscation pipeline and analysis tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert scripts to WASM-backed form")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--output-dir", default=".")
    p.add_argument("--sidecar", action="store_true",
                   help="also write the module as <stem>.wasm")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel conversions (shared result collection)")
    p.add_argument("--json", action="store_true",
                   help="machine-readable report lines")
    _add_rule_args(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", help="run the validation stages on files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--harness", default=None)
    p.add_argument("--timeout", type=float, default=5.0)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("ingest", help="normalize and deduplicate scripts")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--label", action="store_true",
                   help="label records during ingest")
    p.add_argument("--rules-file", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="apply category heuristics to a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--rules-file", default=None)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("sample", help="draw stratified evaluation subsets")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--subsets", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--fp-total", type=int, default=400)
    p.add_argument("--non-fp-total", type=int, default=100)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("metrics", help="convert a corpus and aggregate metrics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--subsets-dir", default=None)
    p.add_argument("--group-by", choices=("all", "category"), default="all")
    _add_rule_args(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("ablate", help="single-rule pipeline runs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output-dir", required=True)
    _add_rule_args(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("signals", help="watchlist tuple deltas before/after")
    p.add_argument("original")
    p.add_argument("converted")
    p.add_argument("--watchlist", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_signals)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WasmobfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCRIPT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
