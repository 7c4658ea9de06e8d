"""Metric formulas, aggregation, and the ablation harness."""

import math

import pytest

from wasmobf.metrics import (AggregateRow, ConversionReport, ablate,
                             aggregate, aggregate_group, coverage_pct,
                             mean_sd, relative_increase_pct, report,
                             rows_to_csv, rows_to_json)
from wasmobf.pipeline import convert_script
from wasmobf.rules import ALL_RULES
from wasmobf.scripts import SourceScript


def fake_report(**overrides):
    base = dict(script_id="x" * 64, coverage_pct=0.0, success=True,
                stage_reached="2", conversion_time_s=0.0,
                validation_time_s=0.0, size_change_pct=0.0)
    base.update(overrides)
    return ConversionReport(**base)


class TestFormulas:
    def test_coverage_arithmetic(self):
        assert coverage_pct(250, 1000) == 25.0
        assert coverage_pct(0, 1000) == 0.0
        assert coverage_pct(0, 0) == 0.0

    def test_relative_increase(self):
        assert relative_increase_pct(1245, 1000) == pytest.approx(24.5)
        assert relative_increase_pct(544, 1000) == pytest.approx(-45.6)

    def test_formulas_match_spreadsheet_oracle(self):
        # oracle: plain re-derivation of the two ratios
        cases = [(137, 512), (0, 17), (512, 512), (9999, 10001)]
        for transformed, original in cases:
            assert abs(coverage_pct(transformed, original)
                       - 100.0 * transformed / original) < 1e-9
        for out, original in [(1245, 1000), (100, 700), (0, 5)]:
            assert abs(relative_increase_pct(out, original)
                       - 100.0 * (out - original) / original) < 1e-9

    def test_report_fields_from_pipeline(self):
        script = SourceScript.from_text("let x = 42;\nvar keep = f(x);\n")
        outcome = convert_script(script, {"replace_literals_recursive"})
        rep = report(outcome)
        kept = outcome.plan.kept
        assert rep.coverage_pct == pytest.approx(
            100.0 * sum(a.span.end - a.span.start for a in kept)
            / len(script.text))
        out_len = len(outcome.obf.text.encode("utf-8"))
        assert rep.size_change_pct == pytest.approx(
            100.0 * (out_len - script.byte_len) / script.byte_len)
        assert rep.per_rule_matches == {"replace_literals_recursive": 1}
        assert 0.0 <= rep.coverage_pct <= 100.0

    def test_zero_artifacts_zero_changes(self):
        script = SourceScript.from_text("var keep = f();\n")
        outcome = convert_script(script, {"replace_literals_recursive"})
        rep = report(outcome)
        assert rep.coverage_pct == 0.0
        assert rep.size_change_pct == 0.0
        assert rep.success  # trivial stages pass

    def test_excluded_script(self):
        script = SourceScript.from_text("let x = ;")
        outcome = convert_script(script, set(ALL_RULES))
        rep = report(outcome)
        assert rep.stage_reached == "excluded"
        assert not rep.success


class TestAggregation:
    def test_two_point_sd(self):
        rows, summary = aggregate({
            "g1": [fake_report(success=True), fake_report(success=True),
                   fake_report(success=True, stage_reached="2"),
                   fake_report(success=False), fake_report(success=False)],
            "g2": [fake_report(success=True)] * 9 + [fake_report(success=False)],
        })
        ms = summary["success_rate"]
        assert ms.mean == pytest.approx((60.0 + 90.0) / 2)
        # sample SD with n-1 denominator
        assert ms.sd == pytest.approx(
            math.sqrt(((60 - 75) ** 2 + (90 - 75) ** 2) / 1))

    def test_single_group_flagged(self):
        _, summary = aggregate({"only": [fake_report()]})
        assert summary["success_rate"].sd == 0.0
        assert summary["success_rate"].single_group

    def test_success_rate_excludes_excluded(self):
        reports = [fake_report(success=True)] * 3 + [
            fake_report(success=False, stage_reached="excluded")]
        row = aggregate_group("g", reports)
        assert row.success_rate_pct == 100.0
        assert row.n_excluded == 1

    def test_reference_table_recomputation(self):
        # aggregator check against ten externally reported subset rows
        success = [84.05, 86.75, 88.51, 84.42, 86.14, 85.80, 85.33, 85.71,
                   85.92, 84.93]
        coverage = [20.21, 25.43, 21.46, 28.40, 28.01, 24.45, 30.01, 22.10,
                    23.91, 26.07]
        ms_success = mean_sd(success)
        ms_coverage = mean_sd(coverage)
        assert ms_success.mean == pytest.approx(85.76, abs=0.01)
        assert ms_success.sd == pytest.approx(1.26, abs=0.01)
        assert ms_coverage.mean == pytest.approx(25.01, abs=0.01)
        assert ms_coverage.sd == pytest.approx(3.20, abs=0.01)

    def test_mean_sd_spreadsheet_oracle(self):
        values = [3.25, 1.5, 4.75, 2.0]
        ms = mean_sd(values)
        mean = sum(values) / len(values)
        variance = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
        assert abs(ms.mean - mean) < 1e-9
        assert abs(ms.sd - math.sqrt(variance)) < 1e-9


class TestAblation:
    @pytest.fixture()
    def corpus(self, mini_corpus):
        return list(mini_corpus.values())

    def test_rule_rows_and_monotone_coverage(self, corpus, stub_translator):
        def convert_one(script, enabled):
            return convert_script(script, set(enabled),
                                  translator=stub_translator)

        all_cov = {}
        for script in corpus:
            outcome = convert_one(script, set(ALL_RULES))
            rep = report(outcome)
            all_cov[script.id] = rep.coverage_pct

        rules = sorted(ALL_RULES)
        rows = ablate(corpus, rules, convert_one)
        assert [row.group_key for row in rows] == rules
        for rule in rules:
            for script in corpus:
                outcome = convert_one(script, {rule})
                rep = report(outcome)
                assert rep.coverage_pct <= all_cov[script.id] + 1e-9, \
                    (rule, script.origin)

    def test_unmatched_rule_zero_coverage(self, corpus, stub_translator):
        def convert_one(script, enabled):
            return convert_script(script, set(enabled),
                                  translator=stub_translator)

        benign = [SourceScript.from_text("var calc = compute(7);\n")]
        rows = ablate(benign, ["replace_for_loops"], convert_one)
        assert rows[0].mean_coverage_pct == 0.0

    def test_unknown_rule_rejected(self, corpus):
        with pytest.raises(ValueError):
            ablate(corpus, ["bogus"], lambda s, r: None)


class TestEmitters:
    def test_csv_headers(self):
        rows = [AggregateRow("replace_for_loops", 3, 0, 100.0, 12.5, 0.01,
                             0.002, 11.27)]
        text = rows_to_csv(rows, group_header="conversion_rule")
        header = text.splitlines()[0]
        assert header == ("conversion_rule,success_rate,conversion_coverage,"
                          "mean_conversion_time,mean_validation_time,"
                          "size_change")

    def test_json_mean_sd_payload(self):
        rows, summary = aggregate({"a": [fake_report()],
                                   "b": [fake_report()]})
        payload = rows_to_json(rows, summary)
        assert '"mean_sd"' in payload and '"success_rate"' in payload


def test_infra_errors_excluded_from_denominators():
    reports = [fake_report(success=True)] * 4 + [
        fake_report(success=False, infra_error=True)]
    row = aggregate_group("g", reports)
    assert row.success_rate_pct == 100.0
