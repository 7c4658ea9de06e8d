"""AST-tuple extraction, vectorization, and evasion deltas."""

import pytest

from wasmobf.assemble import assemble, filter_overlaps, synthesize_plan_module
from wasmobf.jsparser import parse_text
from wasmobf.rules import ALL_RULES, apply_all
from wasmobf.scripts import SourceScript
from wasmobf.signals import (DEFAULT_WATCHLIST, AstTuple, evasion_report,
                             extract_tuple_occurrences, extract_tuples,
                             extract_tuples_from_text, vectorize)


def counts(source):
    return extract_tuples(parse_text(source))


class TestExtraction:
    def test_member_emits_property_and_base(self):
        got = counts("screen.availHeight")
        assert got[AstTuple("MemberExpression", "availHeight")] == 1
        assert got[AstTuple("MemberExpression", "screen")] == 1

    def test_fill_text_member(self):
        got = counts("ctx.fillText(v, 1, 2);")
        assert got[AstTuple("MemberExpression", "fillText")] == 1

    def test_call_callee_names(self):
        got = counts("canvas(); obj.method(); standalone(1);")
        assert got[AstTuple("CallExpression", "canvas")] == 1
        assert got[AstTuple("CallExpression", "obj")] == 1
        assert got[AstTuple("CallExpression", "standalone")] == 1

    def test_property_keys(self):
        got = counts("var o = {getScreenResolution: f, 'colorDepth': 1};")
        assert got[AstTuple("Property", "getScreenResolution")] == 1
        assert got[AstTuple("Property", "colorDepth")] == 1

    def test_binary_identifier_operands(self):
        got = counts("if (type == other) { g(); } else { h(); }")
        assert got[AstTuple("BinaryExpression", "type")] == 1
        assert got[AstTuple("BinaryExpression", "other")] == 1

    def test_bracket_string_key(self):
        got = counts('nav["platform"]')
        assert got[AstTuple("MemberExpression", "platform")] == 1

    def test_empty(self):
        assert counts("") == {}

    def test_occurrence_spans_point_at_tokens(self):
        source = "screen.availHeight"
        occurrences = extract_tuple_occurrences(parse_text(source))
        rendered = {(t.rendered, source[s.start:s.end])
                    for t, s in occurrences}
        assert ("MemberExpression:screen", "screen") in rendered
        assert ("MemberExpression:availHeight", "availHeight") in rendered


class TestVectorize:
    def test_two_docs_shared_tuples(self):
        docs = [counts("a.platform; b.language;"),
                counts("c.platform; d.platform;")]
        summary = vectorize(docs)
        assert "MemberExpression:platform" in summary.vocab
        col = summary.vocab.index("MemberExpression:platform")
        assert [row[col] for row in summary.matrix] == [1, 2]

    def test_cap_truncates_by_frequency(self):
        docs = []
        for index in range(60):
            reps = 60 - index
            docs.append(counts(f"x.prop{index};" * reps))
        summary = vectorize(docs, vocab_cap=10)
        assert len(summary.vocab) == 10
        # highest-frequency tuples kept: prop0 must be in, prop59 out
        assert any(v.endswith(":prop0") for v in summary.vocab)
        assert not any(v.endswith(":prop59") for v in summary.vocab)

    def test_vocab_cap_five_thousand_default(self):
        docs = [counts("a.b;")]
        assert vectorize(docs).vocab  # default cap accepted

    def test_cap_zero_rejected(self):
        with pytest.raises(ValueError):
            vectorize([counts("a.b;")], vocab_cap=0)

    def test_ties_lexicographic(self):
        docs = [counts("q.zed; q.alpha;")]
        summary = vectorize(docs, vocab_cap=2)
        # q appears twice; the alpha/zed tie breaks lexicographically
        assert summary.vocab == ["MemberExpression:q",
                                 "MemberExpression:alpha"]


def convert_text(script: SourceScript, rules=None, translator=None):
    root = parse_text(script.text)
    arts = apply_all(root, script, set(rules or ALL_RULES),
                     translator=translator)
    plan = filter_overlaps(arts)
    synthesize_plan_module(plan)
    return plan, assemble(script, plan)


class TestEvasionReport:
    def test_fill_text_fully_suppressed(self):
        script = SourceScript.from_text("var w = ctx.fillText;")
        _, obf = convert_text(script, rules={"obfuscate_functions"})
        deltas = evasion_report(script.text, obf.text)
        by_tuple = {d.tuple.rendered: d for d in deltas}
        fill = by_tuple["MemberExpression:fillText"]
        assert (fill.count_before, fill.count_after, fill.delta) == (1, 0, -1)

    def test_non_matching_script_all_zero(self):
        script = SourceScript.from_text("var benign = compute(1, 2);")
        _, obf = convert_text(script)
        deltas = evasion_report(script.text, obf.text)
        assert all(d.delta == 0 for d in deltas)

    def test_absent_tuple_zero_row(self):
        script = SourceScript.from_text("var a = 1;")
        deltas = evasion_report(script.text, script.text)
        fill = [d for d in deltas
                if d.tuple.rendered == "MemberExpression:fillText"][0]
        assert (fill.count_before, fill.count_after, fill.delta) == (0, 0, 0)


class TestSuppressionInvariants:
    SUPPRESSING_RULES = {"obfuscate_functions", "replace_with_regex",
                         "replace_obf_screen"}

    def kept_suppressing_spans(self, script, plan):
        return [a.span for a in plan.kept if a.rule in self.SUPPRESSING_RULES]

    def test_span_contribution_vanishes(self, mini_corpus, stub_translator):
        watch = set(DEFAULT_WATCHLIST)
        for name, script in mini_corpus.items():
            plan, obf = convert_text(script, translator=stub_translator)
            spans = self.kept_suppressing_spans(script, plan)
            if not spans:
                continue
            before = extract_tuple_occurrences(parse_text(script.text))
            after = extract_tuples_from_text(obf.text)
            for tup, span in before:
                if tup not in watch:
                    continue
                if any(s.contains(span) for s in spans):
                    # this occurrence was inside a replaced region; the
                    # converted text may only contain OTHER occurrences
                    remaining = sum(
                        1 for t2, s2 in before
                        if t2 == tup and not any(s.contains(s2)
                                                 for s in spans))
                    assert after.get(tup, 0) <= remaining, (name, tup)

    def test_total_watchlist_count_strictly_decreases(self, mini_corpus,
                                                      stub_translator):
        watch = set(DEFAULT_WATCHLIST)
        saw_suppressing_script = False
        for name, script in mini_corpus.items():
            plan, obf = convert_text(script, translator=stub_translator)
            spans = self.kept_suppressing_spans(script, plan)
            before = extract_tuple_occurrences(parse_text(script.text))
            watch_in_span = [
                (t, s) for t, s in before
                if t in watch and any(sp.contains(s) for sp in spans)]
            if not watch_in_span:
                continue
            saw_suppressing_script = True
            total_before = sum(1 for t, _ in before if t in watch)
            after = extract_tuples_from_text(obf.text)
            total_after = sum(after.get(t, 0) for t in watch)
            assert total_after < total_before, name
        assert saw_suppressing_script

    def test_count_conservation_outside_patches(self, stub_translator):
        # untouched constructs keep their tuple counts after conversion
        source = ("var keepme = probe.customProp;\n"
                  "let x = 42;\n"
                  "var again = probe.customProp;\n")
        script = SourceScript.from_text(source)
        plan, obf = convert_text(script, translator=stub_translator)
        tup = AstTuple("MemberExpression", "customProp")
        assert extract_tuples_from_text(script.text)[tup] == 2
        assert extract_tuples_from_text(obf.text)[tup] == 2
