"""Three-stage validation behavior and the harness protocol client."""

import sys
import time
from pathlib import Path

import pytest

from wasmobf.assemble import ObfuscatedScript, assemble, filter_overlaps, \
    synthesize_plan_module
from wasmobf.errors import HarnessUnavailable
from wasmobf.harness_client import HarnessClient
from wasmobf.jsparser import parse_text
from wasmobf.rules import ALL_RULES, apply_all
from wasmobf.scripts import SourceScript
from wasmobf.validate import validate

FAKE_HARNESS = [sys.executable, str(Path(__file__).parent / "fake_harness.py")]


def make_obf(source, rules=None):
    script = SourceScript.from_text(source)
    root = parse_text(script.text)
    arts = apply_all(root, script, set(rules or ALL_RULES))
    plan = filter_overlaps(arts)
    synthesize_plan_module(plan)
    return assemble(script, plan)


@pytest.fixture()
def harness():
    client = HarnessClient(FAKE_HARNESS)
    client.start()
    yield client
    client.close()


class TestStages:
    def test_all_pass_with_harness(self, harness):
        obf = make_obf("let x = 42;")
        outcome = validate(obf, harness=harness)
        assert (outcome.stage1_compile, outcome.stage2_parse,
                outcome.stage3_execute) == ("pass", "pass", "pass")
        assert outcome.success
        assert outcome.stage_reached == 3

    def test_corrupted_module_fails_stage1(self):
        obf = make_obf("let x = 42;")
        corrupted = ObfuscatedScript(text=obf.text,
                                     embedded_module=obf.embedded_module[:-2],
                                     original_id=obf.original_id)
        outcome = validate(corrupted)
        assert outcome.stage1_compile == "fail"
        assert outcome.stage2_parse == "skipped"
        assert outcome.stage3_execute == "skipped"
        assert not outcome.success

    def test_glue_syntax_error_fails_stage2(self):
        obf = make_obf("let x = 42;")
        broken = ObfuscatedScript(text=obf.text + "\nlet bad = ;",
                                  embedded_module=obf.embedded_module,
                                  original_id=obf.original_id)
        outcome = validate(broken)
        assert outcome.stage1_compile == "pass"
        assert outcome.stage2_parse == "fail"
        assert outcome.stage3_execute == "skipped"

    def test_no_harness_is_skipped_not_pass(self):
        obf = make_obf("let x = 42;")
        outcome = validate(obf)
        assert outcome.stage3_execute == "skipped"
        assert outcome.success
        assert outcome.stage_reached == 2

    def test_require_stage3_raises_without_harness(self):
        obf = make_obf("let x = 42;")
        with pytest.raises(HarnessUnavailable):
            validate(obf, require_stage3=True)

    def test_runtime_error_reported(self, harness):
        obf = make_obf("var __HARNESS_THROW__ = 1;", rules={"replace_callee"})
        outcome = validate(obf, harness=harness)
        assert outcome.stage3_execute == "fail"
        assert "runtime_error" in outcome.error
        assert not outcome.success

    def test_unwrapped_original_passes_stage1(self, harness):
        plain = ObfuscatedScript(text="var a = 1;", embedded_module=b"",
                                 original_id="x")
        outcome = validate(plain, harness=harness)
        assert outcome.stage1_compile == "pass"
        assert outcome.success


class TestTimeoutDiscipline:
    def test_timeout_bounded_with_grace(self):
        client = HarnessClient(FAKE_HARNESS)
        client.start()
        try:
            obf = ObfuscatedScript(text="var __HARNESS_SLEEP__ = 1;",
                                   embedded_module=b"", original_id="x")
            started = time.perf_counter()
            outcome = validate(obf, harness=client, timeout_s=1.0)
            elapsed = time.perf_counter() - started
            assert outcome.stage3_execute == "fail"
            assert "timeout" in outcome.error
            assert elapsed < 1.0 + 1.0 + 0.75  # timeout + grace + slack
        finally:
            client.close()


class TestHarnessClient:
    def test_console_passthrough(self, harness):
        obf = ObfuscatedScript(text="var __HARNESS_CONSOLE__ = 1;",
                               embedded_module=b"", original_id="x")
        outcome = validate(obf, harness=harness)
        assert outcome.console == ["line one", "line two"]

    def test_fingerprint_collection(self, harness):
        obf = ObfuscatedScript(text="var a = 1;", embedded_module=b"",
                               original_id="x")
        outcome = validate(obf, harness=harness, collect_fingerprint=True)
        assert outcome.fingerprint_hash == "f" * 64

    def test_concurrent_requests_matched_by_id(self, harness):
        import threading
        results = {}

        def run(tag):
            marker = "__HARNESS_CONSOLE__" if tag % 2 else "plain"
            response = harness.request(f"var x_{tag} = '{marker}';",
                                       timeout_ms=3000)
            results[tag] = response

        threads = [threading.Thread(target=run, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(results) == 8
        for tag, response in results.items():
            expected = ["line one", "line two"] if tag % 2 else []
            assert response["console"] == expected

    def test_unlaunchable_harness(self):
        client = HarnessClient(["/nonexistent/harness-binary"])
        with pytest.raises(HarnessUnavailable):
            client.request("var a = 1;")

    def test_crash_is_infra_error(self, tmp_path):
        crashy = tmp_path / "crashy.py"
        crashy.write_text("import sys; sys.exit(3)\n")
        client = HarnessClient([sys.executable, str(crashy)])
        obf = ObfuscatedScript(text="var a = 1;", embedded_module=b"",
                               original_id="x")
        outcome = validate(obf, harness=client, timeout_s=1.0)
        assert outcome.infra_error or outcome.stage3_execute == "fail"
        assert not outcome.success
        client.close()
