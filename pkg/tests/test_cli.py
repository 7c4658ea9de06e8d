"""CLI workflows: conversion outputs, determinism, and exit codes."""

import json

import pytest

from wasmobf.cli import main
from tests.conftest import MINI_CORPUS


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def corpus_dir(tmp_path):
    src = tmp_path / "scripts"
    src.mkdir()
    for path in sorted(MINI_CORPUS.glob("*.js")):
        (src / path.name).write_text(path.read_text(encoding="utf-8"),
                                     encoding="utf-8")
    out = tmp_path / "corpus"
    assert run_cli("ingest", str(src), "--output-dir", str(out),
                   "--label") == 0
    return out


class TestConvert:
    def test_smoke_outputs(self, tmp_path, capsys):
        source = tmp_path / "in.js"
        source.write_text("let x = 42;\ndoSomething();\n", encoding="utf-8")
        out = tmp_path / "out"
        code = run_cli("convert", str(source), "--output-dir", str(out),
                       "--rules", "all", "--translator", "stub")
        assert code == 0
        assert (out / "in.obf.js").exists()
        assert (out / "in.plan.json").exists()
        assert (out / "reports.json").exists()
        assert (out / "timings.json").exists()
        stdout = capsys.readouterr().out
        assert "in: status=" in stdout
        # no timing values leak into the deterministic report file
        payload = json.loads((out / "reports.json").read_text())
        assert all("conversion_time_s" not in entry for entry in payload)

    def test_deterministic_outputs(self, tmp_path):
        source = tmp_path / "in.js"
        source.write_text(
            (MINI_CORPUS / "mixed_loops.js").read_text(encoding="utf-8"),
            encoding="utf-8")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        run_cli("convert", str(source), "--output-dir", str(out1))
        run_cli("convert", str(source), "--output-dir", str(out2))
        for name in ("in.obf.js", "in.plan.json", "reports.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_bogus_rule_exit_2(self, tmp_path):
        source = tmp_path / "in.js"
        source.write_text("var a = 1;", encoding="utf-8")
        assert run_cli("convert", str(source), "--rules", "bogus",
                       "--output-dir", str(tmp_path / "out")) == 2

    def test_missing_input_exit_2(self, tmp_path):
        assert run_cli("convert", str(tmp_path / "absent.js"),
                       "--output-dir", str(tmp_path)) == 2

    def test_sidecar(self, tmp_path):
        source = tmp_path / "in.js"
        source.write_text("let x = 42;", encoding="utf-8")
        out = tmp_path / "out"
        run_cli("convert", str(source), "--output-dir", str(out), "--sidecar")
        assert (out / "in.wasm").exists()
        wasm = (out / "in.wasm").read_bytes()
        assert wasm.startswith(b"\x00asm")


class TestCorpusCommands:
    def test_ingest_label_sample(self, corpus_dir, tmp_path, capsys):
        subsets = tmp_path / "subsets"
        code = run_cli("sample", "--corpus", str(corpus_dir),
                       "--output-dir", str(subsets), "--subsets", "2",
                       "--seed", "7", "--fp-total", "4", "--non-fp-total", "2")
        assert code == 0
        files = sorted(subsets.glob("subset-*.json"))
        assert len(files) == 2

    def test_sample_seed_determinism(self, corpus_dir, tmp_path):
        a, b = tmp_path / "sa", tmp_path / "sb"
        for target in (a, b):
            run_cli("sample", "--corpus", str(corpus_dir),
                    "--output-dir", str(target), "--subsets", "2",
                    "--seed", "7", "--fp-total", "4", "--non-fp-total", "2")
        for p1, p2 in zip(sorted(a.iterdir()), sorted(b.iterdir())):
            assert p1.read_bytes() == p2.read_bytes()

    def test_metrics_command(self, corpus_dir, tmp_path):
        out = tmp_path / "metrics"
        code = run_cli("metrics", "--corpus", str(corpus_dir),
                       "--output-dir", str(out), "--group-by", "category")
        assert code == 0
        assert (out / "aggregate.csv").exists()
        assert (out / "aggregate.json").exists()

    def test_ablate_command(self, corpus_dir, tmp_path):
        out = tmp_path / "ablation"
        code = run_cli("ablate", "--corpus", str(corpus_dir),
                       "--output-dir", str(out),
                       "--rules", "replace_for_loops,replace_with_regex")
        assert code == 0
        text = (out / "ablation.csv").read_text()
        assert text.splitlines()[0].startswith("conversion_rule,")
        assert len(text.splitlines()) == 3


class TestSignalsCommand:
    def test_report(self, tmp_path, capsys):
        original = MINI_CORPUS / "navigator_screen.js"
        out = tmp_path / "out"
        run_cli("convert", str(original), "--output-dir", str(out))
        capsys.readouterr()
        code = run_cli("signals", str(original),
                       str(out / "navigator_screen.obf.js"), "--json")
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        by_tuple = {row["tuple"]: row for row in payload}
        assert by_tuple["MemberExpression:platform"]["delta"] < 0


class TestValidateCommand:
    def test_validate_obf_file(self, tmp_path, capsys):
        source = tmp_path / "in.js"
        source.write_text("let x = 42;", encoding="utf-8")
        out = tmp_path / "out"
        run_cli("convert", str(source), "--output-dir", str(out))
        capsys.readouterr()
        code = run_cli("validate", str(out / "in.obf.js"))
        assert code == 0
        stdout = capsys.readouterr().out
        assert "stage1=pass stage2=pass stage3=skipped" in stdout
