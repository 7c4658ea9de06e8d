import random
from pathlib import Path

import pytest

from wasmobf.rules import ALL_RULES
from wasmobf.scripts import SourceScript
from wasmobf.translator import StubTranslator

FIXTURES = Path(__file__).parent / "fixtures"
MINI_CORPUS = FIXTURES / "mini_corpus"


@pytest.fixture(scope="session")
def mini_corpus() -> dict[str, SourceScript]:
    scripts = {}
    for path in sorted(MINI_CORPUS.glob("*.js")):
        scripts[path.stem] = SourceScript.from_text(
            path.read_text(encoding="utf-8"), origin=str(path))
    assert len(scripts) == 12
    return scripts


@pytest.fixture(scope="session")
def stub_translator() -> StubTranslator:
    return StubTranslator()


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0x5EED)


@pytest.fixture(scope="session")
def all_rules() -> set[str]:
    return set(ALL_RULES)
