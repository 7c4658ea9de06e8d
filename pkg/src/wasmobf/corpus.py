"""Corpus tooling: ingest and normalize local script collections, label
fingerprinting categories heuristically, and draw evaluation subsets.

The category heuristics approximate published pattern-matching rules from
prior detection tooling; exact thresholds are not public, so the defaults
here are config-overridable approximations.
"""

from __future__ import annotations

import json
import logging
import random
import re
import tarfile
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

from .scripts import SourceScript

logger = logging.getLogger(__name__)

CHUNK_SIZE = 10_000
CATEGORY_ORDER = ("Canvas", "WebRTC", "CanvasFont", "AudioContext")

SCRIPT_SUFFIXES = {".js", ".mjs", ".txt"}

_FONT_ASSIGN_RE = re.compile(r"\.font\s*=\s*(['\"])((?:(?!\1).)+)\1")
_LONG_TEXT_CALL_RE = re.compile(
    r"(?:fillText|strokeText)\s*\(\s*(['\"])((?:(?!\1).){10,})\1")
_CANVAS_METHOD_RE = re.compile(r"\.(\w+)\s*\(")

_CANVAS_DRAW_METHODS = {"fillText", "strokeText", "fillRect", "strokeRect",
                        "arc", "bezierCurveTo", "toDataURL", "getImageData"}


@dataclass
class LabelRule:
    category: str
    all_patterns: list[str]
    special: str | None = None
    special_min: int = 0

    def matches(self, text: str) -> bool:
        for pattern in self.all_patterns:
            if not re.search(pattern, text):
                return False
        if self.special == "canvas_long_text":
            if not _LONG_TEXT_CALL_RE.search(text):
                return False
            methods = set(_CANVAS_METHOD_RE.findall(text))
            if methods & _CANVAS_DRAW_METHODS <= {"save", "restore"}:
                return False  # save/restore-only canvas usage
        elif self.special == "distinct_font_assignments":
            fonts = {m.group(2) for m in _FONT_ASSIGN_RE.finditer(text)}
            if len(fonts) < self.special_min:
                return False
        return True


DEFAULT_LABEL_RULES = (
    LabelRule("Canvas",
              [r"toDataURL|getImageData", r"fillText|strokeText"],
              special="canvas_long_text"),
    LabelRule("CanvasFont", [r"measureText"],
              special="distinct_font_assignments", special_min=20),
    LabelRule("WebRTC",
              [r"RTCPeerConnection", r"createDataChannel|createOffer",
               r"onicecandidate"]),
    LabelRule("AudioContext",
              [r"AudioContext|OfflineAudioContext",
               r"createOscillator|createDynamicsCompressor",
               r"getFloatFrequencyData|getChannelData"]),
)


def load_label_rules(path: str | Path) -> list[LabelRule]:
    """JSON config: [{"category", "all", "special"?, "special_min"?}, ...]"""
    rules = []
    for entry in json.loads(Path(path).read_text(encoding="utf-8")):
        rules.append(LabelRule(category=entry["category"],
                               all_patterns=list(entry["all"]),
                               special=entry.get("special"),
                               special_min=int(entry.get("special_min", 0))))
    return rules


@dataclass
class CorpusRecord:
    script: SourceScript
    label: str = "non_fingerprinting"
    categories: list[str] = field(default_factory=list)

    @property
    def id(self) -> str:
        return self.script.id

    def to_json(self) -> dict:
        meta = self.script.meta
        return {
            "id": self.script.id,
            "origin": self.script.origin or "",
            "captured_at": meta.get("captured_at", ""),
            "mime": meta.get("mime", "text/javascript"),
            "status": meta.get("status", ""),
            "size": self.script.byte_len,
            "initiator": meta.get("initiator", ""),
            "wasm_flag": meta.get("wasm_flag", "false"),
            "label": self.label,
            "categories": list(self.categories),
            "text": self.script.text,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CorpusRecord":
        meta = {
            "captured_at": data.get("captured_at", ""),
            "mime": data.get("mime", ""),
            "status": str(data.get("status", "")),
            "initiator": data.get("initiator", ""),
            "wasm_flag": str(data.get("wasm_flag", "false")),
        }
        script = SourceScript.from_text(data["text"],
                                        origin=data.get("origin") or None,
                                        meta=meta)
        return cls(script=script, label=data.get("label", "non_fingerprinting"),
                   categories=list(data.get("categories", [])))


@dataclass
class IngestStats:
    files_read: int = 0
    records: int = 0
    duplicates: int = 0
    decode_errors: int = 0


def _iter_source_texts(path: Path):
    if path.is_dir():
        for child in sorted(path.rglob("*")):
            if child.is_file() and child.suffix in SCRIPT_SUFFIXES:
                yield str(child), child.read_bytes()
    elif path.suffix == ".zip":
        with zipfile.ZipFile(path) as archive:
            for name in sorted(archive.namelist()):
                if Path(name).suffix in SCRIPT_SUFFIXES:
                    yield f"{path}!{name}", archive.read(name)
    elif path.suffix in (".gz", ".tgz") or path.name.endswith(".tar.gz"):
        with tarfile.open(path) as archive:
            for member in sorted(archive.getmembers(), key=lambda m: m.name):
                if member.isfile() and Path(member.name).suffix in SCRIPT_SUFFIXES:
                    handle = archive.extractfile(member)
                    if handle is not None:
                        yield f"{path}!{member.name}", handle.read()
    else:
        yield str(path), path.read_bytes()


def ingest(paths: list[str | Path]) -> tuple[list[CorpusRecord], IngestStats]:
    """Read, normalize (UTF-8, LF), and deduplicate scripts by content hash."""
    stats = IngestStats()
    seen: set[str] = set()
    records: list[CorpusRecord] = []
    for path in paths:
        for origin, raw in _iter_source_texts(Path(path)):
            stats.files_read += 1
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                stats.decode_errors += 1
                logger.warning("skipping %s: %s", origin, exc)
                continue
            meta = {"wasm_flag": "true" if "WebAssembly" in text else "false"}
            script = SourceScript.from_text(text, origin=origin, meta=meta)
            if script.id in seen:
                stats.duplicates += 1
                continue
            seen.add(script.id)
            records.append(CorpusRecord(script=script))
    stats.records = len(records)
    return records, stats


def label_record(record: CorpusRecord,
                 rules: list[LabelRule] | None = None) -> CorpusRecord:
    rules = list(rules) if rules is not None else list(DEFAULT_LABEL_RULES)
    categories = [rule.category for rule in rules
                  if rule.matches(record.script.text)]
    ordered = [c for c in CATEGORY_ORDER if c in categories]
    ordered += [c for c in categories if c not in CATEGORY_ORDER]
    record.categories = ordered
    record.label = "fingerprinting" if ordered else "non_fingerprinting"
    return record


def write_chunks(records: list[CorpusRecord], out_dir: str | Path,
                 chunk_size: int = CHUNK_SIZE) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for index in range(0, max(len(records), 1), chunk_size):
        chunk = records[index:index + chunk_size]
        path = out / f"corpus-{index // chunk_size}.json"
        payload = [record.to_json() for record in chunk]
        path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n",
                        encoding="utf-8")
        paths.append(path)
    return paths


def load_chunks(in_dir: str | Path) -> list[CorpusRecord]:
    records = []
    for path in sorted(Path(in_dir).glob("corpus-*.json")):
        for entry in json.loads(path.read_text(encoding="utf-8")):
            records.append(CorpusRecord.from_json(entry))
    return records


# -- sampling -------------------------------------------------------------------

@dataclass
class SampleSubset:
    index: int
    fp: list[str]
    non_fp: list[str]
    seed: int

    def to_json(self) -> dict:
        return {"index": self.index, "seed": self.seed, "fp": self.fp,
                "non_fp": self.non_fp}


class InsufficientPool(Warning):
    pass


def largest_remainder_quotas(pools: list[int], total: int) -> list[int]:
    """Proportional quotas summing to `total`, remainders settled largest
    first (ties by pool position)."""
    pool_sum = sum(pools)
    if pool_sum == 0:
        return [0] * len(pools)
    shares = [total * p / pool_sum for p in pools]
    quotas = [int(s) for s in shares]
    remainders = sorted(range(len(pools)),
                        key=lambda i: (-(shares[i] - quotas[i]), i))
    for i in range(total - sum(quotas)):
        quotas[remainders[i % len(pools)]] += 1
    return quotas


def reservoir_sample(items, k: int, rng: random.Random) -> list:
    """Vitter's Algorithm R: single pass, uniform without replacement."""
    reservoir = []
    for index, item in enumerate(items):
        if index < k:
            reservoir.append(item)
        else:
            j = rng.randint(0, index)
            if j < k:
                reservoir[j] = item
    return reservoir


def primary_category(record: CorpusRecord) -> str | None:
    for category in CATEGORY_ORDER:
        if category in record.categories:
            return category
    return record.categories[0] if record.categories else None


def sample(records: list[CorpusRecord], n_subsets: int, seed: int,
           fp_total: int = 400, non_fp_total: int = 100) -> list[SampleSubset]:
    """Stratified fingerprinting quotas plus reservoir-sampled benign pool;
    fully reproducible from (record order, seed)."""
    strata: dict[str, list[CorpusRecord]] = {c: [] for c in CATEGORY_ORDER}
    non_fp_pool: list[CorpusRecord] = []
    for record in records:
        category = primary_category(record)
        if record.label == "fingerprinting" and category in strata:
            strata[category].append(record)
        else:
            non_fp_pool.append(record)

    pools = [len(strata[c]) for c in CATEGORY_ORDER]
    quotas = largest_remainder_quotas(pools, min(fp_total, sum(pools)))
    spill = 0
    for i, (quota, pool) in enumerate(zip(quotas, pools)):
        if quota > pool:
            spill += quota - pool
            quotas[i] = pool
            logger.warning("stratum %s cannot meet quota; redistributing",
                           CATEGORY_ORDER[i])
    while spill > 0:
        # hand spilled quota to the stratum with the most headroom
        headroom = [(pools[i] - quotas[i], i) for i in range(len(pools))]
        headroom.sort(key=lambda t: (-t[0], t[1]))
        room, i = headroom[0]
        if room <= 0:
            break
        add = min(room, spill)
        quotas[i] += add
        spill -= add

    subsets = []
    for subset_index in range(1, n_subsets + 1):
        fp_ids: list[str] = []
        for category, quota in zip(CATEGORY_ORDER, quotas):
            pool = strata[category]
            rng = random.Random(f"{seed}:{subset_index}:{category}")
            chosen = (list(pool) if quota >= len(pool)
                      else rng.sample(pool, quota))
            fp_ids.extend(record.id for record in chosen)
        rng = random.Random(f"{seed}:{subset_index}:non_fp")
        non_fp = reservoir_sample(non_fp_pool, min(non_fp_total, len(non_fp_pool)),
                                  rng)
        subsets.append(SampleSubset(index=subset_index, fp=fp_ids,
                                    non_fp=[r.id for r in non_fp], seed=seed))
    return subsets


def write_subsets(subsets: list[SampleSubset], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for subset in subsets:
        path = out / f"subset-{subset.index:02d}.json"
        path.write_text(json.dumps(subset.to_json(), indent=1, sort_keys=True)
                        + "\n", encoding="utf-8")
        paths.append(path)
    return paths
