"""Tweet corpus loading, text cleaning, tokenization and stopword filtering."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from pathlib import Path

# Symbol blocks stripped by default. Data sources differ in which decorations
# they inject, so the exact set stays configurable.
DEFAULT_STRIP_RANGES = (
    (0x1F000, 0x1FFFF),  # emoji / pictographs / supplemental symbols
    (0x2600, 0x27BF),    # misc symbols, dingbats
    (0x2190, 0x21FF),    # arrows
    (0x2B00, 0x2BFF),    # misc symbols and arrows
    (0xFE00, 0xFE0F),    # variation selectors
    (0x200B, 0x200F),    # zero-width chars, direction marks
)

# Irregular forms the suffix stripper cannot reach.
DEFAULT_LEMMA_TABLE = {
    "am": "be", "is": "be", "are": "be", "was": "be", "were": "be",
    "being": "be", "been": "be",
    "has": "have", "had": "have", "having": "have",
    "does": "do", "did": "do", "doing": "do", "done": "do",
    "goes": "go", "went": "go", "gone": "go", "going": "go",
    "says": "say", "said": "say", "saying": "say",
    "made": "make", "making": "make",
    "got": "get", "gotten": "get", "getting": "get",
    "took": "take", "taken": "take", "taking": "take",
    "came": "come", "coming": "come",
    "saw": "see", "seen": "see", "seeing": "see",
    "children": "child", "people": "people",
}

EMOTION_VALUES = ("positive", "negative", "neutral")


@dataclass
class TweetRecord:
    """One document: raw text plus the normalized token list filled by cleaning."""

    id: str
    raw_text: str
    timestamp: datetime | None = None
    tokens: list[str] = field(default_factory=list)
    emotion: str | None = None


@dataclass
class CleaningConfig:
    strip_urls: bool = True
    strip_unicode_ranges: tuple = DEFAULT_STRIP_RANGES
    lowercase: bool = True
    min_token_len: int = 2
    lemma_table: dict = field(default_factory=lambda: dict(DEFAULT_LEMMA_TABLE))
    stemmer_enabled: bool = True

    def __post_init__(self):
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        self.strip_unicode_ranges = tuple(
            (int(lo), int(hi)) for lo, hi in self.strip_unicode_ranges
        )
        for lo, hi in self.strip_unicode_ranges:
            if lo > hi:
                raise ValueError(f"malformed codepoint interval ({lo:#x}, {hi:#x})")


class StopwordSet:
    """Case-insensitive stopword lookup with a base list plus a domain extension.

    Domain terms are where corpus-specific noise goes (event names, place
    names, terms that dominate every document).
    """

    def __init__(self, base=(), domain=()):
        self.base = {t.casefold() for t in base if t}
        self.domain = {t.casefold() for t in domain if t}

    def __contains__(self, term: str) -> bool:
        t = term.casefold()
        return t in self.base or t in self.domain

    def __len__(self):
        return len(self.base | self.domain)

    def add_domain(self, terms):
        self.domain.update(t.casefold() for t in terms if t)

    @classmethod
    def from_files(cls, paths, extra=()):
        """Read stopword files (UTF-8, one term per line, '#' starts a comment)."""
        base = set()
        for path in paths:
            for line in Path(path).read_text(encoding="utf-8").splitlines():
                term = line.split("#", 1)[0].strip()
                if term:
                    base.add(term)
        return cls(base=base, domain=extra)


@lru_cache(maxsize=8)
def _strip_regex(ranges):
    cls = "".join(f"{chr(lo)}-{chr(hi)}" for lo, hi in ranges)
    return re.compile(f"[{cls}]")


def clean_text(raw: str, cfg: CleaningConfig) -> str:
    """Normalize one raw tweet: case-fold, drop http-bearing tokens, strip
    configured codepoint ranges, collapse whitespace. Total and idempotent."""
    text = raw.lower() if cfg.lowercase else raw
    if cfg.strip_urls:
        text = " ".join(t for t in text.split() if "http" not in t.lower())
    if cfg.strip_unicode_ranges:
        text = _strip_regex(cfg.strip_unicode_ranges).sub("", text)
    return " ".join(text.split())


_VOWELS = set("aeiou")


def _has_vowel(s):
    return any(c in _VOWELS for c in s)


def _ends_cvc(s):
    # consonant-vowel-consonant, final consonant not w/x/y (so "stay" stays).
    if len(s) < 3:
        return False
    a, b, c = s[-3], s[-2], s[-1]
    return a not in _VOWELS and b in _VOWELS and c not in _VOWELS and c not in "wxy"


def stem(token: str) -> str:
    """Conservative Porter-style suffix stripper.

    Handles plurals and -ing/-ed with the usual double-consonant and
    cvc+e repairs (hopping -> hop, hoping -> hope, loved -> love).
    Deliberately does not touch -ly/-tion/-ness; topic terms stay readable.
    """
    t = token
    if t.endswith("sses"):
        t = t[:-2]
    elif t.endswith("ies") and len(t) > 4:
        t = t[:-2]
    elif t.endswith(("ss", "us", "is")):
        pass
    elif t.endswith("s") and len(t) > 3:
        t = t[:-1]
    for suf in ("ing", "ed"):
        if t.endswith(suf):
            base = t[: -len(suf)]
            if len(base) >= 3 and _has_vowel(base):
                t = base
                if len(t) >= 2 and t[-1] == t[-2] and t[-1] not in "lsz":
                    t = t[:-1]
                elif _ends_cvc(t):
                    t = t + "e"
            break
    return t


_APOSTROPHES = str.maketrans("", "", "'’")
_SPLIT = re.compile(r"[^a-z0-9]+", re.IGNORECASE)


def tokenize_and_normalize(clean: str, cfg: CleaningConfig, stops: StopwordSet) -> list[str]:
    """Split cleaned text into normalized terms.

    Apostrophes are deleted (don't -> dont) before the punctuation split,
    then: length filter, lemma table, stemmer. Stopword and length filters
    are re-applied to the final forms so no output token is a stopword or
    shorter than min_token_len regardless of what normalization produced.
    """
    out = []
    for tok in _SPLIT.split(clean.translate(_APOSTROPHES)):
        if len(tok) < cfg.min_token_len:
            continue
        tok = cfg.lemma_table.get(tok, tok)
        if cfg.stemmer_enabled:
            tok = stem(tok)
        if len(tok) < cfg.min_token_len or tok in stops or "http" in tok:
            continue
        out.append(tok)
    return out


@dataclass
class LoadResult:
    """Corpus load outcome: records plus an itemized skip report."""

    records: list[TweetRecord]
    rows_in: int = 0
    skips: list[tuple[int, str]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


class CorpusFormatError(ValueError):
    pass


def _parse_time(value):
    if not value:
        return None
    try:
        return datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    except ValueError:
        return None


def _normalize_emotion(value, where):
    if value is None or value == "":
        return None
    label = str(value).strip().casefold()
    if label not in EMOTION_VALUES:
        raise CorpusFormatError(f"{where}: unknown emotion label {value!r}")
    return label


def load_corpus(path, format="csv", column_map=None, strict=False) -> LoadResult:
    """Load a tweet corpus from CSV (header row required) or JSONL.

    column_map keys: text (required), id, time, emotion. Rows with empty
    text are skipped and counted; malformed rows are skipped with their
    line number under lenient mode and fatal under strict mode.
    """
    cm = {"text": "text", "id": "id", "time": None, "emotion": None}
    cm.update(column_map or {})
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    if format not in ("csv", "jsonl"):
        raise CorpusFormatError(f"unknown corpus format {format!r}")

    result = LoadResult(records=[])
    seen_ids = set()

    def emit(line_no, row_id, text, time_val, emo_val):
        result.rows_in += 1
        if text is None or not str(text).strip():
            result.skips.append((line_no, "empty text"))
            return
        rid = str(row_id) if row_id not in (None, "") else f"row{result.rows_in}"
        if rid in seen_ids:
            if strict:
                raise CorpusFormatError(f"line {line_no}: duplicate id {rid!r}")
            result.skips.append((line_no, f"duplicate id {rid!r}"))
            return
        try:
            emotion = _normalize_emotion(emo_val, f"line {line_no}")
        except CorpusFormatError:
            if strict:
                raise
            result.skips.append((line_no, f"bad emotion label {emo_val!r}"))
            return
        seen_ids.add(rid)
        result.records.append(
            TweetRecord(id=rid, raw_text=str(text), timestamp=_parse_time(time_val), emotion=emotion)
        )

    if format == "csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or cm["text"] not in reader.fieldnames:
                raise CorpusFormatError(
                    f"{path}: text column {cm['text']!r} not in header {reader.fieldnames}"
                )
            for row in reader:
                line_no = reader.line_num
                if None in row and row[None]:
                    if strict:
                        raise CorpusFormatError(f"line {line_no}: extra unnamed fields")
                    result.rows_in += 1
                    result.skips.append((line_no, "malformed row (field count)"))
                    continue
                emit(
                    line_no,
                    row.get(cm["id"]) if cm["id"] else None,
                    row.get(cm["text"]),
                    row.get(cm["time"]) if cm["time"] else None,
                    row.get(cm["emotion"]) if cm["emotion"] else None,
                )
    else:
        with path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    if strict:
                        raise CorpusFormatError(f"line {line_no}: bad JSON ({exc})") from exc
                    result.rows_in += 1
                    result.skips.append((line_no, "bad JSON"))
                    continue
                if cm["text"] not in obj:
                    if strict:
                        raise CorpusFormatError(f"line {line_no}: missing field {cm['text']!r}")
                    result.rows_in += 1
                    result.skips.append((line_no, f"missing field {cm['text']!r}"))
                    continue
                emit(
                    line_no,
                    obj.get(cm["id"]) if cm["id"] else None,
                    obj.get(cm["text"]),
                    obj.get(cm["time"]) if cm["time"] else None,
                    obj.get(cm["emotion"]) if cm["emotion"] else None,
                )
    return result


def apply_cleaning(records, cfg: CleaningConfig, stops: StopwordSet):
    """Fill record.tokens in place. Pure per record; order preserved."""
    for rec in records:
        rec.tokens = tokenize_and_normalize(clean_text(rec.raw_text, cfg), cfg, stops)
    return records
