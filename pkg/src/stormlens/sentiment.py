"""Three-way sentiment labeling and per-sentiment summaries.

Label precedence in the pipeline: external label file > emotion column in
the input > valence-lexicon fallback. The lexicon route keeps the whole
pipeline runnable offline and deterministic.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .ingest import EMOTION_VALUES, TweetRecord


class LabelError(ValueError):
    pass


@dataclass
class ValenceLexicon:
    """term -> valence score map with a neutral band of width 2*threshold."""

    entries: dict[str, float]
    threshold: float = 0.5

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")

    @classmethod
    def from_csv(cls, path, threshold=0.5):
        """Lexicon file: CSV `term,score` with a header row."""
        entries = {}
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "term" not in reader.fieldnames or "score" not in reader.fieldnames:
                raise LabelError(f"{path}: lexicon needs 'term,score' header")
            for row in reader:
                term = row["term"].strip().casefold()
                if term in entries:
                    raise LabelError(f"{path}: duplicate lexicon term {term!r}")
                entries[term] = float(row["score"])
        return cls(entries=entries, threshold=threshold)

    @classmethod
    def bundled(cls, threshold=0.5):
        """The small default lexicon shipped with the package (stemmed forms)."""
        ref = resources.files("stormlens.data").joinpath("default_lexicon.csv")
        with resources.as_file(ref) as path:
            return cls.from_csv(path, threshold=threshold)


@dataclass
class LabelJoinReport:
    matched: int = 0
    unmatched_record_ids: list[str] = field(default_factory=list)
    unknown_label_ids: list[str] = field(default_factory=list)


def ingest_external_labels(records, labels_path) -> LabelJoinReport:
    """Join a `id,emotion` CSV onto the records, in place.

    Unknown label strings and duplicate ids in the file are fatal. Records
    without a label row are reported, not failed.
    """
    table = {}
    with Path(labels_path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames or "emotion" not in reader.fieldnames:
            raise LabelError(f"{labels_path}: label file needs 'id,emotion' header")
        for row in reader:
            rid = row["id"].strip()
            label = row["emotion"].strip().casefold()
            if label not in EMOTION_VALUES:
                raise LabelError(f"{labels_path}: unknown label {row['emotion']!r} for id {rid!r}")
            if rid in table:
                raise LabelError(f"{labels_path}: id {rid!r} appears more than once")
            table[rid] = label

    report = LabelJoinReport()
    if not table:
        warnings.warn(f"{labels_path}: empty label file, no records labeled")
    corpus_ids = set()
    for rec in records:
        corpus_ids.add(rec.id)
        label = table.get(rec.id)
        if label is None:
            report.unmatched_record_ids.append(rec.id)
        else:
            rec.emotion = label
            report.matched += 1
    report.unknown_label_ids = sorted(set(table) - corpus_ids)
    return report


def lexicon_classify(record: TweetRecord, lex: ValenceLexicon) -> str:
    """Sum token valences; score > t -> positive, < -t -> negative, else neutral.

    Deterministic and invariant under token permutation (it is a sum).
    """
    score = sum(lex.entries.get(tok, 0.0) for tok in record.tokens)
    if score > lex.threshold:
        return "positive"
    if score < -lex.threshold:
        return "negative"
    return "neutral"


def apply_labels(records, labels_path=None, lexicon=None) -> LabelJoinReport:
    """Resolve every record's emotion by precedence: file > preexisting > lexicon."""
    report = LabelJoinReport()
    if labels_path is not None:
        report = ingest_external_labels(records, labels_path)
    lex = lexicon
    for rec in records:
        if rec.emotion is None:
            if lex is None:
                lex = ValenceLexicon.bundled()
            rec.emotion = lexicon_classify(rec, lex)
    return report


def emotion_distribution(records) -> dict[str, int]:
    """Counts per label; every record must already be labeled."""
    counts = {label: 0 for label in EMOTION_VALUES}
    for rec in records:
        if rec.emotion not in counts:
            raise LabelError(f"record {rec.id!r} is unlabeled or mislabeled ({rec.emotion!r})")
        counts[rec.emotion] += 1
    return counts


def partition_by_emotion(records) -> dict[str, list[TweetRecord]]:
    """Disjoint sentiment subsets whose union is the labeled corpus."""
    parts = {label: [] for label in EMOTION_VALUES}
    for rec in records:
        if rec.emotion not in parts:
            raise LabelError(f"record {rec.id!r} is unlabeled")
        parts[rec.emotion].append(rec)
    return parts


def top_words_by_sentiment(records, n=20, ranking="frequency"):
    """Per-label ranked term lists: n best terms by frequency (default) or by
    mean TF-IDF weight across the label's documents. Ties break lexicographically.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if ranking not in ("frequency", "mean_tfidf"):
        raise ValueError(f"unknown ranking {ranking!r}")
    parts = partition_by_emotion(records)
    out = {}
    if ranking == "frequency":
        for label, recs in parts.items():
            counts = {}
            for rec in recs:
                for tok in rec.tokens:
                    counts[tok] = counts.get(tok, 0) + 1
            ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
            out[label] = [(term, float(c)) for term, c in ranked[:n]]
        return out

    # mean TF-IDF: weights computed once over the whole labeled corpus, then
    # averaged within each label's documents (zero rows included in the mean).
    from .vectorize import build_vocabulary, tfidf_matrix

    docs = [rec.tokens for rec in records]
    nonempty = [d for d in docs if d]
    if not nonempty:
        return {label: [] for label in parts}
    vocab = build_vocabulary(nonempty, min_df=1, max_df_ratio=1.0)
    mat = tfidf_matrix(docs, vocab)
    dense = mat.toarray()
    row_of = {id(rec): i for i, rec in enumerate(records)}
    for label, recs in parts.items():
        if not recs:
            out[label] = []
            continue
        rows = [row_of[id(rec)] for rec in recs]
        means = dense[rows].mean(axis=0)
        order = sorted(range(len(means)), key=lambda j: (-means[j], vocab.index_to_term[j]))
        out[label] = [
            (vocab.index_to_term[j], float(means[j])) for j in order[:n] if means[j] > 0
        ]
    return out
