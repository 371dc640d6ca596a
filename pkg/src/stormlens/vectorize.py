"""Vocabulary construction and sparse count / TF-IDF matrices.

tf(t, d)      = count of t in d / total tokens of d
idf(t)        = log(N / (1 + df(t)))            natural log, kept verbatim:
                it can be zero or negative once 1 + df >= N. A conventional
                smoothed variant log((1+N)/(1+df)) + 1 sits behind a flag.
tfidf(t, d)   = tf(t, d) * idf(t)

The tf denominator counts every token of the document, including tokens a
pruned vocabulary no longer carries; pruned terms simply have no entry.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class VectorizeError(ValueError):
    pass


@dataclass
class Vocabulary:
    term_to_index: dict[str, int]
    index_to_term: list[str]
    doc_freq: np.ndarray  # per-term document frequency
    n_docs: int

    def __len__(self):
        return len(self.index_to_term)

    def __contains__(self, term):
        return term in self.term_to_index

    def index(self, term: str) -> int:
        try:
            return self.term_to_index[term]
        except KeyError:
            raise VectorizeError(f"term {term!r} not in vocabulary") from None

    def df(self, term: str) -> int:
        return int(self.doc_freq[self.index(term)])


def build_vocabulary(docs, min_df=2, max_df_ratio=0.95) -> Vocabulary:
    """Index every term with min_df <= doc_freq <= max_df_ratio * N.

    Terms are indexed in sorted order so indices are dense from 0 and stable
    across runs.
    """
    if min_df < 1:
        raise VectorizeError("min_df must be >= 1")
    if not (0 < max_df_ratio <= 1):
        raise VectorizeError("max_df_ratio must be in (0, 1]")
    docs = list(docs)
    if not docs:
        raise VectorizeError("empty corpus")
    df_counts: dict[str, int] = {}
    for doc in docs:
        for term in set(doc):
            df_counts[term] = df_counts.get(term, 0) + 1
    n = len(docs)
    cutoff = max_df_ratio * n
    kept = sorted(t for t, c in df_counts.items() if c >= min_df and c <= cutoff)
    if not kept:
        raise VectorizeError("vocabulary is empty after pruning")
    return Vocabulary(
        term_to_index={t: i for i, t in enumerate(kept)},
        index_to_term=kept,
        doc_freq=np.array([df_counts[t] for t in kept], dtype=np.int64),
        n_docs=n,
    )


def tf(term, doc) -> float:
    """Relative frequency of term within doc. Sums to 1 over the doc's terms."""
    doc = list(doc)
    if not doc:
        raise VectorizeError("tf undefined for an empty document")
    return doc.count(term) / len(doc)


def idf(term, vocab: Vocabulary, smooth=False) -> float:
    d = vocab.df(term)
    if smooth:
        return math.log((1 + vocab.n_docs) / (1 + d)) + 1.0
    return math.log(vocab.n_docs / (1 + d))


@dataclass
class SparseDocTermMatrix:
    """Row-major sparse docs x terms matrix (CSR layout).

    No explicit zeros are stored and indices are strictly increasing within
    each row.
    """

    shape: tuple[int, int]
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    kind: str = "counts"  # counts | tfidf

    @property
    def nnz(self):
        return len(self.data)

    def row(self, d):
        lo, hi = self.indptr[d], self.indptr[d + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def get(self, d, t) -> float:
        idx, vals = self.row(d)
        pos = np.searchsorted(idx, t)
        if pos < len(idx) and idx[pos] == t:
            return float(vals[pos])
        return 0.0

    def toarray(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for d in range(self.shape[0]):
            idx, vals = self.row(d)
            out[d, idx] = vals
        return out

    def dot_dense(self, m: np.ndarray) -> np.ndarray:
        """self @ m for a dense m (terms x k)."""
        k = m.shape[1]
        out = np.zeros((self.shape[0], k))
        if self.nnz == 0:
            return out
        contrib = self.data[:, None] * m[self.indices]
        counts = np.diff(self.indptr)
        rows = np.repeat(np.arange(self.shape[0]), counts)
        np.add.at(out, rows, contrib)
        return out

    def t_dot_dense(self, m: np.ndarray) -> np.ndarray:
        """self.T @ m for a dense m (docs x k)."""
        k = m.shape[1]
        out = np.zeros((self.shape[1], k))
        if self.nnz == 0:
            return out
        counts = np.diff(self.indptr)
        rows = np.repeat(np.arange(self.shape[0]), counts)
        np.add.at(out, self.indices, self.data[:, None] * m[rows])
        return out

    def save_csv(self, matrix_path, vocab: Vocabulary | None = None, vocab_path=None):
        """Triplet export `doc,term_index,weight`, plus an optional vocabulary
        sidecar `index,term,doc_freq`."""
        with Path(matrix_path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["doc", "term_index", "weight"])
            for d in range(self.shape[0]):
                idx, vals = self.row(d)
                for t, v in zip(idx, vals):
                    w.writerow([d, int(t), repr(float(v))])
        if vocab is not None and vocab_path is not None:
            with Path(vocab_path).open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["index", "term", "doc_freq"])
                for i, term in enumerate(vocab.index_to_term):
                    w.writerow([i, term, int(vocab.doc_freq[i])])

    @classmethod
    def load_csv(cls, matrix_path, shape, kind="counts"):
        rows = {}
        with Path(matrix_path).open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                rows.setdefault(int(row["doc"]), []).append(
                    (int(row["term_index"]), float(row["weight"]))
                )
        indptr = [0]
        indices, data = [], []
        for d in range(shape[0]):
            for t, v in sorted(rows.get(d, [])):
                indices.append(t)
                data.append(v)
            indptr.append(len(indices))
        return cls(
            shape=tuple(shape),
            indptr=np.array(indptr, dtype=np.int64),
            indices=np.array(indices, dtype=np.int64),
            data=np.array(data, dtype=np.float64),
            kind=kind,
        )


def _build_csr(docs, vocab, weigh):
    indptr = [0]
    indices, data = [], []
    for doc in docs:
        doc = list(doc)
        counts: dict[int, int] = {}
        for term in doc:
            j = vocab.term_to_index.get(term)
            if j is not None:
                counts[j] = counts.get(j, 0) + 1
        row = []
        for j in sorted(counts):
            v = weigh(j, counts[j], len(doc))
            if v != 0.0:
                row.append((j, v))
        indices.extend(j for j, _ in row)
        data.extend(v for _, v in row)
        indptr.append(len(indices))
    return (
        np.array(indptr, dtype=np.int64),
        np.array(indices, dtype=np.int64),
        np.array(data, dtype=np.float64),
    )


def count_matrix(docs, vocab: Vocabulary) -> SparseDocTermMatrix:
    docs = list(docs)
    indptr, indices, data = _build_csr(docs, vocab, lambda j, c, n: float(c))
    return SparseDocTermMatrix(
        shape=(len(docs), len(vocab)), indptr=indptr, indices=indices, data=data, kind="counts"
    )


def tfidf_matrix(docs, vocab: Vocabulary, smooth_idf=False, clamp_nonnegative=False) -> SparseDocTermMatrix:
    """Entry (d, t) = tf(t, d) * idf(t). Exact zeros are not stored; with
    clamp_nonnegative, negative products are zeroed (and so dropped) too."""
    docs = list(docs)
    idf_vec = np.empty(len(vocab))
    for j in range(len(vocab)):
        d = int(vocab.doc_freq[j])
        if smooth_idf:
            idf_vec[j] = math.log((1 + vocab.n_docs) / (1 + d)) + 1.0
        else:
            idf_vec[j] = math.log(vocab.n_docs / (1 + d))

    def weigh(j, count, doc_len):
        v = (count / doc_len) * idf_vec[j]
        if clamp_nonnegative and v < 0:
            return 0.0
        return v

    indptr, indices, data = _build_csr(docs, vocab, weigh)
    return SparseDocTermMatrix(
        shape=(len(docs), len(vocab)), indptr=indptr, indices=indices, data=data, kind="tfidf"
    )


def docs_as_term_ids(docs, vocab: Vocabulary) -> list[np.ndarray]:
    """Token lists mapped to vocabulary indices; out-of-vocabulary tokens drop out."""
    out = []
    for doc in docs:
        ids = [vocab.term_to_index[t] for t in doc if t in vocab.term_to_index]
        out.append(np.array(ids, dtype=np.int32))
    return out
