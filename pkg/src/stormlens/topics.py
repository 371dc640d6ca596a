"""Topic modeling: collapsed Gibbs LDA, UMass coherence, sweep and elbow selection."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _gibbs
from .vectorize import Vocabulary


class TopicModelError(ValueError):
    pass


@dataclass
class LdaModel:
    """Gibbs state after fitting: per-token assignments plus count tables.

    The count tables are fully determined by (tokens, doc_of, z) and can be
    recomputed from them; theta/phi are the usual smoothed point estimates.
    """

    n_topics: int
    alpha: float
    beta: float
    vocab_size: int
    tokens: np.ndarray       # flat term ids
    doc_of: np.ndarray       # flat doc index per token
    doc_lengths: np.ndarray
    z: np.ndarray            # flat topic assignment per token
    n_dk: np.ndarray
    n_kw: np.ndarray
    n_k: np.ndarray
    seed: int
    iterations: int
    perplexity_history: list = field(default_factory=list)  # (sweep, value)

    @property
    def n_docs(self):
        return self.n_dk.shape[0]

    def phi(self) -> np.ndarray:
        """Topic-word point estimate, rows sum to 1."""
        return (self.n_kw + self.beta) / (self.n_k[:, None] + self.vocab_size * self.beta)

    def theta(self) -> np.ndarray:
        """Doc-topic point estimate, rows sum to 1."""
        return (self.n_dk + self.alpha) / (
            self.doc_lengths[:, None] + self.n_topics * self.alpha
        )

    def recompute_counts(self):
        """Rebuild the count tables from z; used to check bookkeeping."""
        n_dk = np.zeros_like(self.n_dk)
        n_kw = np.zeros_like(self.n_kw)
        n_k = np.zeros_like(self.n_k)
        np.add.at(n_dk, (self.doc_of, self.z), 1)
        np.add.at(n_kw, (self.z, self.tokens), 1)
        np.add.at(n_k, self.z, 1)
        return n_dk, n_kw, n_k

    def save_assignments(self, path):
        """Reloadable dump, one row per token: doc,position,topic."""
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["doc", "position", "topic"])
            pos = 0
            prev_doc = -1
            for i in range(len(self.tokens)):
                d = int(self.doc_of[i])
                pos = pos + 1 if d == prev_doc else 0
                prev_doc = d
                w.writerow([d, pos, int(self.z[i])])


def _flatten(doc_term_ids):
    lengths = np.array([len(d) for d in doc_term_ids], dtype=np.int64)
    if len(lengths) == 0:
        raise TopicModelError("empty corpus")
    if (lengths == 0).any():
        bad = int(np.argmax(lengths == 0))
        raise TopicModelError(f"document {bad} has no tokens")
    tokens = np.concatenate([np.asarray(d, dtype=np.int32) for d in doc_term_ids])
    doc_of = np.repeat(np.arange(len(doc_term_ids), dtype=np.int32), lengths)
    return tokens, doc_of, lengths


def perplexity(model: LdaModel) -> float:
    """Held-in per-token perplexity under the theta/phi point estimates."""
    log_phi = np.log(model.phi())
    log_theta = np.log(model.theta())
    # log sum_k theta[d,k] phi[k,w] per token, streamed in chunks
    ll = 0.0
    chunk = 65536
    for lo in range(0, len(model.tokens), chunk):
        d = model.doc_of[lo : lo + chunk]
        w = model.tokens[lo : lo + chunk]
        scores = log_theta[d] + log_phi[:, w].T
        m = scores.max(axis=1)
        ll += float((m + np.log(np.exp(scores - m[:, None]).sum(axis=1))).sum())
    return math.exp(-ll / len(model.tokens))


def lda_fit(
    doc_term_ids,
    vocab_size: int,
    n_topics: int,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 200,
    seed: int = 0,
    checkpoints=(),
) -> LdaModel:
    """Fit LDA by collapsed Gibbs sampling.

    alpha defaults to 50/K. `checkpoints` is an ascending list of sweep
    counts at which per-token perplexity is recorded. Deterministic for a
    fixed seed.
    """
    if n_topics < 2:
        raise TopicModelError("n_topics must be >= 2")
    if alpha is None:
        alpha = 50.0 / n_topics
    if alpha <= 0 or beta <= 0:
        raise TopicModelError("alpha and beta must be positive")
    if iterations < 1:
        raise TopicModelError("iterations must be >= 1")
    if vocab_size < 1:
        raise TopicModelError("vocab_size must be >= 1")
    tokens, doc_of, lengths = _flatten(doc_term_ids)
    if tokens.max(initial=-1) >= vocab_size:
        raise TopicModelError("term id out of range for vocab_size")
    if n_topics > len(tokens):
        warnings.warn(f"n_topics={n_topics} exceeds the corpus token count {len(tokens)}")

    z, n_dk, n_kw, n_k, state = _gibbs.init_state(
        tokens, doc_of, n_topics, vocab_size, np.uint64(seed)
    )
    model = LdaModel(
        n_topics=n_topics, alpha=float(alpha), beta=float(beta), vocab_size=vocab_size,
        tokens=tokens, doc_of=doc_of, doc_lengths=lengths, z=z,
        n_dk=n_dk, n_kw=n_kw, n_k=n_k, seed=seed, iterations=iterations,
    )
    marks = sorted(set(int(c) for c in checkpoints if 0 < int(c) <= iterations))
    done = 0
    for mark in dict.fromkeys(marks + [iterations]):
        step = mark - done
        if step > 0:
            state = _gibbs.run_sweeps(
                tokens, doc_of, z, n_dk, n_kw, n_k, float(alpha), float(beta),
                step, np.uint64(state)
            )
            done = mark
        if mark in marks:
            model.perplexity_history.append((mark, perplexity(model)))
    return model


@dataclass
class TopicSummary:
    topic: int
    term_ids: list[int]
    probabilities: list[float]
    terms: list[str] | None = None


def topic_top_terms(model: LdaModel, topic: int, n: int, vocab: Vocabulary | None = None) -> TopicSummary:
    """The n most probable terms of one topic, ties broken by term index."""
    if not (0 <= topic < model.n_topics):
        raise TopicModelError(f"topic {topic} out of range")
    if n < 1:
        raise TopicModelError("n must be >= 1")
    if n > model.vocab_size:
        warnings.warn(f"n={n} exceeds vocabulary size {model.vocab_size}; returning all terms")
        n = model.vocab_size
    row = model.phi()[topic]
    order = np.lexsort((np.arange(model.vocab_size), -row))[:n]
    return TopicSummary(
        topic=topic,
        term_ids=[int(j) for j in order],
        probabilities=[float(row[j]) for j in order],
        terms=[vocab.index_to_term[int(j)] for j in order] if vocab is not None else None,
    )


def doc_topic_distribution(model: LdaModel, d: int) -> np.ndarray:
    if not (0 <= d < model.n_docs):
        raise TopicModelError(f"document {d} out of range")
    return model.theta()[d]


def umass_coherence(terms, docs) -> float:
    """UMass score of an ordered top-N term list over document (co-)occurrence
    counts: sum over pairs of log((co(w_i, w_j) + 1) / occ(w_j)) with j < i.

    Terms must be ordered most-probable first; every term must occur in at
    least one document.
    """
    term_list = list(terms)
    if len(term_list) < 2:
        raise TopicModelError("need at least 2 terms for coherence")
    doc_sets = [d if isinstance(d, (set, frozenset)) else set(d) for d in docs]
    return _umass(term_list, doc_sets)


def _umass(term_list, doc_sets):
    occ = {}
    for t in term_list:
        occ[t] = sum(1 for s in doc_sets if t in s)
        if occ[t] == 0:
            raise TopicModelError(f"term {t!r} does not occur in the corpus")
    score = 0.0
    for i in range(1, len(term_list)):
        wi = term_list[i]
        for j in range(i):
            wj = term_list[j]
            co = sum(1 for s in doc_sets if wi in s and wj in s)
            score += math.log((co + 1) / occ[wj])
    return score


@dataclass
class CoherenceReport:
    k_values: list[int]
    scores: list[float]
    top_n: int
    selected_k: int | None = None
    selection_rule: str | None = None

    def save_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["K", "umass_mean"])
            for k, s in zip(self.k_values, self.scores):
                w.writerow([k, repr(float(s))])


def elbow_select(report: CoherenceReport, override: int | None = None) -> int:
    """Pick the sweep point where the improvement rate drops the most.

    Interior points are scored 2*s_i - s_{i-1} - s_{i+1} (the second
    difference of the loss-like negated curve); endpoints score 0; ties go
    to the smallest K. With fewer than 3 points the best-scoring K is
    returned with a warning. A manual override is honored when valid.
    """
    ks = list(report.k_values)
    scores = [float(s) for s in report.scores]
    if len(ks) != len(scores) or not ks:
        raise TopicModelError("report needs one score per K")
    if sorted(ks) != ks:
        raise TopicModelError("K values must be ascending")
    if override is not None:
        if override not in ks:
            raise TopicModelError(f"override K={override} not in swept set {ks}")
        report.selected_k, report.selection_rule = int(override), "manual"
        return int(override)
    if len(ks) < 3:
        warnings.warn("fewer than 3 sweep points; falling back to best score")
        best = max(range(len(ks)), key=lambda i: (scores[i], -ks[i]))
        report.selected_k, report.selection_rule = ks[best], "best-score"
        return ks[best]
    drop = [0.0] * len(ks)
    for i in range(1, len(ks) - 1):
        drop[i] = 2 * scores[i] - scores[i - 1] - scores[i + 1]
    best = max(range(len(ks)), key=lambda i: (drop[i], -ks[i]))
    report.selected_k, report.selection_rule = ks[best], "elbow"
    return ks[best]


def coherence_sweep(
    doc_term_ids,
    k_values,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 200,
    seed: int = 0,
    top_n: int = 10,
) -> CoherenceReport:
    """Fit one LDA per K (seed + K each) and report the per-K mean UMass
    coherence over topics, ascending in K, with the elbow selection applied."""
    ks = sorted(set(int(k) for k in k_values))
    if not ks:
        raise TopicModelError("empty K range")
    doc_sets = [frozenset(int(t) for t in d) for d in doc_term_ids]
    vocab_size = max((int(d.max()) for d in map(np.asarray, doc_term_ids) if len(d)), default=-1) + 1
    scores = []
    for k in ks:
        model = lda_fit(
            doc_term_ids, vocab_size, k, alpha=alpha, beta=beta,
            iterations=iterations, seed=seed + k,
        )
        topic_scores = []
        for t in range(k):
            top = topic_top_terms(model, t, min(top_n, vocab_size))
            topic_scores.append(_umass(top.term_ids, doc_sets))
        scores.append(float(np.mean(topic_scores)))
    report = CoherenceReport(k_values=ks, scores=scores, top_n=top_n)
    elbow_select(report)
    return report


def k_range(lo: int, hi: int, step: int = 1) -> list[int]:
    """Inclusive sweep range, e.g. (20, 70, 5) -> [20, 25, ..., 70]."""
    if step < 1:
        raise TopicModelError("step must be >= 1")
    if hi < lo:
        raise TopicModelError("empty K range")
    return list(range(lo, hi + 1, step))


def save_top_terms_csv(model: LdaModel, vocab: Vocabulary, path, n=10):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["topic", "rank", "term", "probability"])
        for k in range(model.n_topics):
            summary = topic_top_terms(model, k, n, vocab)
            for r, (term, p) in enumerate(zip(summary.terms, summary.probabilities)):
                w.writerow([k, r, term, repr(float(p))])
