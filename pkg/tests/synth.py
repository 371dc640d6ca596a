"""Synthetic data generators shared across the test modules.

Everything here is built with independent, straightforward code so tests
compare the library against constructions it does not share internals with.
"""

from __future__ import annotations

import numpy as np


def random_token_corpus(
    rng: np.random.Generator,
    n_docs: int = 20,
    vocab_size: int = 30,
    min_len: int = 1,
    max_len: int = 25,
) -> list[list[str]]:
    """Documents of word-like tokens drawn from a closed vocabulary."""
    vocab = [f"w{i:03d}" for i in range(vocab_size)]
    docs = []
    for _ in range(n_docs):
        length = int(rng.integers(min_len, max_len + 1))
        docs.append([vocab[int(rng.integers(vocab_size))] for _ in range(length)])
    return docs


def planted_topic_corpus(
    rng: np.random.Generator,
    n_topics: int = 3,
    terms_per_topic: int = 30,
    n_docs: int = 300,
    doc_len: int = 50,
) -> tuple[list[np.ndarray], list[int], int]:
    """Pure-topic documents over disjoint per-topic vocabularies.

    Topic t owns term ids [t*terms_per_topic, (t+1)*terms_per_topic).
    Returns (docs as term-id arrays, true topic per doc, vocab size).
    """
    vocab_size = n_topics * terms_per_topic
    docs = []
    truth = []
    for d in range(n_docs):
        topic = d % n_topics
        lo = topic * terms_per_topic
        ids = lo + rng.integers(0, terms_per_topic, size=doc_len)
        docs.append(ids.astype(np.int64))
        truth.append(topic)
    return docs, truth, vocab_size


def two_block_sbm(
    rng: np.random.Generator,
    block_size: int = 20,
    p_in: float = 0.5,
    p_out: float = 0.02,
) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric two-block stochastic block model adjacency plus labels."""
    n = 2 * block_size
    labels = np.repeat([0, 1], block_size)
    adj = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if labels[i] == labels[j] else p_out
            if rng.random() < p:
                adj[i, j] = adj[j, i] = 1.0
    return adj, labels


def two_blobs(
    rng: np.random.Generator,
    n_per: int = 20,
    spread: float = 0.5,
    centers: tuple = ((5.0, 0.0), (0.0, 5.0)),
) -> tuple[np.ndarray, np.ndarray]:
    """Two well-separated gaussian point clouds away from the origin.

    Kept off the origin so both euclidean and cosine geometry separate them.
    """
    pts = []
    for center in centers:
        pts.append(rng.normal(center, spread, size=(n_per, len(center))))
    labels = np.repeat(np.arange(len(centers)), n_per)
    return np.vstack(pts), labels


def silhouette_oracle(x: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Textbook quadratic-time silhouette, written independently."""
    n = x.shape[0]
    out = np.zeros(n)
    for i in range(n):
        own = labels[i]
        same = [j for j in range(n) if labels[j] == own and j != i]
        if not same:
            continue
        a = np.mean([np.linalg.norm(x[i] - x[j]) for j in same])
        b = np.inf
        for other in set(labels.tolist()) - {own}:
            members = [j for j in range(n) if labels[j] == other]
            b = min(b, np.mean([np.linalg.norm(x[i] - x[j]) for j in members]))
        denom = max(a, b)
        out[i] = 0.0 if denom == 0 else (b - a) / denom
    return out


def umass_oracle(term_ids: list[int], doc_sets: list[frozenset]) -> float:
    """Pairwise UMass coherence straight from the definition."""
    total = 0.0
    for i in range(1, len(term_ids)):
        for j in range(i):
            co = sum(1 for d in doc_sets if term_ids[i] in d and term_ids[j] in d)
            occ = sum(1 for d in doc_sets if term_ids[j] in d)
            total += np.log((co + 1.0) / occ)
    return total


def tfidf_oracle(docs: list[list[str]]) -> tuple[np.ndarray, list[str]]:
    """Dense TF-IDF from the definitions: tf = count/len, idf = ln(N/(1+df)).

    Includes every term that appears at all (min_df 1, no max_df cap).
    """
    vocab = sorted({t for doc in docs for t in doc})
    n = len(docs)
    df = {t: sum(1 for doc in docs if t in doc) for t in vocab}
    out = np.zeros((n, len(vocab)))
    for d, doc in enumerate(docs):
        for j, term in enumerate(vocab):
            tf = doc.count(term) / len(doc)
            out[d, j] = tf * np.log(n / (1.0 + df[term]))
    return out, vocab
