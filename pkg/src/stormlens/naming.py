"""Turning clusters into human-readable event names.

A cluster is summarised by its most distinctive terms and a few posts close
to its centroid. Those go into a prompt for an external text-generation
service; when no service is configured or a call fails (and the policy
allows it), a deterministic name is built from the terms instead.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import requests

from .vectorize import SparseDocTermMatrix, Vocabulary

DEFAULT_TEMPLATE = (
    "Given these key terms: {terms} and example posts: {tweets}, "
    "produce a concise event name (max 8 words)."
)


class NamingServiceError(RuntimeError):
    """The naming endpoint failed or returned something unusable."""


@dataclass
class NamingConfig:
    endpoint: str | None = None
    timeout: float = 10.0
    auth_token: str | None = None
    policy: str = "fallback"  # or "fail"
    template: str = DEFAULT_TEMPLATE
    max_words: int = 8
    n_terms: int = 10
    n_representatives: int = 3
    max_workers: int = 4

    def __post_init__(self) -> None:
        if self.policy not in ("fallback", "fail"):
            raise ValueError(f"unknown naming policy: {self.policy!r}")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.max_words < 1:
            raise ValueError(f"max_words must be >= 1, got {self.max_words}")
        if self.max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {self.max_workers}")


@dataclass
class ClusterContext:
    """Everything the namer needs to know about one cluster."""

    cluster: int
    top_terms: list[str]
    representatives: list[str]


@dataclass
class EventName:
    cluster: int
    name: str
    provenance: str  # "llm" or "fallback"
    top_terms: list[str] = field(default_factory=list)
    representatives: list[str] = field(default_factory=list)


def rank_distinctive_terms(
    matrix: SparseDocTermMatrix,
    vocab: Vocabulary,
    member_rows: np.ndarray,
    n_terms: int = 10,
) -> list[str]:
    """Terms whose cluster-mean weight most exceeds the corpus-mean weight.

    Plain top weights would surface corpus-wide storm vocabulary in every
    cluster; subtracting the corpus mean keeps the per-cluster flavour.
    """
    member_rows = np.asarray(member_rows, dtype=np.int64)
    if member_rows.size == 0:
        raise ValueError("cluster has no members")
    dense = matrix.toarray()
    corpus_mean = dense.mean(axis=0)
    cluster_mean = dense[member_rows].mean(axis=0)
    lift = cluster_mean - corpus_mean
    n_terms = min(n_terms, lift.size)
    # argsort on (-lift, index): equal lifts resolve to the earlier term
    order = np.lexsort((np.arange(lift.size), -lift))
    return [vocab.index_to_term[i] for i in order[:n_terms]]


def select_representatives(
    embeddings: np.ndarray,
    member_rows: np.ndarray,
    texts: list[str],
    n_representatives: int = 3,
) -> list[str]:
    """Member posts nearest the cluster centroid by cosine similarity."""
    member_rows = np.asarray(member_rows, dtype=np.int64)
    if member_rows.size == 0:
        raise ValueError("cluster has no members")
    vecs = np.asarray(embeddings, dtype=np.float64)[member_rows]
    centroid = vecs.mean(axis=0)
    c_norm = np.linalg.norm(centroid)
    v_norms = np.linalg.norm(vecs, axis=1)
    safe = np.where(v_norms == 0.0, 1.0, v_norms)
    if c_norm == 0.0:
        sims = np.zeros(vecs.shape[0])
    else:
        sims = (vecs @ centroid) / (safe * c_norm)
        sims[v_norms == 0.0] = -1.0
    # ties broken by original row order so reruns agree
    order = np.lexsort((member_rows, -sims))
    picked = member_rows[order[: min(n_representatives, member_rows.size)]]
    return [texts[i] for i in picked]


def build_cluster_contexts(
    labels: np.ndarray,
    matrix: SparseDocTermMatrix,
    vocab: Vocabulary,
    embeddings: np.ndarray,
    texts: list[str],
    n_terms: int = 10,
    n_representatives: int = 3,
) -> list[ClusterContext]:
    labels = np.asarray(labels)
    if labels.shape[0] != matrix.shape[0]:
        raise ValueError("labels and matrix rows differ in length")
    if labels.shape[0] != len(texts):
        raise ValueError("labels and texts differ in length")
    contexts: list[ClusterContext] = []
    for cluster in sorted(int(c) for c in np.unique(labels)):
        member_rows = np.flatnonzero(labels == cluster)
        contexts.append(
            ClusterContext(
                cluster=cluster,
                top_terms=rank_distinctive_terms(matrix, vocab, member_rows, n_terms),
                representatives=select_representatives(
                    embeddings, member_rows, texts, n_representatives
                ),
            )
        )
    return contexts


def render_prompt(context: ClusterContext, template: str = DEFAULT_TEMPLATE) -> str:
    return template.format(
        terms=", ".join(context.top_terms),
        tweets=" | ".join(context.representatives),
    )


def clamp_name(text: str, max_words: int = 8) -> str:
    """First line only, capped at `max_words` whitespace-separated words."""
    first_line = text.strip().splitlines()[0] if text.strip() else ""
    words = first_line.split()
    return " ".join(words[:max_words])


def fallback_name(context: ClusterContext) -> str:
    """Deterministic name from the three most distinctive terms."""
    terms = context.top_terms[:3]
    if not terms:
        return f"Cluster {context.cluster}"
    return " ".join(t.title() for t in terms)


def llm_name(context: ClusterContext, config: NamingConfig) -> str:
    """One round trip to the naming endpoint; raises NamingServiceError."""
    if config.endpoint is None:
        raise NamingServiceError("no naming endpoint configured")
    headers = {}
    if config.auth_token:
        headers["Authorization"] = f"Bearer {config.auth_token}"
    prompt = render_prompt(context, config.template)
    try:
        resp = requests.post(
            config.endpoint,
            json={"prompt": prompt},
            headers=headers,
            timeout=config.timeout,
        )
    except requests.RequestException as exc:
        raise NamingServiceError(f"naming request failed: {exc}") from exc
    if resp.status_code != 200:
        raise NamingServiceError(f"naming endpoint returned {resp.status_code}")
    try:
        payload = resp.json()
    except ValueError as exc:
        raise NamingServiceError("naming endpoint returned non-JSON") from exc
    text = payload.get("text") if isinstance(payload, dict) else None
    if not isinstance(text, str) or not text.strip():
        raise NamingServiceError("naming endpoint returned no usable text")
    return text


def _name_one(context: ClusterContext, config: NamingConfig) -> EventName:
    if config.endpoint is None:
        return EventName(
            cluster=context.cluster,
            name=clamp_name(fallback_name(context), config.max_words),
            provenance="fallback",
            top_terms=context.top_terms,
            representatives=context.representatives,
        )
    try:
        raw = llm_name(context, config)
        return EventName(
            cluster=context.cluster,
            name=clamp_name(raw, config.max_words),
            provenance="llm",
            top_terms=context.top_terms,
            representatives=context.representatives,
        )
    except NamingServiceError as exc:
        if config.policy == "fail":
            raise
        warnings.warn(
            f"cluster {context.cluster}: {exc}; using fallback name", stacklevel=2
        )
        return EventName(
            cluster=context.cluster,
            name=clamp_name(fallback_name(context), config.max_words),
            provenance="fallback",
            top_terms=context.top_terms,
            representatives=context.representatives,
        )


def name_all_clusters(
    contexts: list[ClusterContext], config: NamingConfig | None = None
) -> list[EventName]:
    """Name every cluster, a few requests in flight at a time.

    Results come back ordered by cluster id regardless of completion order,
    and duplicate names get a numeric suffix so downstream tables stay
    unambiguous.
    """
    config = config or NamingConfig()
    ordered = sorted(contexts, key=lambda c: c.cluster)
    if not ordered:
        return []
    with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
        futures = [pool.submit(_name_one, ctx, config) for ctx in ordered]
        names = [f.result() for f in futures]
    seen: dict[str, int] = {}
    for event in names:
        count = seen.get(event.name, 0) + 1
        seen[event.name] = count
        if count > 1:
            event.name = f"{event.name} ({count})"
            seen[event.name] = 1
    return names


def _md_cell(text: str) -> str:
    return text.replace("|", "\\|").replace("\n", " ")


def save_naming_markdown(names: list[EventName], path: str) -> None:
    lines = [
        "| cluster | name | provenance | top_terms | representative_tweets |",
        "| --- | --- | --- | --- | --- |",
    ]
    for event in names:
        lines.append(
            "| {} | {} | {} | {} | {} |".format(
                event.cluster,
                _md_cell(event.name),
                event.provenance,
                _md_cell(", ".join(event.top_terms)),
                _md_cell(" / ".join(event.representatives)),
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
