"""Clustering of refined embeddings plus the baseline algorithms.

Everything here is written against plain numpy arrays. The k-means
implementation is the workhorse (it also backs spectral clustering); the
other algorithms exist so runs can report how the graph-refined embeddings
stack up against clustering the raw feature space directly.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graphs import SimilarityGraph, normalize_adjacency
from .vectorize import SparseDocTermMatrix


def _as_dense(features: SparseDocTermMatrix | np.ndarray) -> np.ndarray:
    if isinstance(features, SparseDocTermMatrix):
        return features.toarray()
    out = np.asarray(features, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError("expected a 2-D feature array")
    return out


def _pairwise_euclidean(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def _pairwise_cosine_distance(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    zero = norms == 0.0
    if zero.any():
        warnings.warn(
            f"{int(zero.sum())} zero-norm rows treated as maximally distant",
            stacklevel=3,
        )
    safe = np.where(zero, 1.0, norms)
    unit = x / safe[:, None]
    sim = unit @ unit.T
    sim[zero, :] = 0.0
    sim[:, zero] = 0.0
    dist = 1.0 - sim
    np.fill_diagonal(dist, 0.0)
    np.maximum(dist, 0.0, out=dist)
    return dist


def pairwise_distances(x: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    if metric == "euclidean":
        return _pairwise_euclidean(x)
    if metric == "cosine":
        return _pairwise_cosine_distance(x)
    raise ValueError(f"unknown metric: {metric!r}")


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centers.shape[0]


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Spread the initial centers with squared-distance weighted sampling."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with an existing center
            centers[c:] = x[rng.integers(n, size=k - c)]
            break
        probs = d2 / total
        centers[c] = x[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((x - centers[c]) ** 2, axis=1))
    return centers


def _lloyd(
    x: np.ndarray, centers: np.ndarray, max_iter: int
) -> tuple[np.ndarray, np.ndarray, float, int, list[float]]:
    history: list[float] = []
    labels = np.zeros(x.shape[0], dtype=np.int64)
    for it in range(1, max_iter + 1):
        d2 = (
            np.sum(x * x, axis=1)[:, None]
            - 2.0 * (x @ centers.T)
            + np.sum(centers * centers, axis=1)[None, :]
        )
        new_labels = np.argmin(d2, axis=1)
        # drop clusters that lost all points and renumber compactly
        occupied = np.unique(new_labels)
        if occupied.size < centers.shape[0]:
            remap = {old: new for new, old in enumerate(occupied)}
            new_labels = np.array([remap[v] for v in new_labels], dtype=np.int64)
            centers = centers[occupied]
        new_centers = np.empty_like(centers)
        for c in range(centers.shape[0]):
            new_centers[c] = x[new_labels == c].mean(axis=0)
        inertia = float(np.sum((x - new_centers[new_labels]) ** 2))
        history.append(inertia)
        converged = it > 1 and np.array_equal(new_labels, labels)
        labels = new_labels
        centers = new_centers
        if converged:
            break
    return labels, centers, history[-1], it, history


def kmeans(
    x: np.ndarray,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
) -> KMeansResult:
    """Best of `restarts` Lloyd runs with distance-weighted seeding.

    Clusters that empty out during iteration are dropped, so the returned
    center count can be below the requested k.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-D array")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    rng = np.random.default_rng(seed)
    best: KMeansResult | None = None
    for _ in range(restarts):
        init = _kmeans_pp_init(x, k, rng)
        labels, centers, inertia, n_iter, history = _lloyd(x, init, max_iter)
        if best is None or inertia < best.inertia:
            best = KMeansResult(
                labels=labels,
                centers=centers,
                inertia=inertia,
                n_iter=n_iter,
                inertia_history=history,
            )
    if best.k < k:
        warnings.warn(
            f"k-means kept {best.k} of {k} requested clusters", stacklevel=2
        )
    return best


# ---------------------------------------------------------------------------
# silhouette
# ---------------------------------------------------------------------------


def silhouette_samples(
    x: np.ndarray, labels: np.ndarray, metric: str = "euclidean"
) -> np.ndarray:
    """Per-point silhouette widths; singletons score 0 by convention."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape[0] != x.shape[0]:
        raise ValueError("labels and rows differ in length")
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("silhouette requires at least 2 clusters")
    dist = pairwise_distances(x, metric=metric)
    n = x.shape[0]
    sizes = {c: int(np.sum(labels == c)) for c in uniq}
    scores = np.zeros(n, dtype=np.float64)
    masks = {c: labels == c for c in uniq}
    for i in range(n):
        own = labels[i]
        if sizes[own] == 1:
            continue  # singleton: defined as 0
        a = dist[i][masks[own]].sum() / (sizes[own] - 1)
        b = np.inf
        for c in uniq:
            if c == own:
                continue
            b = min(b, dist[i][masks[c]].mean())
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return scores


def silhouette_score(
    x: np.ndarray, labels: np.ndarray, metric: str = "euclidean"
) -> float:
    return float(silhouette_samples(x, labels, metric=metric).mean())


@dataclass
class SweepKResult:
    k_values: list[int]
    scores: list[float]
    best_k: int
    best_labels: np.ndarray


def sweep_k(
    x: np.ndarray,
    k_values: list[int] | range,
    seed: int = 0,
    metric: str = "euclidean",
) -> SweepKResult:
    """Pick the cluster count whose k-means labels maximise mean silhouette."""
    ks = sorted(set(int(k) for k in k_values))
    if not ks:
        raise ValueError("no k values to sweep")
    if ks[0] < 2:
        raise ValueError(f"silhouette sweep needs k >= 2, got {ks[0]}")
    x = np.asarray(x, dtype=np.float64)
    scores: list[float] = []
    labels_by_k: dict[int, np.ndarray] = {}
    for k in ks:
        result = kmeans(x, k, seed=seed + k)
        labels_by_k[k] = result.labels
        if result.k < 2:
            scores.append(float("-inf"))  # everything collapsed; unusable
            continue
        scores.append(silhouette_score(x, result.labels, metric=metric))
    best_idx = 0
    for i in range(1, len(ks)):
        if scores[i] > scores[best_idx]:
            best_idx = i  # strict: ties keep the smaller k
    best_k = ks[best_idx]
    return SweepKResult(
        k_values=ks, scores=scores, best_k=best_k, best_labels=labels_by_k[best_k]
    )


def purity(labels: np.ndarray, truth: "list | np.ndarray") -> float:
    """Fraction of points whose cluster's majority class matches their own."""
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape[0] != truth.shape[0]:
        raise ValueError("labels and truth differ in length")
    if labels.shape[0] == 0:
        raise ValueError("purity of an empty assignment is undefined")
    total = 0
    for c in np.unique(labels):
        members = truth[labels == c]
        _, counts = np.unique(members, return_counts=True)
        total += int(counts.max())
    return total / labels.shape[0]


# ---------------------------------------------------------------------------
# affinity propagation
# ---------------------------------------------------------------------------


@dataclass
class AffinityResult:
    labels: np.ndarray
    exemplars: np.ndarray
    n_iter: int
    converged: bool


def affinity_propagation(
    similarity: np.ndarray,
    damping: float = 0.5,
    preference: float | None = None,
    max_iter: int = 200,
    convergence_iter: int = 15,
) -> AffinityResult:
    """Deterministic message passing on a dense similarity matrix.

    The preference (self-similarity) defaults to the median off-diagonal
    similarity. Convergence means the exemplar set held still for
    `convergence_iter` consecutive iterations.
    """
    s = np.array(similarity, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("similarity must be square")
    if not 0.0 <= damping < 1.0:
        raise ValueError(f"damping must be in [0, 1), got {damping}")
    n = s.shape[0]
    if preference is None:
        off_diag = s[~np.eye(n, dtype=bool)]
        preference = float(np.median(off_diag)) if off_diag.size else 0.0
    np.fill_diagonal(s, preference)

    r = np.zeros((n, n))
    a = np.zeros((n, n))
    idx = np.arange(n)
    stable = 0
    prev_exemplars: frozenset[int] = frozenset()
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        # responsibilities: how well-suited k is as exemplar for i
        combined = a + s
        top_idx = np.argmax(combined, axis=1)
        top_val = combined[idx, top_idx]
        combined[idx, top_idx] = -np.inf
        second_val = combined.max(axis=1)
        r_new = s - top_val[:, None]
        r_new[idx, top_idx] = s[idx, top_idx] - second_val
        r = damping * r + (1.0 - damping) * r_new

        # availabilities: accumulated evidence that k should be an exemplar
        r_pos = np.maximum(r, 0.0)
        np.fill_diagonal(r_pos, r.diagonal())
        col_sum = r_pos.sum(axis=0)
        a_new = col_sum[None, :] - r_pos
        diag = a_new.diagonal().copy()
        np.minimum(a_new, 0.0, out=a_new)
        np.fill_diagonal(a_new, diag)
        a = damping * a + (1.0 - damping) * a_new

        exemplars = frozenset(np.flatnonzero(r.diagonal() + a.diagonal() > 0.0))
        if exemplars and exemplars == prev_exemplars:
            stable += 1
            if stable >= convergence_iter:
                converged = True
                break
        else:
            stable = 0
        prev_exemplars = exemplars

    exemplar_idx = np.flatnonzero(r.diagonal() + a.diagonal() > 0.0)
    if exemplar_idx.size == 0:
        warnings.warn(
            "affinity propagation found no exemplars; falling back to the "
            "best self-evidence point",
            stacklevel=2,
        )
        exemplar_idx = np.array([int(np.argmax(r.diagonal() + a.diagonal()))])
    labels = np.argmax(s[:, exemplar_idx], axis=1)
    labels[exemplar_idx] = np.arange(exemplar_idx.size)
    return AffinityResult(
        labels=labels, exemplars=exemplar_idx, n_iter=it, converged=converged
    )


def negative_squared_distances(x: np.ndarray) -> np.ndarray:
    """Similarity matrix for affinity propagation on point data."""
    d = _pairwise_euclidean(np.asarray(x, dtype=np.float64))
    return -(d * d)


# ---------------------------------------------------------------------------
# spectral clustering
# ---------------------------------------------------------------------------


@dataclass
class SpectralResult:
    labels: np.ndarray
    embedding: np.ndarray
    eigenvalues: np.ndarray


def spectral_clustering(
    graph: SimilarityGraph | np.ndarray, k: int, seed: int = 0
) -> SpectralResult:
    """Partition via the bottom eigenvectors of the normalised Laplacian."""
    if k < 2:
        raise ValueError(f"spectral clustering needs k >= 2, got {k}")
    a_hat = normalize_adjacency(graph).matrix
    n = a_hat.shape[0]
    if k > n:
        raise ValueError(f"k ({k}) exceeds node count ({n})")
    laplacian = np.eye(n) - a_hat
    eigvals, eigvecs = np.linalg.eigh(laplacian)
    embedding = eigvecs[:, :k].copy()
    norms = np.linalg.norm(embedding, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    embedding = embedding / safe[:, None]
    result = kmeans(embedding, k, seed=seed)
    return SpectralResult(
        labels=result.labels, embedding=embedding, eigenvalues=eigvals[:k].copy()
    )


# ---------------------------------------------------------------------------
# agglomerative clustering
# ---------------------------------------------------------------------------


@dataclass
class AgglomerativeResult:
    labels: np.ndarray
    merge_heights: list[float]


def agglomerative_cluster(
    x: np.ndarray, k: int, metric: str = "cosine"
) -> AgglomerativeResult:
    """Average-linkage hierarchy cut at k clusters.

    Linkage updates follow the Lance-Williams recurrence for average
    linkage; tied merge candidates resolve to the smallest (i, j) pair so
    the hierarchy is reproducible.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    dist = pairwise_distances(x, metric=metric)
    np.fill_diagonal(dist, np.inf)
    active = list(range(n))
    sizes = {i: 1 for i in range(n)}
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    heights: list[float] = []
    while len(active) > k:
        best_pair: tuple[int, int] | None = None
        best_d = np.inf
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                i, j = active[ai], active[bi]
                d = dist[i, j]
                if d < best_d or (d == best_d and (i, j) < best_pair):
                    best_d = d
                    best_pair = (i, j)
        i, j = best_pair
        heights.append(float(best_d))
        ni, nj = sizes[i], sizes[j]
        for other in active:
            if other in (i, j):
                continue
            merged = (ni * dist[i, other] + nj * dist[j, other]) / (ni + nj)
            dist[i, other] = merged
            dist[other, i] = merged
        sizes[i] = ni + nj
        members[i].extend(members[j])
        active.remove(j)
        del sizes[j], members[j]
    labels = np.empty(n, dtype=np.int64)
    for new_id, rep in enumerate(sorted(active)):
        labels[members[rep]] = new_id
    return AgglomerativeResult(labels=labels, merge_heights=heights)


# ---------------------------------------------------------------------------
# NMF
# ---------------------------------------------------------------------------


@dataclass
class NmfResult:
    labels: np.ndarray
    w: np.ndarray
    h: np.ndarray
    objective_history: list[float]


def nmf_cluster(
    features: SparseDocTermMatrix | np.ndarray,
    k: int,
    iterations: int = 200,
    seed: int = 0,
) -> NmfResult:
    """Cluster by the dominant factor of a multiplicative-update NMF.

    The classic Frobenius-norm updates keep the objective non-increasing.
    Rows that are entirely zero carry no signal; they are assigned to
    cluster 0 and flagged with a warning.
    """
    x = _as_dense(features)
    if np.any(x < 0.0):
        raise ValueError("matrix factorisation requires non-negative input")
    n, m = x.shape
    if not 1 <= k <= min(n, m):
        raise ValueError(f"k must be in [1, {min(n, m)}], got {k}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    rng = np.random.default_rng(seed)
    w = rng.random((n, k)) + 0.01
    h = rng.random((k, m)) + 0.01
    eps = 1e-12
    history: list[float] = []
    for _ in range(iterations):
        h *= (w.T @ x) / (w.T @ w @ h + eps)
        w *= (x @ h.T) / (w @ h @ h.T + eps)
        residual = x - w @ h
        history.append(float(np.sum(residual * residual)))
    labels = np.argmax(w, axis=1).astype(np.int64)
    zero_rows = np.flatnonzero(~x.any(axis=1))
    if zero_rows.size:
        labels[zero_rows] = 0
        warnings.warn(
            f"{zero_rows.size} all-zero rows assigned to cluster 0", stacklevel=2
        )
    return NmfResult(labels=labels, w=w, h=h, objective_history=history)


# ---------------------------------------------------------------------------
# assignments and comparison report
# ---------------------------------------------------------------------------


def save_assignments_csv(
    ids: list[str], labels: np.ndarray, path: str
) -> None:
    if len(ids) != len(labels):
        raise ValueError("ids and labels differ in length")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "cluster"])
        for row_id, label in zip(ids, labels):
            writer.writerow([row_id, int(label)])


@dataclass
class ComparisonRow:
    algorithm: str
    median_silhouette: float | None
    purity: float | None
    k: int | None
    notes: str = ""


def _median_silhouette(x: np.ndarray, labels: np.ndarray, metric: str) -> float:
    return float(np.median(silhouette_samples(x, labels, metric=metric)))


def compare_algorithms(
    refined: np.ndarray,
    features: SparseDocTermMatrix | np.ndarray,
    graph: SimilarityGraph,
    k: int,
    truth: "list | np.ndarray | None" = None,
    seed: int = 0,
) -> list[ComparisonRow]:
    """Run the refined-embedding pipeline and four baselines at the same k.

    Each algorithm is scored by the median silhouette in its own working
    space (refined embeddings, raw features, spectral embedding, or factor
    weights), so the numbers describe how cleanly that algorithm separated
    what it actually clustered. A failing algorithm produces a row with a
    note instead of aborting the report.
    """
    refined = np.asarray(refined, dtype=np.float64)
    dense = _as_dense(features)
    rows: list[ComparisonRow] = []

    def run(algorithm: str, fn) -> None:
        try:
            labels, space, metric, notes = fn()
            row = ComparisonRow(
                algorithm=algorithm,
                median_silhouette=_median_silhouette(space, labels, metric),
                purity=purity(labels, truth) if truth is not None else None,
                k=int(np.unique(labels).size),
                notes=notes,
            )
        except Exception as exc:  # noqa: BLE001 - isolate per-algorithm failures
            row = ComparisonRow(
                algorithm=algorithm,
                median_silhouette=None,
                purity=None,
                k=None,
                notes=f"failed: {exc}",
            )
        rows.append(row)

    def run_refined():
        result = kmeans(refined, k, seed=seed)
        return result.labels, refined, "euclidean", ""

    def run_affinity():
        result = affinity_propagation(negative_squared_distances(dense))
        notes = "" if result.converged else "did not converge"
        return result.labels, dense, "euclidean", notes

    def run_spectral():
        result = spectral_clustering(graph, k, seed=seed)
        return result.labels, result.embedding, "euclidean", ""

    def run_agglomerative():
        result = agglomerative_cluster(dense, k, metric="cosine")
        return result.labels, dense, "cosine", ""

    def run_nmf():
        mat = dense
        notes = ""
        if np.any(mat < 0.0):
            clamped = int(np.count_nonzero(mat < 0.0))
            mat = np.where(mat < 0.0, 0.0, mat)
            notes = f"clamped {clamped} negative entries"
        result = nmf_cluster(mat, k, seed=seed)
        return result.labels, result.w, "euclidean", notes

    run("gnn", run_refined)
    run("affinity", run_affinity)
    run("spectral", run_spectral)
    run("agglomerative", run_agglomerative)
    run("nmf", run_nmf)
    return rows


def save_comparison_csv(rows: list[ComparisonRow], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algorithm", "median_silhouette", "purity", "k", "notes"])
        for row in rows:
            writer.writerow(
                [
                    row.algorithm,
                    "" if row.median_silhouette is None else repr(row.median_silhouette),
                    "" if row.purity is None else repr(row.purity),
                    "" if row.k is None else row.k,
                    row.notes,
                ]
            )
