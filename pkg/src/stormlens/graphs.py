"""Embedding I/O, k-NN similarity graphs, and graph-autoencoder refinement.

The refinement stage is a two-layer graph convolutional encoder trained as
an autoencoder on edge reconstruction: node pairs are scored by the sigmoid
of their embedding dot product and pushed toward 1 for observed edges and 0
for sampled non-edges.
"""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .vectorize import SparseDocTermMatrix

_EMB_MAGIC = b"EMB1"


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------


@dataclass
class EmbeddingMatrix:
    """Dense per-document vectors plus a record of where they came from."""

    values: np.ndarray
    source: str  # "external" or "fallback"
    ids: list[str] | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("embedding values must be a 2-D array")
        if self.source not in ("external", "fallback"):
            raise ValueError(f"unknown embedding source: {self.source!r}")
        if self.ids is not None and len(self.ids) != self.values.shape[0]:
            raise ValueError(
                f"{len(self.ids)} ids for {self.values.shape[0]} embedding rows"
            )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def save_embeddings_csv(emb: EmbeddingMatrix, path: str) -> None:
    """Write `id,v0,v1,...` rows; ids fall back to the row index."""
    ids = emb.ids if emb.ids is not None else [str(i) for i in range(emb.n_rows)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"v{j}" for j in range(emb.dim)])
        for row_id, row in zip(ids, emb.values):
            writer.writerow([row_id] + [repr(float(v)) for v in row])


def save_embeddings_binary(emb: EmbeddingMatrix, path: str) -> None:
    """Write the compact binary layout: magic, u32 rows, u32 dim, f32 data."""
    rows, dim = emb.values.shape
    with open(path, "wb") as fh:
        fh.write(_EMB_MAGIC)
        fh.write(struct.pack("<II", rows, dim))
        fh.write(np.ascontiguousarray(emb.values, dtype="<f4").tobytes())


def load_embeddings(path: str) -> EmbeddingMatrix:
    """Load embeddings from CSV or the binary layout, sniffing the magic bytes.

    CSV rows must agree on width and parse as floats; violations are
    reported with the offending row number.
    """
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == _EMB_MAGIC:
        return _load_embeddings_binary(path)
    return _load_embeddings_csv(path)


def _load_embeddings_binary(path: str) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12:
        raise ValueError(f"{path}: truncated embedding file")
    rows, dim = struct.unpack_from("<II", blob, 4)
    expected = 12 + 4 * rows * dim
    if len(blob) != expected:
        raise ValueError(
            f"{path}: expected {expected} bytes for {rows}x{dim} embeddings, "
            f"got {len(blob)}"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=12).astype(np.float64)
    return EmbeddingMatrix(values.reshape(rows, dim), source="external")


def _load_embeddings_csv(path: str) -> EmbeddingMatrix:
    ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not header or header[0] != "id":
            raise ValueError(f"{path}: expected header starting with 'id'")
        width = len(header) - 1
        if width < 1:
            raise ValueError(f"{path}: header declares no vector columns")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) - 1 != width:
                raise ValueError(
                    f"{path} row {line_no}: expected {width} values, got {len(row) - 1}"
                )
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError:
                raise ValueError(f"{path} row {line_no}: non-numeric value") from None
    if not rows:
        raise ValueError(f"{path}: no embedding rows")
    return EmbeddingMatrix(np.array(rows, dtype=np.float64), source="external", ids=ids)


def _subspace_basis(
    x_dot: "callable",
    xt_dot: "callable",
    n_rows: int,
    n_cols: int,
    rank: int,
    iterations: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Orthonormal basis for the top `rank` left singular directions.

    Classic block power iteration with QR re-orthonormalisation at every
    half-step, which keeps the block from collapsing onto the dominant
    direction.
    """
    probe = rng.standard_normal((n_cols, rank))
    q, _ = np.linalg.qr(x_dot(probe))
    for _ in range(iterations):
        z, _ = np.linalg.qr(xt_dot(q))
        q, _ = np.linalg.qr(x_dot(z))
    return q


def fallback_embeddings(
    matrix: SparseDocTermMatrix | np.ndarray,
    rank: int = 64,
    iterations: int = 20,
    seed: int = 0,
) -> EmbeddingMatrix:
    """Low-rank document coordinates from the weighted document-term matrix.

    Used when no external embedding file is supplied. Returns the left
    singular vectors scaled by their singular values, so dot products in the
    reduced space approximate those of the original rows.
    """
    if isinstance(matrix, SparseDocTermMatrix):
        n_rows, n_cols = matrix.shape
        x_dot = matrix.dot_dense
        xt_dot = matrix.t_dot_dense
    else:
        dense = np.asarray(matrix, dtype=np.float64)
        if dense.ndim != 2:
            raise ValueError("expected a 2-D matrix")
        n_rows, n_cols = dense.shape
        x_dot = lambda other: dense @ other
        xt_dot = lambda other: dense.T @ other
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    rank = min(rank, n_rows, n_cols)
    rng = np.random.default_rng(seed)
    q = _subspace_basis(x_dot, xt_dot, n_rows, n_cols, rank, iterations, rng)
    small = xt_dot(q).T  # rank x n_cols projection of the original matrix
    u_small, sing, _ = np.linalg.svd(small, full_matrices=False)
    coords = q @ (u_small * sing)
    return EmbeddingMatrix(coords[:, :rank], source="fallback")


def reduce_dimensions(
    values: np.ndarray,
    target_dim: int,
    iterations: int = 20,
    seed: int = 0,
) -> np.ndarray:
    """Project rows onto the top principal directions of the centered data."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("expected a 2-D array of embeddings")
    n_rows, n_cols = values.shape
    if not 1 <= target_dim <= n_cols:
        raise ValueError(
            f"target_dim must be in [1, {n_cols}], got {target_dim}"
        )
    if target_dim == n_cols:
        return values - values.mean(axis=0)
    centered = values - values.mean(axis=0)
    emb = fallback_embeddings(centered, rank=target_dim, iterations=iterations, seed=seed)
    return emb.values


# ---------------------------------------------------------------------------
# k-NN similarity graph
# ---------------------------------------------------------------------------


@dataclass
class SimilarityGraph:
    """Undirected weighted graph stored as a deduplicated (i, j, w) edge list."""

    n_nodes: int
    edges: list[tuple[int, int, float]] = field(default_factory=list)

    def to_dense(self) -> np.ndarray:
        adj = np.zeros((self.n_nodes, self.n_nodes), dtype=np.float64)
        for i, j, w in self.edges:
            adj[i, j] = w
            adj[j, i] = w
        return adj

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def save_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "w"])
            for i, j, w in self.edges:
                writer.writerow([i, j, repr(float(w))])

    @classmethod
    def load_csv(cls, path: str, n_nodes: int | None = None) -> "SimilarityGraph":
        edges: list[tuple[int, int, float]] = []
        max_node = -1
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["i", "j", "w"]:
                raise ValueError(f"{path}: expected header i,j,w")
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 3:
                    raise ValueError(f"{path} row {line_no}: expected 3 fields")
                try:
                    i, j, w = int(row[0]), int(row[1]), float(row[2])
                except ValueError:
                    raise ValueError(f"{path} row {line_no}: malformed edge") from None
                if i == j:
                    raise ValueError(f"{path} row {line_no}: self-loop not allowed")
                if i > j:
                    i, j = j, i
                edges.append((i, j, w))
                max_node = max(max_node, j)
        if n_nodes is None:
            n_nodes = max_node + 1
        elif max_node >= n_nodes:
            raise ValueError(
                f"{path}: edge endpoint {max_node} out of range for {n_nodes} nodes"
            )
        return cls(n_nodes=n_nodes, edges=sorted(set(edges)))


def build_knn_graph(
    emb: EmbeddingMatrix | np.ndarray,
    k: int = 10,
    block_size: int = 256,
) -> SimilarityGraph:
    """Exact cosine k-nearest-neighbour graph, symmetrised by edge union.

    Neighbours tied with the k-th best similarity are all kept, so the
    out-degree can exceed k when similarities repeat. Rows with zero norm
    have no well-defined direction and get no outgoing edges.
    """
    values = emb.values if isinstance(emb, EmbeddingMatrix) else np.asarray(emb, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("expected a 2-D embedding array")
    n = values.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 rows to build a graph, got {n}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    norms = np.linalg.norm(values, axis=1)
    zero_rows = np.flatnonzero(norms == 0.0)
    if zero_rows.size:
        warnings.warn(
            f"{zero_rows.size} embedding rows have zero norm and get no outgoing edges",
            stacklevel=2,
        )
    safe_norms = np.where(norms == 0.0, 1.0, norms)
    unit = values / safe_norms[:, None]
    k_eff = min(k, n - 1)

    edge_set: set[tuple[int, int]] = set()
    weights: dict[tuple[int, int], float] = {}
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        sims = unit[start:stop] @ unit.T
        for local, i in enumerate(range(start, stop)):
            if norms[i] == 0.0:
                continue
            row = sims[local].copy()
            row[i] = -np.inf  # never a self-neighbour
            row[zero_rows] = -np.inf
            order = np.argsort(-row, kind="stable")
            kth_sim = row[order[k_eff - 1]]
            if not np.isfinite(kth_sim):
                continue  # fewer than k valid neighbours exist
            for j in order:
                sim = row[j]
                if not np.isfinite(sim) or sim < kth_sim:
                    break
                a, b = (i, int(j)) if i < j else (int(j), i)
                key = (a, b)
                if key not in edge_set:
                    edge_set.add(key)
                    weights[key] = float(sim)
    edges = [(a, b, weights[(a, b)]) for a, b in sorted(edge_set)]
    return SimilarityGraph(n_nodes=n, edges=edges)


# ---------------------------------------------------------------------------
# GCN autoencoder
# ---------------------------------------------------------------------------


@dataclass
class NormalizedAdjacency:
    """Symmetric degree-normalised adjacency with self-loops added."""

    matrix: np.ndarray
    clamped_edges: int = 0


def normalize_adjacency(graph: SimilarityGraph | np.ndarray) -> NormalizedAdjacency:
    """D^{-1/2} (A + I) D^{-1/2} with negative weights clamped to zero."""
    adj = graph.to_dense() if isinstance(graph, SimilarityGraph) else np.array(graph, dtype=np.float64)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.allclose(adj, adj.T):
        raise ValueError("adjacency must be symmetric")
    clamped = int(np.count_nonzero(adj < 0.0))
    if clamped:
        adj = np.where(adj < 0.0, 0.0, adj)
        warnings.warn(f"clamped {clamped} negative edge weights to 0", stacklevel=2)
    adj = adj + np.eye(adj.shape[0])
    inv_sqrt_deg = 1.0 / np.sqrt(adj.sum(axis=1))
    a_hat = adj * inv_sqrt_deg[:, None] * inv_sqrt_deg[None, :]
    return NormalizedAdjacency(matrix=a_hat, clamped_edges=clamped)


@dataclass
class GcnModel:
    """Weights of the two-layer graph convolutional encoder."""

    w1: np.ndarray
    w2: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w2.shape[1]


def glorot_init(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_gcn(
    in_dim: int, hidden_dim: int, out_dim: int, seed: int = 0
) -> GcnModel:
    rng = np.random.default_rng(seed)
    return GcnModel(
        w1=glorot_init(in_dim, hidden_dim, rng),
        w2=glorot_init(hidden_dim, out_dim, rng),
    )


def gcn_forward(a_hat: np.ndarray, features: np.ndarray, model: GcnModel) -> np.ndarray:
    """Two propagation layers with a ReLU between: A(relu(A X W1))W2."""
    h1_pre = a_hat @ (features @ model.w1)
    hidden = np.maximum(h1_pre, 0.0)
    return a_hat @ (hidden @ model.w2)


def gae_loss(
    z: np.ndarray, pairs: np.ndarray, labels: np.ndarray
) -> float:
    """Mean binary cross-entropy of sigmoid(z_i . z_j) against edge labels."""
    logits = np.einsum("ij,ij->i", z[pairs[:, 0]], z[pairs[:, 1]])
    per_pair = np.logaddexp(0.0, logits) - labels * logits
    return float(per_pair.mean())


def gae_loss_and_gradients(
    a_hat: np.ndarray,
    features: np.ndarray,
    model: GcnModel,
    pairs: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss plus analytic gradients of both weight matrices.

    Written out by hand so the training loop stays dependency-free; the
    finite-difference test in the suite pins every term of this derivation.
    """
    xw1 = features @ model.w1
    h1_pre = a_hat @ xw1
    hidden = np.maximum(h1_pre, 0.0)
    msg = a_hat @ hidden
    z = msg @ model.w2

    zi = z[pairs[:, 0]]
    zj = z[pairs[:, 1]]
    logits = np.einsum("ij,ij->i", zi, zj)
    n_pairs = pairs.shape[0]
    loss = float((np.logaddexp(0.0, logits) - labels * logits).mean())

    # d loss / d logit, folded with the 1/P of the mean
    coeff = (1.0 / (1.0 + np.exp(-logits)) - labels) / n_pairs
    grad_z = np.zeros_like(z)
    np.add.at(grad_z, pairs[:, 0], coeff[:, None] * zj)
    np.add.at(grad_z, pairs[:, 1], coeff[:, None] * zi)

    grad_w2 = msg.T @ grad_z
    grad_msg = grad_z @ model.w2.T
    grad_hidden = a_hat @ grad_msg  # a_hat is symmetric
    grad_h1_pre = grad_hidden * (h1_pre > 0.0)
    grad_w1 = (a_hat @ features).T @ grad_h1_pre
    return loss, grad_w1, grad_w2


def _sample_negative_pairs(
    n_nodes: int,
    n_samples: int,
    edge_keys: set[tuple[int, int]],
    rng: np.random.Generator,
) -> np.ndarray:
    """Uniform non-edge pairs, rejection-sampled away from real edges."""
    out = np.empty((n_samples, 2), dtype=np.int64)
    filled = 0
    attempts = 0
    cap = max(1000, 100 * n_samples)
    while filled < n_samples:
        if attempts >= cap:
            raise RuntimeError(
                "could not sample enough non-edges; the graph is nearly complete"
            )
        i = int(rng.integers(n_nodes))
        j = int(rng.integers(n_nodes))
        attempts += 1
        if i == j:
            continue
        key = (i, j) if i < j else (j, i)
        if key in edge_keys:
            continue
        out[filled, 0] = i
        out[filled, 1] = j
        filled += 1
    return out


@dataclass
class GaeResult:
    model: GcnModel
    embeddings: np.ndarray
    loss_history: list[float]


def gae_train(
    graph: SimilarityGraph,
    features: np.ndarray,
    hidden_dim: int = 32,
    out_dim: int = 16,
    epochs: int = 200,
    step_size: float = 0.01,
    momentum: float = 0.9,
    seed: int = 0,
) -> GaeResult:
    """Train the autoencoder with momentum SGD on full-batch edge labels.

    Each epoch scores every observed edge against an equal number of freshly
    sampled non-edges. Raises if the loss goes non-finite, which in practice
    means the step size is too large for the feature scale.
    """
    if not graph.edges:
        raise ValueError("cannot train on a graph with no edges")
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != graph.n_nodes:
        raise ValueError(
            f"feature rows ({features.shape[0]}) != graph nodes ({graph.n_nodes})"
        )
    a_hat = normalize_adjacency(graph).matrix
    model = init_gcn(features.shape[1], hidden_dim, out_dim, seed=seed)
    rng = np.random.default_rng(seed)

    pos = np.array([(i, j) for i, j, _ in graph.edges], dtype=np.int64)
    edge_keys = {(i, j) for i, j, _ in graph.edges}
    n_pos = pos.shape[0]
    labels = np.concatenate([np.ones(n_pos), np.zeros(n_pos)])

    vel_w1 = np.zeros_like(model.w1)
    vel_w2 = np.zeros_like(model.w2)
    history: list[float] = []
    for epoch in range(epochs):
        neg = _sample_negative_pairs(graph.n_nodes, n_pos, edge_keys, rng)
        pairs = np.concatenate([pos, neg], axis=0)
        loss, grad_w1, grad_w2 = gae_loss_and_gradients(
            a_hat, features, model, pairs, labels
        )
        if not np.isfinite(loss):
            raise RuntimeError(
                f"training diverged at epoch {epoch}: non-finite loss; "
                "reduce the step size"
            )
        history.append(loss)
        vel_w1 = momentum * vel_w1 - step_size * grad_w1
        vel_w2 = momentum * vel_w2 - step_size * grad_w2
        model.w1 = model.w1 + vel_w1
        model.w2 = model.w2 + vel_w2

    embeddings = gcn_forward(a_hat, features, model)
    return GaeResult(model=model, embeddings=embeddings, loss_history=history)
