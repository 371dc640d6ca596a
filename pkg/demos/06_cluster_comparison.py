"""Run five clustering algorithms on the same data and compare them.

Two gaussian blobs stand in for refined tweet embeddings. The sweep
finds the cluster count by mean silhouette, then the comparison runs
k-means on the embeddings next to the four baselines.
"""

import numpy as np

from stormlens.cluster import compare_algorithms, purity, sweep_k
from stormlens.graphs import EmbeddingMatrix, build_knn_graph

rng = np.random.default_rng(6)
pts = np.vstack([
    rng.normal((6.0, 1.0), 0.5, size=(20, 2)),
    rng.normal((1.0, 6.0), 0.5, size=(20, 2)),
])
truth = np.repeat([0, 1], 20)

sweep = sweep_k(pts, range(2, 7), seed=0)
print("k sweep (mean silhouette):")
for k, score in zip(sweep.k_values, sweep.scores):
    marker = " <- best" if k == sweep.best_k else ""
    print(f"  k={k}: {score:.4f}{marker}")

graph = build_knn_graph(EmbeddingMatrix(pts, source="external"), k=5)
rows = compare_algorithms(pts, pts, graph, sweep.best_k, truth=truth, seed=0)

print(f"\n{'algorithm':<14} {'median sil':>10} {'purity':>7} {'k':>3}  notes")
for row in rows:
    sil = f"{row.median_silhouette:.4f}" if row.median_silhouette is not None else "-"
    pur = f"{row.purity:.3f}" if row.purity is not None else "-"
    print(f"{row.algorithm:<14} {sil:>10} {pur:>7} {row.k:>3}  {row.notes}")

print(f"\nk-means on its own: purity {purity(sweep.best_labels, truth):.3f}")
