"""Name tweet clusters, offline.

Builds naming contexts from a toy clustering (distinctive terms plus
representative posts) and names them with the deterministic fallback,
which Title-cases the terms that most distinguish each cluster. Point
`NamingConfig(endpoint=...)` at a JSON service that accepts
{"prompt": ...} and returns {"text": ...} to use a language model
instead; on any failure the fallback below still answers.
"""

import numpy as np

from stormlens.naming import (
    NamingConfig,
    build_cluster_contexts,
    name_all_clusters,
    render_prompt,
)
from stormlens.vectorize import build_vocabulary, count_matrix

docs = [
    ["flood", "water", "street", "flood"],
    ["flood", "street", "car"],
    ["water", "flood", "rising"],
    ["shelter", "donate", "volunteer"],
    ["donate", "supplies", "shelter"],
    ["volunteer", "shelter", "help"],
]
texts = [
    "flood water covering the street again",
    "cars stuck in the flooded street",
    "water still rising on our block",
    "shelter at the church needs donations",
    "dropping off supplies to donate tonight",
    "volunteers needed at the shelter",
]
labels = np.array([0, 0, 0, 1, 1, 1])

vocab = build_vocabulary(docs, min_df=1, max_df_ratio=1.0)
matrix = count_matrix(docs, vocab)
embeddings = matrix.toarray()  # any per-doc vectors work for picking reps

contexts = build_cluster_contexts(
    labels, matrix, vocab, embeddings, texts, n_terms=4, n_representatives=2
)
for ctx in contexts:
    print(f"cluster {ctx.cluster}:")
    print(f"  distinctive terms: {ctx.top_terms}")
    print(f"  representatives:   {ctx.representatives}")

config = NamingConfig(endpoint=None, max_words=8)
print("\nprompt that would go to a naming service:")
print(" ", render_prompt(contexts[0], config.template))

print("\nfallback names:")
for event in name_all_clusters(contexts, config):
    print(f"  cluster {event.cluster}: {event.name!r} ({event.provenance})")
