"""Fit topics with collapsed Gibbs sampling and pick K by coherence.

Builds a corpus with five planted topics (disjoint vocabularies), sweeps
the topic count, and shows the coherence elbow landing on the truth.
The first call compiles the sampler, so expect a short pause.
"""

import numpy as np

from stormlens.topics import (
    coherence_sweep,
    elbow_select,
    lda_fit,
    topic_top_terms,
)

N_TOPICS = 5
TERMS_PER_TOPIC = 20
rng = np.random.default_rng(4)

# topic t owns term ids [t*20, (t+1)*20); every doc draws from one topic
docs = []
for d in range(300):
    t = d % N_TOPICS
    lo = t * TERMS_PER_TOPIC
    docs.append(rng.integers(lo, lo + TERMS_PER_TOPIC, size=40).astype(np.int64))
vocab_size = N_TOPICS * TERMS_PER_TOPIC

print("sweeping K over 2..9 ...")
report = coherence_sweep(docs, list(range(2, 10)), iterations=80, seed=0)
for k, score in zip(report.k_values, report.scores):
    bar = "#" * max(0, int(60 + score))
    print(f"  K={k}: {score:8.2f} {bar}")

selected = elbow_select(report)
print(f"\nelbow picks K={selected} ({report.selection_rule})")

model = lda_fit(
    docs, vocab_size, selected, iterations=200, seed=1, checkpoints=[50, 100, 150]
)
marks = ", ".join(f"{s}: {p:.1f}" for s, p in model.perplexity_history)
print(f"\nper-token perplexity along the chain: {marks}")
for t in range(model.n_topics):
    top = topic_top_terms(model, t, 6)
    print(f"  topic {t}: term ids {top.term_ids}")
