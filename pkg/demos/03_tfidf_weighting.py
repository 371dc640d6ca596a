"""Build the sparse document-term matrix and inspect a few weights."""

import numpy as np

from stormlens.vectorize import build_vocabulary, idf, tf, tfidf_matrix

docs = [
    ["flood", "water", "flood", "street"],
    ["flood", "rescue", "boat"],
    ["boat", "rescue", "volunteer", "water"],
    ["shelter", "volunteer", "water"],
]

# min_df=1 keeps everything; the pipeline default of 2 would drop
# "street" and "shelter" because each appears in a single document
vocab = build_vocabulary(docs, min_df=1, max_df_ratio=1.0)
print("vocabulary:", vocab.index_to_term)
print("document frequencies:", dict(zip(vocab.index_to_term, vocab.doc_freq.tolist())))

matrix = tfidf_matrix(docs, vocab)
print(f"\nmatrix shape {matrix.shape}, stored entries {len(matrix.data)}")

np.set_printoptions(precision=3, suppress=True)
print(matrix.toarray())

# one cell by hand: "flood" holds 2 of the 4 slots in doc 0, and shows
# up in 2 of 4 documents
weight = tf("flood", docs[0]) * idf("flood", vocab)
print(f"\nhand check for (doc 0, 'flood'): {weight:.6f}")
print(f"matrix agrees:                    {matrix.get(0, vocab.index('flood')):.6f}")

# "water" appears in 3 of 4 docs, so its idf is log(4/4) = 0 and the
# weight vanishes from the sparse storage entirely
print(f"\n'water' idf: {idf('water', vocab):.6f}")
print(f"'water' weight in doc 0: {matrix.get(0, vocab.index('water'))}")
