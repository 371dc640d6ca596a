"""Batch analysis of storm-event tweets.

The pieces, in pipeline order: corpus loading and cleaning (ingest),
sentiment labeling and partitioning (sentiment), TF-IDF vectorization
(vectorize), Gibbs-sampled topic models with coherence-based model
selection (topics), similarity graphs and graph-autoencoder refinement
(graphs), clustering and baselines (cluster), event naming (naming), and
the stage orchestration plus CLI (pipeline, cli).
"""

from .cluster import (
    affinity_propagation,
    agglomerative_cluster,
    compare_algorithms,
    kmeans,
    nmf_cluster,
    purity,
    silhouette_samples,
    silhouette_score,
    spectral_clustering,
    sweep_k,
)
from .graphs import (
    EmbeddingMatrix,
    SimilarityGraph,
    build_knn_graph,
    fallback_embeddings,
    gae_train,
    gcn_forward,
    load_embeddings,
    normalize_adjacency,
    reduce_dimensions,
)
from .ingest import (
    CleaningConfig,
    StopwordSet,
    TweetRecord,
    apply_cleaning,
    clean_text,
    load_corpus,
    stem,
    tokenize_and_normalize,
)
from .naming import NamingConfig, fallback_name, name_all_clusters
from .pipeline import Pipeline, load_config, stage_seed
from .sentiment import (
    ValenceLexicon,
    apply_labels,
    emotion_distribution,
    partition_by_emotion,
    top_words_by_sentiment,
)
from .topics import (
    CoherenceReport,
    LdaModel,
    coherence_sweep,
    elbow_select,
    k_range,
    lda_fit,
    topic_top_terms,
    umass_coherence,
)
from .vectorize import (
    SparseDocTermMatrix,
    Vocabulary,
    build_vocabulary,
    count_matrix,
    docs_as_term_ids,
    idf,
    tf,
    tfidf_matrix,
)

__version__ = "0.1.0"
