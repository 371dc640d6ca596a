"""Split a corpus into positive, negative, and neutral partitions.

Loads the bundled synthetic storm corpus, scores every record with the
bundled valence lexicon, and prints the resulting distribution plus the
most frequent words on each side.
"""

from stormlens.ingest import CleaningConfig, StopwordSet, apply_cleaning, load_corpus
from stormlens.pipeline import resolve_path
from stormlens.sentiment import (
    ValenceLexicon,
    apply_labels,
    emotion_distribution,
    partition_by_emotion,
    top_words_by_sentiment,
)

result = load_corpus(
    resolve_path("bundled:mini_tweets.csv"),
    format="csv",
    column_map={"text": "text", "id": "id", "time": "time", "emotion": None},
)
print(f"loaded {len(result.records)} tweets")

stops = StopwordSet.from_files([resolve_path("bundled:stopwords_en.txt")])
apply_cleaning(result.records, CleaningConfig(), stops)

# no external label file here, so every record is scored by the lexicon
lexicon = ValenceLexicon.bundled(threshold=0.5)
apply_labels(result.records, lexicon=lexicon)

print("distribution:", emotion_distribution(result.records))

parts = partition_by_emotion(result.records)
for emotion, records in parts.items():
    sample = records[0].raw_text if records else "-"
    print(f"\n{emotion}: {len(records)} tweets, e.g. {sample!r}")

print("\ntop words per sentiment:")
for emotion, ranked in top_words_by_sentiment(result.records, n=6).items():
    words = ", ".join(term for term, _ in ranked)
    print(f"  {emotion}: {words}")
