"""Turn raw tweet text into normalized tokens.

Runs a few messy posts through the same cleaning used by the pipeline:
URL stripping, lowercasing, punctuation removal, stopword filtering,
and light suffix stemming.
"""

from stormlens.ingest import (
    CleaningConfig,
    StopwordSet,
    clean_text,
    stem,
    tokenize_and_normalize,
)
from stormlens.pipeline import resolve_path

RAW_POSTS = [
    "Flooding EVERYWHERE on I-45!! Stay safe houston https://t.co/abc123",
    "Rescue boats are picking up families near the bayou \U0001f6a4",
    "Thanks to all the volunteers who stayed out there all night...",
    "Power's been out for 6 hours, trees down across the street",
]

config = CleaningConfig()
stops = StopwordSet.from_files([resolve_path("bundled:stopwords_en.txt")])

for raw in RAW_POSTS:
    cleaned = clean_text(raw, config)
    tokens = tokenize_and_normalize(cleaned, config, stops)
    print(f"raw:     {raw}")
    print(f"cleaned: {cleaned}")
    print(f"tokens:  {tokens}")
    print()

# the stemmer is deliberately light: plural/tense suffixes only, so
# distinct words never collapse into each other by accident
for word in ["flooding", "flooded", "rescued", "boats", "cities", "hoping"]:
    print(f"{word} -> {stem(word)}")
