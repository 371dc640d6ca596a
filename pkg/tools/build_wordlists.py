"""Regenerate the bundled stopword list and valence lexicon.

Token filtering and lexicon lookup both happen after lemmatisation and
stemming, so the shipped files must contain the normalized forms. Writing
them by hand drifts out of sync with the stemmer; this script derives them
from readable word lists instead. Run from the repo root:

    python tools/build_wordlists.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from stormlens.ingest import DEFAULT_LEMMA_TABLE, stem  # noqa: E402

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "stormlens" / "data"

STOPWORDS = """
a about above after again against all am an and any are as at
be because been before being below between both but by
can cannot could did do does doing down during
each even ever few for from further
had has have having he her here hers herself him himself his how
i if in into is it its itself just let
many may me might more most much must my myself
never no nor not now of off on once only or other ought our ours
ourselves out over own
rt same shall she should so some still such
than that the their theirs them themselves then there these they this
those through to too
under until up us very via
was we well were what when where which while who whom why will with
would you your yours yourself yourselves
also always back lot lots really
amp dont cant wont didnt doesnt isnt arent wasnt werent aint
im ive id ill youre youve youll theyre theyve weve hes shes
gonna wanna gotta ur pls plz btw
""".split()

# Scores are in [-1, 1]; the classifier sums them over a tweet's tokens and
# applies a symmetric threshold. Words are listed in surface form and
# normalized below, so inflections that the stemmer maps to the same form
# (loved, loving -> love) are covered by one row.
LEXICON = {
    "good": 0.7, "great": 0.9, "awesome": 1.0, "amazing": 0.9,
    "love": 0.8, "happy": 0.8, "glad": 0.6, "thank": 0.6, "thanks": 0.6,
    "thankful": 0.8, "grateful": 0.9, "relief": 0.6, "relieved": 0.6,
    "safe": 0.7, "safely": 0.7, "hope": 0.4, "hopeful": 0.6,
    "brave": 0.7, "strong": 0.5, "stronger": 0.5, "support": 0.4,
    "helpful": 0.5, "hero": 0.8, "heroes": 0.8, "rescue": 0.3,
    "rescued": 0.5, "recover": 0.4, "recovery": 0.4, "rebuild": 0.5,
    "volunteer": 0.5, "volunteers": 0.5, "donate": 0.4, "donated": 0.4,
    "kind": 0.5, "kindness": 0.7, "best": 0.7, "win": 0.5, "free": 0.3,
    "open": 0.2, "restore": 0.4, "restored": 0.4, "better": 0.4,
    "proud": 0.7, "beautiful": 0.7, "smile": 0.6, "celebrate": 0.7,
    "bad": -0.7, "terrible": -0.9, "horrible": -0.9, "awful": -0.9,
    "worst": -0.9, "worse": -0.6, "sad": -0.7, "cry": -0.6, "crying": -0.6,
    "fear": -0.7, "afraid": -0.7, "scared": -0.7, "scary": -0.7,
    "terrifying": -0.8, "panic": -0.7, "danger": -0.6, "dangerous": -0.6,
    "damage": -0.5, "damaged": -0.5, "destroy": -0.8, "destroyed": -0.8,
    "destruction": -0.8, "devastate": -0.9, "devastated": -0.9,
    "devastating": -0.9, "lost": -0.6, "loss": -0.6, "losses": -0.6,
    "dead": -0.9, "death": -0.9, "died": -0.9, "dying": -0.8,
    "injured": -0.7, "injuries": -0.7, "hurt": -0.6, "victim": -0.6,
    "victims": -0.6, "trapped": -0.7, "stranded": -0.6, "missing": -0.7,
    "flood": -0.3, "flooded": -0.3, "flooding": -0.3, "broken": -0.5,
    "collapse": -0.7, "collapsed": -0.7, "fail": -0.5, "failed": -0.5,
    "angry": -0.7, "anger": -0.7, "hate": -0.8, "nightmare": -0.8,
    "emergency": -0.4, "crisis": -0.5, "chaos": -0.6, "wreck": -0.6,
    "wreckage": -0.6, "ruin": -0.7, "ruined": -0.7, "severe": -0.4,
    "warning": -0.2, "threat": -0.5, "homeless": -0.7, "outage": -0.3,
}


def normalize(word: str) -> str:
    return stem(DEFAULT_LEMMA_TABLE.get(word, word))


def build_stopwords(path: Path) -> None:
    forms = set()
    for word in STOPWORDS:
        forms.add(word)
        forms.add(normalize(word))
    lines = [
        "# English stopwords for tweet normalization.",
        "# Includes post-stemmer forms because filtering runs on normalized tokens.",
        "# Generated by tools/build_wordlists.py; edit that script, not this file.",
    ]
    lines.extend(sorted(forms))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(forms)} terms)")


def build_lexicon(path: Path) -> None:
    merged: dict[str, float] = {}
    for word, score in LEXICON.items():
        form = normalize(word)
        if form in merged and merged[form] != score:
            raise SystemExit(
                f"conflicting scores for normalized form {form!r}: "
                f"{merged[form]} vs {score} (from {word!r})"
            )
        merged[form] = score
    rows = ["term,score"]
    rows.extend(f"{term},{merged[term]}" for term in sorted(merged))
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(merged)} terms)")


if __name__ == "__main__":
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    build_stopwords(DATA_DIR / "stopwords_en.txt")
    build_lexicon(DATA_DIR / "default_lexicon.csv")
