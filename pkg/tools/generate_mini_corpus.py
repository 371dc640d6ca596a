"""Regenerate the bundled demo corpus (mini_tweets.csv, mini_labels.csv).

Synthetic storm-event tweets with a fixed seed. Eight themes with mostly
disjoint vocabulary give the topic model and the clustering stages real
structure to find, and each tweet gets a sentiment flavor that is also
written to the labels file. Run from the repo root:

    python tools/generate_mini_corpus.py
"""

import csv
import random
from datetime import datetime, timedelta
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "stormlens" / "data"
N_TWEETS = 500
SEED = 20250817

THEMES = {
    "surge": {
        "words": ["surge", "coastal", "evacuation", "mandatory", "zone",
                  "shoreline", "tide", "waves", "seawall", "evacuate"],
        "templates": [
            "storm {w0} hitting the {w1} {w2} now, {w3} {w4} orders in effect",
            "{w0} warning extended along the {w1}, {w2} routes open until midnight",
            "watching the {w0} top the {w1} near {place}, please {w2} if you are in {w3} {w4}",
        ],
    },
    "outage": {
        "words": ["power", "outage", "grid", "electricity", "substation",
                  "transformer", "crews", "restore", "blackout", "utility"],
        "templates": [
            "{w0} {w1} reported across {place}, {w2} {w3} working overnight",
            "no {w0} since 6am, {w1} says the {w2} took a direct hit",
            "{w0} update: {w1} {w2} expect to {w3} service by tomorrow",
        ],
    },
    "rescue": {
        "words": ["rescue", "boat", "stranded", "rooftop", "airlift",
                  "responders", "coast", "guard", "families", "neighbors"],
        "templates": [
            "{w0} teams pulling {w1} {w2} off rooftops in {place}",
            "just watched a {w0} {w1} take four {w2} to safety",
            "{w0} {w1} going door to door in {place}, {w2} helping {w3}",
        ],
    },
    "shelter": {
        "words": ["shelter", "school", "gym", "cots", "blankets",
                  "evacuees", "volunteers", "meals", "overnight", "capacity"],
        "templates": [
            "the {w0} at {place} {w1} is near {w2}, bring {w3} if you can",
            "{w0} {w1} serving hot {w2} to {w3} tonight",
            "need more {w0} and {w1} at the {place} {w2} please share",
        ],
    },
    "donation": {
        "words": ["donation", "supplies", "water", "bottled", "diapers",
                  "canned", "drive", "drop", "collection", "relief"],
        "templates": [
            "{w0} {w1} at the church on {place} street, {w2} {w3} needed most",
            "our {w0} {w1} filled three trucks with {w2} {w3} today",
            "organizing a {w0} {w1} for {w2} {w3}, dm me to help",
        ],
    },
    "roads": {
        "words": ["bridge", "highway", "closed", "debris", "washout",
                  "detour", "lanes", "overpass", "flooding", "impassable"],
        "templates": [
            "{w0} on route 9 {w1} after a {w2}, use the {w3}",
            "{w0} {w1} both {w2} near {place}, crews clearing {w3}",
            "do not drive through {place}, the {w0} is {w1} and {w2} everywhere",
        ],
    },
    "water": {
        "words": ["boil", "advisory", "tap", "drinking", "treatment",
                  "contamination", "pressure", "plant", "bottles", "notice"],
        "templates": [
            "{w0} {w1} issued for {place}: do not use {w2} {w3} untreated",
            "the {w0} {w1} lost {w2} overnight, official {w3} posted",
            "{w0} your {w1} before {w2} until the {w3} lifts",
        ],
    },
    "forecast": {
        "words": ["forecast", "landfall", "category", "rainfall", "inches",
                  "radar", "track", "model", "winds", "gusts"],
        "templates": [
            "latest {w0} shifts {w1} south, {w2} 3 {w3} expected at {place}",
            "{w0} shows another band, {w1} totals could reach 14 {w2}",
            "{w0} {w1} now at 95 mph with higher {w2} on the coast",
        ],
    },
}

POSITIVE = ["so grateful", "thank you", "amazing volunteers", "proud of this town",
            "everyone safe", "great news", "love this community", "heroes all of them"]
NEGATIVE = ["this is terrible", "so scared", "heartbreaking damage", "we lost everything",
            "absolute nightmare", "worst flooding in years", "devastated", "awful night"]
NEUTRAL = ["per the county", "as of 5pm", "official update", "more details soon",
           "monitoring closely", "stay tuned", "situation ongoing", "report follows"]

PLACES = ["riverside", "bayview", "cedar falls", "harbor point", "elm grove",
          "lakewood", "north shore", "millbrook"]
HASHTAGS = ["#stormwatch", "#staysafe", "#reliefeffort", "#floodalert"]
URLS = ["http://localnews.example/live", "https://county.example/alerts",
        "http://relief.example/give"]
EMOJI = ["\U0001F300", "\U0001F64F", "⚠️", "\U0001F4A7", "\U0001F6A8"]

FLAVOR_WEIGHTS = {
    "surge": (1, 3, 6), "outage": (1, 5, 4), "rescue": (5, 2, 3),
    "shelter": (4, 1, 5), "donation": (6, 1, 3), "roads": (1, 4, 5),
    "water": (1, 2, 7), "forecast": (1, 3, 6),
}


def make_tweet(rng: random.Random, theme: str) -> tuple[str, str]:
    spec = THEMES[theme]
    words = rng.sample(spec["words"], 5)
    template = rng.choice(spec["templates"])
    text = template.format(
        w0=words[0], w1=words[1], w2=words[2], w3=words[3], w4=words[4],
        place=rng.choice(PLACES),
    )
    pos_w, neg_w, neu_w = FLAVOR_WEIGHTS[theme]
    flavor = rng.choices(("positive", "negative", "neutral"),
                         weights=(pos_w, neg_w, neu_w))[0]
    mood = {"positive": POSITIVE, "negative": NEGATIVE, "neutral": NEUTRAL}[flavor]
    text = f"{text}, {rng.choice(mood)}"
    if rng.random() < 0.30:
        text += f" {rng.choice(HASHTAGS)}"
    if rng.random() < 0.25:
        text += f" {rng.choice(URLS)}"
    if rng.random() < 0.35:
        text += f" {rng.choice(EMOJI)}"
    return text, flavor


def main() -> None:
    rng = random.Random(SEED)
    start = datetime(2024, 9, 12, 6, 0, 0)
    themes = list(THEMES)
    rows = []
    labels = []
    for i in range(N_TWEETS):
        theme = themes[i % len(themes)]
        text, flavor = make_tweet(rng, theme)
        stamp = start + timedelta(minutes=rng.randrange(0, 3 * 24 * 60))
        tweet_id = f"t{i + 1:04d}"
        rows.append((tweet_id, text, stamp.isoformat()))
        labels.append((tweet_id, flavor))

    with open(DATA_DIR / "mini_tweets.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "text", "time"])
        writer.writerows(rows)
    with open(DATA_DIR / "mini_labels.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "emotion"])
        writer.writerows(labels)
    counts = {f: sum(1 for _, v in labels if v == f) for f in
              ("positive", "negative", "neutral")}
    print(f"wrote {N_TWEETS} tweets, label counts: {counts}")


if __name__ == "__main__":
    main()
