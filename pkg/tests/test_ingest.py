"""Cleaning, tokenization and corpus loading."""

from __future__ import annotations

from importlib import resources

import numpy as np
import pytest

from stormlens.ingest import (
    CleaningConfig,
    CorpusFormatError,
    StopwordSet,
    apply_cleaning,
    clean_text,
    load_corpus,
    stem,
    tokenize_and_normalize,
)


def bundled_stopwords() -> StopwordSet:
    ref = resources.files("stormlens.data").joinpath("stopwords_en.txt")
    with resources.as_file(ref) as path:
        return StopwordSet.from_files([path])


class TestCleanText:
    def test_lowercases_and_collapses_whitespace(self):
        cfg = CleaningConfig()
        assert clean_text("  Storm   SURGE\tnow ", cfg) == "storm surge now"

    def test_drops_url_bearing_tokens(self):
        cfg = CleaningConfig()
        out = clean_text("evacuate now http://t.co/abc123 stay safe", cfg)
        assert out == "evacuate now stay safe"
        assert "http" not in clean_text("see HTTPS://EXAMPLE.COM/x for info", cfg)

    def test_strips_emoji_and_symbols(self):
        cfg = CleaningConfig()
        assert clean_text("wind \U0001f32a warning ⚠️", cfg) == "wind warning"

    def test_idempotent(self):
        """clean(clean(x)) == clean(x) over random noisy strings."""
        cfg = CleaningConfig()
        rng = np.random.default_rng(11)
        pieces = ["Rain", "http://x.co/a", "\U0001f300", "FLOOD!!", "  ", "stay\tsafe", "⭐"]
        for _ in range(200):
            raw = " ".join(pieces[i] for i in rng.integers(0, len(pieces), size=6))
            once = clean_text(raw, cfg)
            assert clean_text(once, cfg) == once

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CleaningConfig(min_token_len=0)
        with pytest.raises(ValueError):
            CleaningConfig(strip_unicode_ranges=((0x2700, 0x2600),))


class TestStemmer:
    """Suffix stripping with the double-consonant and cvc+e repairs."""

    CASES = [
        ("flooding", "flood"),
        ("flooded", "flood"),
        ("floods", "flood"),
        ("running", "run"),
        ("hopping", "hop"),
        ("hoping", "hope"),
        ("loved", "love"),
        ("falling", "fall"),
        ("stayed", "stay"),
        ("glasses", "glass"),
        ("cities", "citi"),
        ("stress", "stress"),
        ("virus", "virus"),
        ("crisis", "crisis"),
        ("red", "red"),
        ("wind", "wind"),
    ]

    @pytest.mark.parametrize("token,expected", CASES)
    def test_hand_cases(self, token, expected):
        assert stem(token) == expected

    def test_never_lengthens_by_more_than_one(self):
        """The only growth path is the cvc+e repair, which adds one letter."""
        rng = np.random.default_rng(3)
        letters = "abcdefghilmnoprstuw"
        for _ in range(500):
            word = "".join(letters[i] for i in rng.integers(0, len(letters), size=int(rng.integers(2, 12))))
            assert len(stem(word)) <= len(word) + 1


class TestTokenize:
    def test_storm_tweet_reduces_to_content_terms(self):
        """End-to-end normalization of a noisy tweet."""
        cfg = CleaningConfig()
        stops = bundled_stopwords()
        cleaned = clean_text("Being FLOODED a lot!! http://x.co \U0001f300", cfg)
        assert tokenize_and_normalize(cleaned, cfg, stops) == ["flood"]

    def test_apostrophes_deleted_before_split(self):
        cfg = CleaningConfig()
        stops = StopwordSet()
        assert tokenize_and_normalize("don’t can't", cfg, stops) == ["dont", "cant"]

    def test_stopword_filter_applies_to_normalized_form(self):
        """'was' lemmatizes to 'be'; the filter must catch the output form."""
        cfg = CleaningConfig()
        stops = StopwordSet(base=["be"])
        assert tokenize_and_normalize("was rescue", cfg, stops) == ["rescue"]

    def test_output_invariants(self):
        """No output token is short, a stopword, or url-like, for any input."""
        cfg = CleaningConfig()
        stops = StopwordSet(base=["the", "and", "be", "have"])
        rng = np.random.default_rng(29)
        pieces = ["the", "AND", "was", "rescues", "#flood", "@user", "http://a.b", "x", "92nd", "storm-surge"]
        for _ in range(300):
            raw = " ".join(pieces[i] for i in rng.integers(0, len(pieces), size=8))
            toks = tokenize_and_normalize(clean_text(raw, cfg), cfg, stops)
            for tok in toks:
                assert len(tok) >= cfg.min_token_len
                assert tok not in stops
                assert "http" not in tok
                assert tok == tok.lower()


class TestStopwordSet:
    def test_case_insensitive_membership(self):
        stops = StopwordSet(base=["The"], domain=["Sandy"])
        assert "the" in stops and "THE" in stops
        assert "sandy" in stops
        assert "storm" not in stops

    def test_from_files_skips_comments_and_blanks(self, tmp_path):
        f = tmp_path / "stops.txt"
        f.write_text("# header\nthe\n\nand  # trailing note\n", encoding="utf-8")
        stops = StopwordSet.from_files([f], extra=["of"])
        assert "the" in stops and "and" in stops and "of" in stops
        assert len(stops) == 3

    def test_add_domain_extends(self):
        stops = StopwordSet(base=["the"])
        stops.add_domain(["Harvey"])
        assert "harvey" in stops


class TestLoadCorpus:
    def csv_file(self, tmp_path, body):
        f = tmp_path / "tweets.csv"
        f.write_text(body, encoding="utf-8")
        return f

    def test_csv_roundtrip(self, tmp_path):
        f = self.csv_file(
            tmp_path,
            "id,text,time,emotion\n"
            "t1,flood water rising,2017-08-27T10:00:00Z,negative\n"
            "t2,thank you volunteers,,positive\n",
        )
        res = load_corpus(f, column_map={"time": "time", "emotion": "emotion"})
        assert len(res) == 2 and res.rows_in == 2 and res.skips == []
        assert res.records[0].id == "t1"
        assert res.records[0].timestamp is not None
        assert res.records[0].timestamp.hour == 10
        assert res.records[0].emotion == "negative"
        assert res.records[1].timestamp is None

    def test_empty_text_rows_are_skipped_and_counted(self, tmp_path):
        f = self.csv_file(tmp_path, "id,text\nt1,\nt2,ok then\n")
        res = load_corpus(f)
        assert len(res) == 1 and res.rows_in == 2
        assert res.skips == [(2, "empty text")]

    def test_duplicate_ids_lenient_vs_strict(self, tmp_path):
        f = self.csv_file(tmp_path, "id,text\nt1,first\nt1,second\n")
        res = load_corpus(f)
        assert len(res) == 1 and any("duplicate" in why for _, why in res.skips)
        with pytest.raises(CorpusFormatError):
            load_corpus(f, strict=True)

    def test_unknown_emotion_label(self, tmp_path):
        f = self.csv_file(tmp_path, "id,text,emotion\nt1,hello,angry\n")
        res = load_corpus(f, column_map={"emotion": "emotion"})
        assert len(res) == 0 and len(res.skips) == 1
        with pytest.raises(CorpusFormatError):
            load_corpus(f, column_map={"emotion": "emotion"}, strict=True)

    def test_missing_text_column_is_fatal(self, tmp_path):
        f = self.csv_file(tmp_path, "id,body\nt1,hello\n")
        with pytest.raises(CorpusFormatError):
            load_corpus(f)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_corpus(tmp_path / "nope.csv")

    def test_jsonl_bad_lines(self, tmp_path):
        f = tmp_path / "tweets.jsonl"
        f.write_text(
            '{"id": "a", "text": "flood"}\n'
            "not json\n"
            '{"id": "b", "text": "wind"}\n',
            encoding="utf-8",
        )
        res = load_corpus(f, format="jsonl")
        assert [r.id for r in res.records] == ["a", "b"]
        assert res.skips == [(2, "bad JSON")]
        with pytest.raises(CorpusFormatError):
            load_corpus(f, format="jsonl", strict=True)

    def test_unknown_format(self, tmp_path):
        f = self.csv_file(tmp_path, "id,text\nt1,x\n")
        with pytest.raises(CorpusFormatError):
            load_corpus(f, format="parquet")

    def test_generated_ids_when_column_absent(self, tmp_path):
        f = self.csv_file(tmp_path, "text\nhello there\n")
        res = load_corpus(f, column_map={"id": None})
        assert res.records[0].id == "row1"


class TestApplyCleaning:
    def test_fills_tokens_in_place_preserving_order(self, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("id,text\nt1,Flooded streets\nt2,WIND damage\n", encoding="utf-8")
        res = load_corpus(f)
        cfg = CleaningConfig()
        apply_cleaning(res.records, cfg, StopwordSet())
        assert [r.id for r in res.records] == ["t1", "t2"]
        assert res.records[0].tokens == ["flood", "street"]
        assert res.records[1].tokens == ["wind", "damage"]
