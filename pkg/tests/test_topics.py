"""Collapsed Gibbs topic model, coherence scoring and K selection."""

from __future__ import annotations

import math

import numpy as np
import pytest
from synth import planted_topic_corpus, random_token_corpus, umass_oracle

from stormlens.topics import (
    CoherenceReport,
    TopicModelError,
    coherence_sweep,
    elbow_select,
    k_range,
    lda_fit,
    perplexity,
    topic_top_terms,
    umass_coherence,
)

TINY_DOCS = [
    np.array([0, 1, 2, 0], dtype=np.int64),
    np.array([3, 4, 3], dtype=np.int64),
    np.array([1, 2, 4, 0, 3], dtype=np.int64),
]


class TestGibbsStateInvariants:
    """The sampler must keep its count tables consistent with z at all times."""

    def test_counts_match_assignments(self, warm_kernels):
        rng = np.random.default_rng(1)
        for trial in range(10):
            docs = [ids for ids in random_ids(rng, n_docs=8, vocab=12)]
            model = lda_fit(docs, vocab_size=12, n_topics=3, iterations=20, seed=trial)
            n_dk, n_kw, n_k = model.recompute_counts()
            np.testing.assert_array_equal(model.n_dk, n_dk)
            np.testing.assert_array_equal(model.n_kw, n_kw)
            np.testing.assert_array_equal(model.n_k, n_k)
            assert model.n_dk.sum(axis=1).tolist() == model.doc_lengths.tolist()
            assert model.n_k.sum() == len(model.tokens)
            assert model.z.min() >= 0 and model.z.max() < model.n_topics

    def test_theta_phi_are_distributions(self, warm_kernels):
        model = lda_fit(TINY_DOCS, vocab_size=5, n_topics=2, iterations=10, seed=0)
        np.testing.assert_allclose(model.theta().sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(model.phi().sum(axis=1), 1.0, atol=1e-12)
        assert (model.theta() > 0).all() and (model.phi() > 0).all()

    def test_deterministic_for_fixed_seed(self, warm_kernels):
        a = lda_fit(TINY_DOCS, vocab_size=5, n_topics=2, iterations=30, seed=9)
        b = lda_fit(TINY_DOCS, vocab_size=5, n_topics=2, iterations=30, seed=9)
        np.testing.assert_array_equal(a.z, b.z)
        c = lda_fit(TINY_DOCS, vocab_size=5, n_topics=2, iterations=30, seed=10)
        assert not np.array_equal(a.z, c.z)

    def test_validation(self, warm_kernels):
        with pytest.raises(TopicModelError):
            lda_fit(TINY_DOCS, vocab_size=5, n_topics=1, iterations=5)
        with pytest.raises(TopicModelError):
            lda_fit(TINY_DOCS, vocab_size=5, n_topics=2, alpha=-1.0)
        with pytest.raises(TopicModelError):
            lda_fit(TINY_DOCS, vocab_size=5, n_topics=2, beta=0.0)
        with pytest.raises(TopicModelError):
            lda_fit(TINY_DOCS, vocab_size=5, n_topics=2, iterations=0)
        with pytest.raises(TopicModelError):
            lda_fit(TINY_DOCS, vocab_size=4, n_topics=2, iterations=5)  # id 4 out of range
        with pytest.raises(TopicModelError):
            lda_fit([], vocab_size=5, n_topics=2)
        with pytest.raises(TopicModelError):
            lda_fit([np.array([], dtype=np.int64)], vocab_size=5, n_topics=2)

    def test_more_topics_than_tokens_warns(self, warm_kernels):
        with pytest.warns(UserWarning):
            lda_fit([np.array([0, 1], dtype=np.int64)], vocab_size=2, n_topics=5, iterations=2)

    def test_alpha_defaults_to_fifty_over_k(self, warm_kernels):
        model = lda_fit(TINY_DOCS, vocab_size=5, n_topics=4, iterations=2, seed=0)
        assert model.alpha == pytest.approx(50.0 / 4)

    def test_checkpoints_record_perplexity(self, warm_kernels):
        model = lda_fit(
            TINY_DOCS, vocab_size=5, n_topics=2, iterations=30, seed=3, checkpoints=(5, 15, 30)
        )
        sweeps = [s for s, _ in model.perplexity_history]
        assert sweeps == [5, 15, 30]
        assert all(v > 0 and math.isfinite(v) for _, v in model.perplexity_history)
        # checkpointing must not change the chain
        plain = lda_fit(TINY_DOCS, vocab_size=5, n_topics=2, iterations=30, seed=3)
        np.testing.assert_array_equal(model.z, plain.z)


def random_ids(rng, n_docs, vocab):
    for _ in range(n_docs):
        yield rng.integers(0, vocab, size=int(rng.integers(2, 15))).astype(np.int64)


class TestPerplexity:
    def test_matches_direct_mixture_likelihood(self, warm_kernels):
        """exp(-mean log sum_k theta[d,k] phi[k,w]) computed the naive way."""
        rng = np.random.default_rng(23)
        for trial in range(5):
            docs = list(random_ids(rng, n_docs=6, vocab=9))
            model = lda_fit(docs, vocab_size=9, n_topics=3, iterations=15, seed=trial)
            theta, phi = model.theta(), model.phi()
            ll = 0.0
            for i in range(len(model.tokens)):
                d, w = int(model.doc_of[i]), int(model.tokens[i])
                ll += math.log(float(theta[d] @ phi[:, w]))
            expected = math.exp(-ll / len(model.tokens))
            assert perplexity(model) == pytest.approx(expected, rel=1e-10)


class TestTopTerms:
    def test_descending_with_index_tiebreak(self, warm_kernels):
        model = lda_fit(TINY_DOCS, vocab_size=5, n_topics=2, iterations=20, seed=1)
        # force an exact tie: equal counts on terms 0 and 1 in topic 0
        model.n_kw[0] = np.array([3, 3, 0, 0, 0])
        model.n_k[0] = 6
        top = topic_top_terms(model, 0, 3)
        assert top.term_ids[:2] == [0, 1]
        probs = top.probabilities
        assert probs == sorted(probs, reverse=True)

    def test_vocab_attaches_terms(self, warm_kernels):
        from stormlens.vectorize import build_vocabulary

        docs = [["flood", "water"], ["water", "wind"], ["wind", "flood"]]
        vocab = build_vocabulary(docs, min_df=1, max_df_ratio=1.0)
        from stormlens.vectorize import docs_as_term_ids

        model = lda_fit(docs_as_term_ids(docs, vocab), vocab_size=len(vocab), n_topics=2, iterations=10, seed=0)
        top = topic_top_terms(model, 0, 2, vocab=vocab)
        assert top.terms is not None and all(t in vocab for t in top.terms)

    def test_bounds(self, warm_kernels):
        model = lda_fit(TINY_DOCS, vocab_size=5, n_topics=2, iterations=5, seed=0)
        with pytest.raises(TopicModelError):
            topic_top_terms(model, 2, 3)
        with pytest.raises(TopicModelError):
            topic_top_terms(model, 0, 0)
        with pytest.warns(UserWarning):
            top = topic_top_terms(model, 0, 50)
        assert len(top.term_ids) == 5


class TestUmassCoherence:
    def test_two_term_hand_case(self):
        """docs {a,b}, {a}, {a} and terms (a, b): one pair, score ln(2/3)."""
        docs = [{"a", "b"}, {"a"}, {"a"}]
        score = umass_coherence(["a", "b"], docs)
        assert score == pytest.approx(math.log(2 / 3))
        assert score == pytest.approx(-0.40546510810816444)

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(77)
        for _ in range(100):
            n_docs = int(rng.integers(3, 12))
            vocab = int(rng.integers(4, 10))
            doc_sets = []
            for _ in range(n_docs):
                size = int(rng.integers(1, vocab + 1))
                doc_sets.append(frozenset(int(t) for t in rng.choice(vocab, size=size, replace=False)))
            present = sorted({t for s in doc_sets for t in s})
            k = min(len(present), int(rng.integers(2, 6)))
            terms = [present[i] for i in rng.choice(len(present), size=k, replace=False)]
            expected = umass_oracle(terms, doc_sets)
            assert umass_coherence(terms, doc_sets) == pytest.approx(expected, abs=1e-9)

    def test_term_order_matters(self):
        docs = [{"a", "b"}, {"a"}, {"b"}, {"a"}]
        assert umass_coherence(["a", "b"], docs) != umass_coherence(["b", "a"], docs)

    def test_errors(self):
        with pytest.raises(TopicModelError):
            umass_coherence(["a"], [{"a"}])
        with pytest.raises(TopicModelError):
            umass_coherence(["a", "zzz"], [{"a"}])


class TestElbowSelect:
    def report(self, ks, scores):
        return CoherenceReport(k_values=list(ks), scores=list(scores), top_n=10)

    def test_picks_largest_curvature(self):
        rep = self.report([2, 4, 6, 8], [-10.0, -2.0, -1.5, -1.4])
        assert elbow_select(rep) == 4
        assert rep.selected_k == 4 and rep.selection_rule == "elbow"

    def test_endpoints_never_win_on_curvature(self):
        rep = self.report([2, 4, 6], [-1.0, -5.0, -1.0])
        # interior point has negative curvature, endpoints score 0, tie at 0
        # goes to the smallest K
        assert elbow_select(rep) == 2

    def test_tie_goes_to_smallest_k(self):
        rep = self.report([2, 4, 6, 8], [0.0, 1.0, 2.0, 3.0])  # all drops equal
        assert elbow_select(rep) == 2

    def test_manual_override(self):
        rep = self.report([2, 4, 6], [-3.0, -2.0, -1.0])
        assert elbow_select(rep, override=6) == 6
        assert rep.selection_rule == "manual"
        with pytest.raises(TopicModelError):
            elbow_select(rep, override=5)

    def test_short_curve_falls_back_to_best_score(self):
        rep = self.report([3, 9], [-2.0, -1.0])
        with pytest.warns(UserWarning):
            assert elbow_select(rep) == 9
        assert rep.selection_rule == "best-score"

    def test_validation(self):
        with pytest.raises(TopicModelError):
            elbow_select(self.report([4, 2, 6], [1.0, 2.0, 3.0]))
        with pytest.raises(TopicModelError):
            elbow_select(self.report([], []))
        with pytest.raises(TopicModelError):
            elbow_select(CoherenceReport(k_values=[2, 4], scores=[1.0], top_n=10))


class TestCoherenceSweep:
    def test_report_shape_and_determinism(self, warm_kernels):
        rng = np.random.default_rng(6)
        docs, _, vocab_size = planted_topic_corpus(rng, n_topics=2, terms_per_topic=8, n_docs=40, doc_len=12)
        rep1 = coherence_sweep(docs, [2, 3, 4], iterations=30, seed=5, top_n=5)
        rep2 = coherence_sweep(docs, [4, 2, 3], iterations=30, seed=5, top_n=5)
        assert rep1.k_values == [2, 3, 4]
        assert rep1.scores == rep2.scores  # order of k_values input is irrelevant
        assert rep1.selected_k in rep1.k_values
        assert all(math.isfinite(s) for s in rep1.scores)

    def test_save_csv_format(self, tmp_path, warm_kernels):
        rep = CoherenceReport(k_values=[2, 4], scores=[-1.5, -0.25], top_n=10)
        path = tmp_path / "coherence.csv"
        rep.save_csv(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "K,umass_mean"
        assert lines[1] == "2,-1.5" and lines[2] == "4,-0.25"

    def test_k_range(self):
        assert k_range(20, 70, 5) == [20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70]
        assert k_range(3, 3) == [3]
        with pytest.raises(TopicModelError):
            k_range(5, 2)
        with pytest.raises(TopicModelError):
            k_range(2, 5, step=0)


class TestTopicRecovery:
    def test_disjoint_topics_resolve_cleanly(self, warm_kernels):
        """With disjoint per-topic vocabularies each fitted topic's mass
        concentrates on a single planted block."""
        rng = np.random.default_rng(13)
        docs, _, vocab_size = planted_topic_corpus(
            rng, n_topics=3, terms_per_topic=10, n_docs=90, doc_len=25
        )
        model = lda_fit(docs, vocab_size=vocab_size, n_topics=3, iterations=200, seed=4)
        phi = model.phi()
        blocks = phi.reshape(3, 3, 10).sum(axis=2)  # topic x planted-block mass
        assert (blocks.max(axis=1) > 0.9).all()
        # each planted block is claimed by exactly one fitted topic
        assert sorted(blocks.argmax(axis=1).tolist()) == [0, 1, 2]
