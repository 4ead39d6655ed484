import math

import numpy as np
import pytest

from clickbait.topics import (
    Biterm,
    BitermTopicModel,
    STOPWORDS,
    extract_biterms,
    fit_btm,
    top_words,
)


def planted_corpus(n_docs=500, doc_len=6, vocab_size=10, seed=5):
    """Two disjoint 10-word vocabularies; half the docs draw from each."""
    rng = np.random.default_rng(seed)
    set_a = [f"apple{i}" for i in range(vocab_size)]
    set_b = [f"brick{i}" for i in range(vocab_size)]
    docs = []
    for i in range(n_docs):
        source = set_a if i % 2 == 0 else set_b
        docs.append(list(rng.choice(source, size=doc_len)))
    return docs, set_a, set_b


class TestExtractBiterms:
    def test_all_unordered_pairs(self):
        biterms, vocab = extract_biterms([["aa", "bb", "cc"]])
        assert vocab == ["aa", "bb", "cc"]
        pairs = {(vocab[b.w1], vocab[b.w2]) for b in biterms}
        assert pairs == {("aa", "bb"), ("aa", "cc"), ("bb", "cc")}
        assert len(biterms) == 3

    def test_single_word_doc_has_no_biterms(self):
        biterms, _ = extract_biterms([["aa"]])
        assert biterms == []

    def test_combinatorial_count(self):
        docs = [[f"w{i}a", f"w{i}b", f"w{i}c", f"w{i}d"] for i in range(100)]
        biterms, _ = extract_biterms(docs)
        assert len(biterms) == 100 * math.comb(4, 2)

    def test_stopwords_removed(self):
        biterms, vocab = extract_biterms(
            [["the", "secret", "of", "winning"]], stopwords=STOPWORDS
        )
        assert vocab == ["secret", "winning"]
        assert len(biterms) == 1

    def test_short_words_removed(self):
        biterms, vocab = extract_biterms([["a", "big", "x", "cat"]])
        assert vocab == ["big", "cat"]
        assert len(biterms) == 1

    def test_repeated_word_pairs_by_position(self):
        biterms, vocab = extract_biterms([["aa", "bb", "aa"]])
        # positions (0,1), (0,2), (1,2): two aa-bb pairs and one aa-aa pair
        rendered = sorted((vocab[b.w1], vocab[b.w2]) for b in biterms)
        assert rendered == [("aa", "aa"), ("aa", "bb"), ("aa", "bb")]

    def test_empty_docs_contribute_nothing(self):
        biterms, vocab = extract_biterms([[], ["only"], []])
        assert biterms == [] and vocab == ["only"]

    def test_biterm_ordering_enforced(self):
        with pytest.raises(ValueError):
            Biterm(3, 1)


class TestFitBtm:
    def test_count_invariants_after_every_sweep(self):
        docs, _, _ = planted_corpus(n_docs=60)
        biterms, vocab = extract_biterms(docs)
        seen = []

        def check(model):
            assert int(model.n_z.sum()) == len(biterms)
            np.testing.assert_array_equal(model.n_wz.sum(axis=1), 2 * model.n_z)
            assert (model.n_z >= 0).all() and (model.n_wz >= 0).all()
            seen.append(True)

        fit_btm(biterms, vocab, n_topics=3, iterations=20, seed=2, on_sweep=check)
        assert len(seen) == 20

    def test_zero_iterations_keeps_random_init_invariants(self):
        docs, _, _ = planted_corpus(n_docs=40)
        biterms, vocab = extract_biterms(docs)
        model = fit_btm(biterms, vocab, n_topics=4, iterations=0, seed=9)
        assert int(model.n_z.sum()) == len(biterms)
        np.testing.assert_array_equal(model.n_wz.sum(axis=1), 2 * model.n_z)

    def test_determinism(self):
        docs, _, _ = planted_corpus(n_docs=80)
        biterms, vocab = extract_biterms(docs)
        a = fit_btm(biterms, vocab, n_topics=2, iterations=30, seed=7)
        b = fit_btm(biterms, vocab, n_topics=2, iterations=30, seed=7)
        np.testing.assert_array_equal(a.n_z, b.n_z)
        np.testing.assert_array_equal(a.n_wz, b.n_wz)

    def test_empty_biterms_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            fit_btm([], ["aa"], n_topics=2)

    def test_k_below_two_rejected(self):
        biterms, vocab = extract_biterms([["aa", "bb"]])
        with pytest.raises(ValueError, match="n_topics"):
            fit_btm(biterms, vocab, n_topics=1)

    def test_phi_rows_sum_to_one(self):
        docs, _, _ = planted_corpus(n_docs=50)
        biterms, vocab = extract_biterms(docs)
        model = fit_btm(biterms, vocab, n_topics=3, iterations=10, seed=4)
        np.testing.assert_allclose(model.phi().sum(axis=1), 1.0, atol=1e-9)

    def test_planted_recovery(self):
        docs, set_a, set_b = planted_corpus(n_docs=200, seed=8)
        biterms, vocab = extract_biterms(docs)
        model = fit_btm(biterms, vocab, n_topics=2, iterations=200, seed=3)
        summary = top_words(model, 10)
        tops = [{w for w, _ in topic} for topic in summary.topics]
        hits_a = [len(t & set(set_a)) for t in tops]
        best_a = max(range(2), key=lambda k: hits_a[k])
        assert hits_a[best_a] >= 8
        assert len(tops[1 - best_a] & set(set_b)) >= 8


class TestTopWords:
    def test_degenerate_single_word_topic(self):
        # topic 0 saw only word "xx"
        biterms = [Biterm(0, 0)]
        model = fit_btm(biterms, ["xx", "yy"], n_topics=2, iterations=5, seed=1)
        summary = top_words(model, 1)
        assigned = int(np.argmax(model.n_z))
        assert summary.topics[assigned][0][0] == "xx"

    def test_tie_broken_lexicographically(self):
        docs = [["zz", "aa"]]
        biterms, vocab = extract_biterms(docs)
        model = fit_btm(biterms, vocab, n_topics=2, iterations=3, seed=2)
        for topic in top_words(model, 2).topics:
            probs = [p for _, p in topic]
            words = [w for w, _ in topic]
            if probs[0] == probs[1]:
                assert words == sorted(words)

    def test_truncated_when_n_exceeds_vocab(self):
        biterms, vocab = extract_biterms([["aa", "bb"]])
        model = fit_btm(biterms, vocab, n_topics=2, iterations=2, seed=3)
        summary = top_words(model, 50)
        assert all(len(topic) == 2 for topic in summary.topics)

    def test_ranking_strictly_by_probability(self):
        docs, _, _ = planted_corpus(n_docs=60)
        biterms, vocab = extract_biterms(docs)
        model = fit_btm(biterms, vocab, n_topics=2, iterations=20, seed=5)
        for topic in top_words(model, 10).topics:
            probs = [p for _, p in topic]
            assert probs == sorted(probs, reverse=True)


class TestEstimator:
    def test_fit_on_raw_texts(self):
        docs, set_a, _ = planted_corpus(n_docs=100)
        texts = [" ".join(doc) for doc in docs]
        btm = BitermTopicModel(n_topics=2, iterations=100, seed=6)
        btm.fit(texts)
        summary = btm.topic_words(10)
        assert len(summary.topics) == 2

    def test_not_fitted(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            BitermTopicModel().topic_words()

    def test_get_params_clone(self):
        from sklearn.base import clone

        btm = BitermTopicModel(n_topics=7, iterations=12)
        assert clone(btm).get_params() == btm.get_params()
