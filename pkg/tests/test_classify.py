import math

import numpy as np
import pytest

from clickbait.classify import (
    ClassifierConfig,
    ClickbaitClassifier,
    load_classifier,
    predict,
    predict_batch,
    save_classifier,
    softmax2,
    softmax_cross_entropy,
    softmax_cross_entropy_grad,
    train_classifier,
)
from clickbait.corpus import CLICKBAIT, NON_CLICKBAIT, LabeledHeadline
from clickbait.embed import (
    EmbeddingConfig,
    export_vectors,
    load_vectors,
    sentence_vector,
    train_embeddings,
)
from clickbait.textproc import tokenize

from conftest import make_separable_dataset, small_config

from test_embed import finite_difference_check


class TestSoftmax:
    def test_equal_logits(self):
        assert softmax2(2.0, 2.0) == (0.5, 0.5)

    def test_zero_ln3(self):
        p0, p1 = softmax2(0.0, math.log(3.0))
        assert abs(p0 - 0.25) < 1e-12
        assert abs(p1 - 0.75) < 1e-12

    def test_sums_to_one_and_open_interval(self):
        # float64 saturates to exactly 0/1 once |z0 - z1| > ~36, so the
        # open-interval property is asserted within representable range
        rng = np.random.default_rng(0)
        for _ in range(200):
            z0, z1 = rng.uniform(-17, 17, size=2)
            p0, p1 = softmax2(z0, z1)
            assert abs(p0 + p1 - 1.0) < 1e-9
            assert 0.0 < p0 < 1.0 and 0.0 < p1 < 1.0
        for z0, z1 in [(1000.0, -1000.0), (-500.0, 80.0)]:
            p0, p1 = softmax2(z0, z1)
            assert 0.0 <= p0 <= 1.0 and 0.0 <= p1 <= 1.0
            assert abs(p0 + p1 - 1.0) < 1e-9

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            z0, z1, shift = rng.normal(0, 10, size=3)
            a = softmax2(z0, z1)
            b = softmax2(z0 + shift, z1 + shift)
            assert abs(a[0] - b[0]) < 1e-12
            assert abs(a[1] - b[1]) < 1e-12


class TestTrainClassifier:
    def test_separable_toy_reaches_full_training_accuracy(self):
        data = [LabeledHeadline("wow amazing", CLICKBAIT)] * 50 + [
            LabeledHeadline("senate passes bill", NON_CLICKBAIT)
        ] * 50
        model = train_classifier(data, config=small_config())
        correct = sum(
            predict(model, rec.text).label == rec.label for rec in data
        )
        assert correct == len(data)

    def test_single_class_rejected(self):
        data = [LabeledHeadline("wow", CLICKBAIT)] * 10
        with pytest.raises(ValueError, match="both classes"):
            train_classifier(data, config=small_config())

    def test_pretrained_epochs_zero_preserves_sentence_means(self, tmp_path):
        corpus = [rec.text for rec in make_separable_dataset(30)]
        emb = train_embeddings(
            corpus,
            EmbeddingConfig(dim=12, epochs=2, seed=5),
            min_count=1,
            bucket_count=256,
        )
        path = str(tmp_path / "vec.txt")
        export_vectors(emb, path)
        vectors = load_vectors(path)
        model = train_classifier(
            make_separable_dataset(10),
            init=vectors,
            config=ClassifierConfig(dim=12, epochs=0, bucket_count=256),
        )
        lookup = {w: vectors.matrix[i] for i, w in enumerate(vectors.words)}
        text = "wow senate amazing"
        tokens = tokenize(text)
        expected = np.mean([lookup[t] for t in tokens], axis=0)
        got = sentence_vector(model.embedding, tokens)
        np.testing.assert_allclose(got, expected, atol=1e-6)

    def test_pretrained_dim_mismatch_rejected(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("1 3\nfoo 1 2 3\n", encoding="utf-8")
        vectors = load_vectors(str(path))
        with pytest.raises(ValueError, match="dim"):
            train_classifier(
                make_separable_dataset(5),
                init=vectors,
                config=ClassifierConfig(dim=8, epochs=1, bucket_count=64),
            )

    def test_embedding_model_initializer_not_mutated(self):
        corpus = [rec.text for rec in make_separable_dataset(20)]
        emb = train_embeddings(
            corpus,
            EmbeddingConfig(dim=10, epochs=1, seed=4),
            min_count=1,
            bucket_count=128,
        )
        before = emb.input_matrix.copy()
        model = train_classifier(
            make_separable_dataset(20),
            init=emb,
            config=ClassifierConfig(dim=10, epochs=3, bucket_count=128),
        )
        np.testing.assert_array_equal(emb.input_matrix, before)
        assert not np.array_equal(model.embedding.input_matrix, before)

    def test_freeze_embeddings_leaves_rows_untouched(self):
        data = make_separable_dataset(20)
        frozen = train_classifier(
            data, config=small_config(freeze_embeddings=True, seed=6)
        )
        fresh = train_classifier(
            data, config=small_config(freeze_embeddings=True, epochs=0, seed=6)
        )
        np.testing.assert_array_equal(
            frozen.embedding.input_matrix, fresh.embedding.input_matrix
        )
        assert not np.array_equal(
            frozen.output_weights, np.zeros_like(frozen.output_weights)
        )

    def test_fine_tuning_moves_embedding_rows(self):
        data = make_separable_dataset(20)
        tuned = train_classifier(data, config=small_config(seed=6))
        fresh = train_classifier(data, config=small_config(epochs=0, seed=6))
        assert not np.array_equal(
            tuned.embedding.input_matrix, fresh.embedding.input_matrix
        )

    def test_deterministic_at_one_worker(self):
        data = make_separable_dataset(15)
        a = train_classifier(data, config=small_config(seed=9))
        b = train_classifier(data, config=small_config(seed=9))
        np.testing.assert_array_equal(a.output_weights, b.output_weights)
        np.testing.assert_array_equal(
            a.embedding.input_matrix, b.embedding.input_matrix
        )

    def test_parallel_workers_train_a_working_model(self):
        data = make_separable_dataset(40)
        model = train_classifier(data, config=small_config(workers=4, epochs=5))
        assert np.isfinite(model.output_weights).all()
        correct = sum(predict(model, rec.text).label == rec.label for rec in data)
        assert correct / len(data) >= 0.95

    def test_subword_transfer_classifies_unseen_inflections(self):
        # the reason for subword units: words never seen in training still
        # get informative vectors through their shared character n-grams
        import random

        rng = random.Random(19)
        click_stems = ["shock", "amaze", "secret", "unbeliev", "crazi", "viral"]
        news_stems = ["senat", "budget", "polici", "econom", "minist", "treati"]
        train_suffixes = ["ing", "ed", "es"]
        test_suffixes = ["ingly", "er"]

        def headline(stems, suffixes):
            return " ".join(
                rng.choice(stems) + rng.choice(suffixes) for _ in range(4)
            )

        train = [
            LabeledHeadline(headline(click_stems, train_suffixes), CLICKBAIT)
            for _ in range(80)
        ] + [
            LabeledHeadline(headline(news_stems, train_suffixes), NON_CLICKBAIT)
            for _ in range(80)
        ]
        test = [
            LabeledHeadline(headline(click_stems, test_suffixes), CLICKBAIT)
            for _ in range(40)
        ] + [
            LabeledHeadline(headline(news_stems, test_suffixes), NON_CLICKBAIT)
            for _ in range(40)
        ]
        model = train_classifier(
            train, config=small_config(dim=32, bucket_count=4096, epochs=8)
        )
        vocab = model.embedding.vocab
        test_words = {t for rec in test for t in rec.text.split()}
        assert all(w not in vocab for w in test_words)  # every test word is OOV
        correct = sum(predict(model, rec.text).label == rec.label for rec in test)
        assert correct / len(test) >= 0.9


class TestPredict:
    def test_zero_weights_tie_goes_to_non_clickbait(self, toy_dataset):
        model = train_classifier(toy_dataset, config=small_config(epochs=0))
        pred = predict(model, "anything at all")
        assert pred.probabilities == (0.5, 0.5)
        assert pred.label == NON_CLICKBAIT

    def test_empty_text_prior_scores(self, toy_classifier):
        pred = predict(toy_classifier, "")
        assert pred.probabilities == (0.5, 0.5)
        assert pred.label == NON_CLICKBAIT

    def test_probabilities_sum_to_one(self, toy_classifier, toy_dataset):
        for rec in toy_dataset[:20]:
            pred = predict(toy_classifier, rec.text)
            assert abs(sum(pred.probabilities) - 1.0) < 1e-9

    def test_pure_function(self, toy_classifier):
        a = predict(toy_classifier, "wow amazing secret")
        b = predict(toy_classifier, "wow amazing secret")
        assert a == b

    def test_oov_words_still_classified(self, toy_classifier):
        # subword composition gives unseen words informative vectors
        pred = predict(toy_classifier, "wowz amazingly")
        assert pred.label in (CLICKBAIT, NON_CLICKBAIT)

    def test_batch_singleton_equals_predict(self, toy_classifier):
        single = predict(toy_classifier, "secret trick")
        batch = predict_batch(toy_classifier, ["secret trick"])
        assert batch == [single]

    def test_batch_matches_sequential_loop(self, toy_classifier, toy_dataset):
        texts = [rec.text for rec in toy_dataset[:50]]
        batch = predict_batch(toy_classifier, texts)
        sequential = [predict(toy_classifier, t) for t in texts]
        assert batch == sequential

    def test_large_batch_throughput_and_sequential_equality(self, toy_classifier):
        import random
        import time

        rng = random.Random(77)
        words = ["wow", "amazing", "senate", "budget", "secret", "policy"]
        texts = [" ".join(rng.choices(words, k=5)) for _ in range(10_000)]
        start = time.time()
        batch = predict_batch(toy_classifier, texts)
        elapsed = time.time() - start
        sequential = [predict(toy_classifier, t) for t in texts[:500]]
        assert batch[:500] == sequential
        print(f"\npredict_batch throughput: {len(texts) / elapsed:.0f} texts/s")


class TestGradients:
    def test_cross_entropy_matches_finite_differences(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            d = int(rng.integers(2, 9))
            weights = rng.normal(0, 0.7, size=(2, d))
            sentence = rng.normal(0, 0.7, size=d)
            y = int(rng.integers(0, 2))
            g_w, g_s = softmax_cross_entropy_grad(weights, sentence, y)
            assert (
                finite_difference_check(
                    lambda: softmax_cross_entropy(weights, sentence, y), g_w, weights
                )
                < 1e-4
            )
            assert (
                finite_difference_check(
                    lambda: softmax_cross_entropy(weights, sentence, y), g_s, sentence
                )
                < 1e-4
            )

    def test_kernel_step_matches_analytic_gradient(self):
        # one SGD step on one example must equal the reference gradients
        from clickbait import _sgd
        from clickbait.embed import init_model
        from clickbait.textproc import build_vocab

        rng = np.random.default_rng(40)
        vocab = build_vocab(["aa", "bb", "cc"], min_count=1, bucket_count=32)
        model = init_model(vocab, EmbeddingConfig(dim=6, seed=3))
        weights = rng.normal(0, 0.4, size=(2, 6)).astype(np.float32)
        from clickbait.classify import encode_examples

        flat, offsets, nwords = encode_examples(["aa bb"], vocab)
        labels = np.array([1], dtype=np.int8)
        order = np.array([0], dtype=np.int64)
        lr = 0.3
        inp_before = model.input_matrix.copy()
        w_before = weights.copy().astype(np.float64)
        s = np.zeros(6, dtype=np.float32)
        for r in flat:
            s += inp_before[r]
        s = s / np.float32(nwords[0])
        g_w, g_s = softmax_cross_entropy_grad(w_before, s.astype(np.float64), 1)
        _sgd.clf_epoch_serial(
            model.input_matrix, weights, flat, offsets, nwords, labels, order,
            lr, np.int64(1), np.int64(0), False,
        )
        np.testing.assert_allclose(
            weights.astype(np.float64), w_before - lr * g_w, atol=1e-6
        )
        expected_rows = inp_before.astype(np.float64).copy()
        for r in flat:
            expected_rows[r] -= lr * g_s / nwords[0]
        np.testing.assert_allclose(
            model.input_matrix.astype(np.float64), expected_rows, atol=1e-6
        )


class TestClassifierIO:
    def test_round_trip_predictions_identical(self, toy_classifier, tmp_path):
        path = str(tmp_path / "clf.bin")
        save_classifier(toy_classifier, path)
        loaded = load_classifier(path)
        assert loaded.labels == toy_classifier.labels
        for text in ("wow amazing", "senate passes bill", "unknown words here"):
            assert predict(loaded, text) == predict(toy_classifier, text)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"XXXXX" + b"\x00" * 32)
        with pytest.raises(ValueError, match="magic"):
            load_classifier(str(path))


class TestEstimator:
    def test_int_labels_round_trip(self):
        data = make_separable_dataset(20)
        X = [rec.text for rec in data]
        y = [1 if rec.label == CLICKBAIT else 0 for rec in data]
        clf = ClickbaitClassifier(dim=16, bucket_count=512, epochs=4, seed=3)
        preds = clf.fit(X, y).predict(X)
        assert set(preds) <= {0, 1}
        assert (preds == np.array(y)).mean() == 1.0
        proba = clf.predict_proba(X[:5])
        assert proba.shape == (5, 2)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)

    def test_string_labels_round_trip(self):
        data = make_separable_dataset(15)
        X = [rec.text for rec in data]
        y = [rec.label for rec in data]
        clf = ClickbaitClassifier(dim=16, bucket_count=512, epochs=4, seed=3)
        preds = clf.fit(X, y).predict(X)
        assert set(preds) <= {CLICKBAIT, NON_CLICKBAIT}
        # classes_ is sorted; proba columns follow it
        assert list(clf.classes_) == sorted({CLICKBAIT, NON_CLICKBAIT})
        proba = clf.predict_proba(X[:4])
        col = list(clf.classes_).index(CLICKBAIT)
        manual = [predict(clf.model_, t).p_clickbait for t in X[:4]]
        np.testing.assert_allclose(proba[:, col], manual)

    def test_not_fitted_error(self):
        from sklearn.exceptions import NotFittedError

        clf = ClickbaitClassifier()
        with pytest.raises(NotFittedError):
            clf.predict(["text"])

    def test_get_params_set_params_clone(self):
        from sklearn.base import clone

        clf = ClickbaitClassifier(dim=32, epochs=2, seed=7)
        params = clf.get_params()
        assert params["dim"] == 32 and params["epochs"] == 2
        clf.set_params(dim=8)
        assert clf.dim == 8
        cloned = clone(clf)
        assert cloned.get_params() == clf.get_params()
