import math
import random

import numpy as np
import pytest

from patcite.corpus import IobLabel, LabeledDocument, Token, tokenize
from patcite.crf import TrainConfig, TrainingError, train
from patcite.crf.features import (
    PAGE_RANGE_PATTERN,
    YEAR_PATTERN,
    extract_features,
)
from patcite.crf.model import (
    CrfModel,
    decode_document,
    load_model,
    log_partition,
    save_model,
    viterbi_decode,
)
from patcite.crf.training import build_objective
from patcite.errors import DataError

from oracles import enumerate_inference, oracle_state_scores, random_crf_instance


def make_doc(doc_id, text, labels=None):
    tokens = tuple(tokenize(text))
    gold = tuple(IobLabel(l) for l in labels) if labels else None
    assert gold is None or len(gold) == len(tokens)
    return LabeledDocument(doc_id, tokens, gold)


def zero_model(feats):
    names = sorted({f for fs in feats for f in fs})
    return CrfModel(
        feature_index={f: i for i, f in enumerate(names)},
        state_weights=np.zeros((len(names), 3)),
        transition_weights=np.zeros((3, 3)),
    )


class TestFeatureExtraction:
    def test_eleven_current_templates_plus_neighbors(self):
        doc = make_doc("d", "aa bb cc dd ee")
        feats = extract_features(doc)
        # middle token has all four neighbours: 11 + 4 * 6
        assert len(feats[2]) == 11 + 4 * 6
        # first token: BOS sentinels replace the six features at -1 and -2
        assert len(feats[0]) == 11 + 2 * 6 + 2

    def test_year_feature_fires(self):
        doc = make_doc("d", "published 2002 really")
        feats = extract_features(doc)
        assert "year=1" in feats[1]
        assert "digit=1" in feats[1]
        assert "year=0" in feats[0]

    def test_year_pattern_allows_trailing_punctuation(self):
        assert YEAR_PATTERN.fullmatch("2002")
        assert YEAR_PATTERN.fullmatch("2002,")
        assert not YEAR_PATTERN.fullmatch("20021")
        assert not YEAR_PATTERN.fullmatch("1899")

    def test_page_range_feature_fires(self):
        doc = make_doc("d", "volume 22:981-993 cited")
        feats = extract_features(doc)
        assert "pages=1" in feats[1]
        assert PAGE_RANGE_PATTERN.fullmatch("981-993")
        assert not PAGE_RANGE_PATTERN.fullmatch("2002")

    def test_bos_eos_sentinels(self):
        doc = make_doc("d", "one two three")
        feats = extract_features(doc)
        assert "-1:BOS" in feats[0] and "-2:BOS" in feats[0]
        assert "-2:BOS" in feats[1] and "-1:BOS" not in feats[1]
        assert "+1:EOS" in feats[2] and "+2:EOS" in feats[2]
        assert "+2:EOS" in feats[1]

    def test_deterministic(self):
        doc = make_doc("d", "Eskildsen et al. 2002")
        assert extract_features(doc) == extract_features(doc)

    def test_pos_column_used_when_present(self):
        tokens = (Token("word", 0, 4, pos="NN"),)
        feats = extract_features(LabeledDocument("d", tokens))
        assert "pos=NN" in feats[0]


class TestInference:
    def test_uniform_log_partition(self):
        doc = make_doc("d", "aa bb cc dd")
        feats = extract_features(doc)
        model = zero_model(feats)
        log_z, marginals = log_partition(model, feats)
        assert log_z == pytest.approx(4 * math.log(3), abs=1e-10)
        assert np.allclose(marginals, 1 / 3)

    def test_matches_enumeration_on_random_instances(self):
        rng = random.Random(42)
        for trial in range(60):
            model, feats = random_crf_instance(rng, integer_weights=trial % 3 == 0)
            log_z, marginals = log_partition(model, feats)
            expected_log_z, expected_marginals, expected_path = enumerate_inference(model, feats)
            assert log_z == pytest.approx(expected_log_z, abs=1e-8)
            assert np.allclose(marginals, expected_marginals, atol=1e-8)
            assert viterbi_decode(model, feats) == expected_path

    def test_zero_weights_decode_all_b(self):
        doc = make_doc("d", "aa bb cc")
        feats = extract_features(doc)
        assert viterbi_decode(zero_model(feats), feats) == [IobLabel.B] * 3

    def test_any_labelling_scores_at_most_log_partition(self):
        rng = random.Random(1)
        from oracles import all_sequences

        for _ in range(20):
            model, feats = random_crf_instance(rng)
            log_z, _ = log_partition(model, feats)
            scores = oracle_state_scores(model, feats)
            n = len(feats)
            seqs = all_sequences(n)
            totals = scores[np.arange(n)[None, :], seqs].sum(axis=1)
            if n > 1:
                totals = totals + model.transition_weights[seqs[:, :-1], seqs[:, 1:]].sum(axis=1)
            assert np.all(totals <= log_z + 1e-9)

    def test_constant_shift_of_feature_weights_keeps_argmax(self):
        rng = random.Random(7)
        model, feats = random_crf_instance(rng)
        before = viterbi_decode(model, feats)
        name = next(iter(model.feature_index))
        shifted = model.state_weights.copy()
        shifted[model.feature_index[name]] += 3.7
        shifted_model = CrfModel(model.feature_index, shifted, model.transition_weights)
        assert viterbi_decode(shifted_model, feats) == before

    def test_unknown_features_contribute_zero(self):
        doc = make_doc("d", "aa bb")
        feats = extract_features(doc)
        model = zero_model(extract_features(make_doc("d", "zz yy")))
        log_z, _ = log_partition(model, feats)
        assert log_z == pytest.approx(2 * math.log(3))

    def test_empty_sequence_rejected(self):
        model = zero_model([["f"]])
        with pytest.raises(ValueError):
            viterbi_decode(model, [])
        with pytest.raises(ValueError):
            log_partition(model, [])


class TestTraining:
    def test_recovers_single_training_sequence(self):
        doc = make_doc(
            "d1",
            "See Smith et al., Nature 12:34-56, 1999. for details",
            "OBIIIIIIIOOO",
        )
        model = train([doc])
        assert tuple(decode_document(model, doc)) == doc.gold_labels

    def test_gradient_matches_finite_differences(self):
        doc = make_doc("d1", "Smith 1999 , 12:34-56", "BIII")
        objective, n_params, _ = build_objective([doc], TrainConfig(l2_sigma=2.0))
        rng = np.random.default_rng(3)
        w = rng.normal(0, 0.5, size=n_params)
        _, grad = objective(w)
        h = 1e-5
        worst = 0.0
        for k in range(n_params):
            up, down = w.copy(), w.copy()
            up[k] += h
            down[k] -= h
            numeric = (objective(up)[0] - objective(down)[0]) / (2 * h)
            scale = max(abs(numeric), abs(grad[k]), 1.0)
            worst = max(worst, abs(numeric - grad[k]) / scale)
        assert worst < 1e-4

    def test_strong_regularization_shrinks_to_uniform(self):
        doc = make_doc("d1", "Smith et al. 1999", "BIII")
        model = train([doc], TrainConfig(l2_sigma=1e-6))
        assert np.abs(model.state_weights).max() < 1e-6
        n_tokens = len(doc.tokens)
        assert model.metadata["final_nll"] == pytest.approx(n_tokens * math.log(3), rel=1e-6)

    def test_training_is_deterministic(self):
        docs = [
            make_doc("d1", "Smith et al., Nature 12:34-56, 1999.", "BIIIIIIII"),
            make_doc("d2", "results shown in Table 4 below", "OOOOOO"),
        ]
        m1 = train(docs)
        m2 = train(docs)
        assert np.array_equal(m1.state_weights, m2.state_weights)
        assert np.array_equal(m1.transition_weights, m2.transition_weights)
        assert m1.feature_index == m2.feature_index

    def test_requires_gold_labels(self):
        with pytest.raises(DataError):
            train([make_doc("d", "hello world")])

    def test_rejects_ill_formed_gold(self):
        doc = make_doc("d", "aa bb cc", "OIO")
        with pytest.raises(DataError, match="ill-formed"):
            train([doc])

    def test_no_documents_rejected(self):
        with pytest.raises(TrainingError):
            train([])

    def test_expected_counts_normalize_per_position(self):
        rng = random.Random(11)
        model, feats = random_crf_instance(rng)
        _, marginals = log_partition(model, feats)
        assert np.allclose(marginals.sum(axis=1), 1.0, atol=1e-12)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        doc = make_doc("d1", "Smith et al. 1999 , Nature", "BIIIOO")
        model = train([doc])
        path = tmp_path / "model.json.gz"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.feature_index == model.feature_index
        assert np.allclose(loaded.state_weights, model.state_weights)
        assert np.allclose(loaded.transition_weights, model.transition_weights)
        assert tuple(decode_document(loaded, doc)) == doc.gold_labels

    def test_version_mismatch_rejected(self, tmp_path):
        import gzip
        import json

        path = tmp_path / "model.json.gz"
        with gzip.open(path, "wt") as fh:
            json.dump({"format_version": 99}, fh)
        with pytest.raises(DataError, match="version"):
            load_model(path)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "model.json.gz"
        path.write_bytes(b"not a model")
        with pytest.raises(DataError):
            load_model(path)
