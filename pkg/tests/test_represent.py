import math
import random
from collections import Counter

import numpy as np
import pytest

from fixscope.errors import ConfigError, DimensionMismatch, SchemeMismatch
from fixscope.represent import (AutoencoderConfig, BowVector,
                                ChangeKey, DistanceConfig, EqualityScheme,
                                MetricFamily, build_vocabulary,
                                cosine_distance, embed, init_autoencoder,
                                jaccard_distance, loss_gradients, project,
                                reconstruction_loss, script_distance,
                                train_autoencoder, vectorize)
from fixscope.treediff import EditScript, diff

from conftest import random_tree


def script_of(records):
    return EditScript.from_records(records)


UPDATE_BINOP = {"kind": "Update", "node_type": "BinOp", "label": "<",
                "parent_type": "If", "new_label": "<="}
UPDATE_LITERAL = {"kind": "Update", "node_type": "Literal", "label": "1",
                  "parent_type": "Assign", "new_label": "2"}
INSERT_NAME = {"kind": "Insert", "node_type": "Name", "label": "x",
               "parent_type": "Assign", "position": 0}


# ---------------------------------------------------------------------------
# projection

def test_project_empty_script():
    assert project(script_of([]), EqualityScheme.KIND) == Counter()


def test_project_kind_drops_everything_else():
    keys = project(script_of([UPDATE_BINOP]), EqualityScheme.KIND)
    assert keys == Counter({ChangeKey("Update"): 1})


def test_project_schemes_split_and_collapse():
    script = script_of([UPDATE_BINOP, UPDATE_LITERAL])
    fine = project(script, EqualityScheme.KIND_TYPE)
    assert fine == Counter({ChangeKey("Update", "BinOp"): 1,
                            ChangeKey("Update", "Literal"): 1})
    coarse = project(script, EqualityScheme.KIND)
    assert coarse == Counter({ChangeKey("Update"): 2})


def test_refinement_fine_zero_implies_coarse_zero():
    rng = random.Random(9)
    schemes = list(EqualityScheme)
    for _ in range(100):
        a = diff(random_tree(rng), random_tree(rng))
        b = diff(random_tree(rng), random_tree(rng))
        fine = EqualityScheme.KIND_TYPE_LABEL_PARENT
        if project(a, fine) == project(b, fine):
            for coarse in schemes:
                assert project(a, coarse) == project(b, coarse)


def test_change_key_total_order_and_string_roundtrip():
    keys = [ChangeKey("Update", "BinOp", "<", "If"), ChangeKey("Insert"),
            ChangeKey("Insert", "Name"), ChangeKey("Update", "BinOp", "<")]
    ordered = sorted(keys, key=ChangeKey.sort_key)
    assert ordered[0] == ChangeKey("Insert")
    for key in keys:
        assert ChangeKey.from_string(key.to_string()) == key


# ---------------------------------------------------------------------------
# jaccard

def test_jaccard_identical_nonempty():
    keys = Counter({ChangeKey("Update"): 2})
    assert jaccard_distance(keys, keys) == 0.0


def test_jaccard_disjoint():
    a = Counter({ChangeKey("Update"): 1})
    b = Counter({ChangeKey("Delete"): 2})
    assert jaccard_distance(a, b) == 1.0


def test_jaccard_partial_overlap():
    u = ChangeKey("Update")
    d = ChangeKey("Delete")
    assert jaccard_distance(Counter({u: 1}), Counter({u: 1, d: 1})) == 0.5


def test_jaccard_empty_convention():
    assert jaccard_distance(Counter(), Counter()) == 0.0
    assert jaccard_distance(Counter(), Counter({ChangeKey("Update"): 1})) == 1.0


def test_jaccard_multiset_multiplicities_matter():
    u = ChangeKey("Update")
    a = Counter({u: 3})
    b = Counter({u: 1})
    assert jaccard_distance(a, b) == pytest.approx(1 - 1 / 3)


# ---------------------------------------------------------------------------
# vocabulary + vectorize

def test_vocabulary_from_one_script():
    vocab = build_vocabulary([script_of([UPDATE_BINOP, UPDATE_LITERAL])],
                             EqualityScheme.KIND_TYPE, min_df=1)
    assert len(vocab) == 2


def test_vocabulary_min_df_above_corpus():
    vocab = build_vocabulary([script_of([UPDATE_BINOP])],
                             EqualityScheme.KIND, min_df=2)
    assert len(vocab) == 0


def test_vocabulary_min_df_two_scripts_share_one_key():
    scripts = [script_of([UPDATE_BINOP, INSERT_NAME]),
               script_of([UPDATE_BINOP])]
    vocab = build_vocabulary(scripts, EqualityScheme.KIND_TYPE, min_df=2)
    assert len(vocab) == 1
    assert vocab.keys[0] == ChangeKey("Update", "BinOp")


def test_vectorize_counts_and_conservation():
    vocab = build_vocabulary([script_of([UPDATE_BINOP])],
                             EqualityScheme.KIND_TYPE)
    script = script_of([UPDATE_BINOP, UPDATE_BINOP, INSERT_NAME])
    vec = vectorize(script, EqualityScheme.KIND_TYPE, vocab)
    assert vec.total() == 2
    assert vec.oov == 1
    assert vec.total() + vec.oov == script.length
    assert list(vec.to_dense()) == [2.0]


def test_vectorize_empty_script_zero_vector():
    vocab = build_vocabulary([script_of([UPDATE_BINOP])], EqualityScheme.KIND)
    vec = vectorize(script_of([]), EqualityScheme.KIND, vocab)
    assert vec.total() == 0 and vec.oov == 0
    assert not vec.to_dense().any()


def test_vectorize_scheme_mismatch():
    vocab = build_vocabulary([script_of([UPDATE_BINOP])], EqualityScheme.KIND)
    with pytest.raises(SchemeMismatch):
        vectorize(script_of([UPDATE_BINOP]), EqualityScheme.KIND_TYPE, vocab)


# ---------------------------------------------------------------------------
# cosine

def test_cosine_identical_vectors():
    v = np.array([1.0, 2.0, 3.0])
    assert cosine_distance(v, v.copy()) == 0.0


def test_cosine_orthogonal():
    assert cosine_distance(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == 1.0


def test_cosine_closed_form():
    d = cosine_distance(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
    assert d == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-12)


def test_cosine_zero_conventions():
    zero = np.zeros(3)
    some = np.array([1.0, 0.0, 0.0])
    assert cosine_distance(zero, zero.copy()) == 0.0
    assert cosine_distance(zero, some) == 1.0
    assert cosine_distance(some, zero) == 1.0


def test_cosine_signed_rescaled_to_unit_interval():
    a = np.array([1.0, 0.0])
    assert cosine_distance(a, -a, signed=True) == pytest.approx(1.0)
    assert cosine_distance(a, np.array([0.0, 1.0]), signed=True) == \
        pytest.approx(0.5)


# ---------------------------------------------------------------------------
# autoencoder

def make_vectors(rows, vocab_ref="v"):
    return [BowVector(counts={i: c for i, c in enumerate(row) if c},
                      dim=len(row), vocab_ref=vocab_ref)
            for row in rows]


def test_autoencoder_memorizes_a_repeated_vector():
    vectors = make_vectors([[2, 0, 1, 0]] * 8)
    config = AutoencoderConfig(hidden_dim=4, learning_rate=0.2, epochs=400,
                               batch_size=4, seed=1)
    model = train_autoencoder(vectors, config)
    assert model.final_loss < 1e-3


def test_autoencoder_zero_epochs_keeps_seeded_init():
    vectors = make_vectors([[1, 0, 2], [0, 1, 0]])
    config = AutoencoderConfig(hidden_dim=2, epochs=0, seed=42)
    model = train_autoencoder(vectors, config)
    reference = init_autoencoder(3, config)
    assert np.array_equal(model.encoder_weights, reference.encoder_weights)
    assert np.array_equal(model.decoder_weights, reference.decoder_weights)
    assert np.array_equal(model.encoder_bias, reference.encoder_bias)
    x = np.stack([v.to_dense() / np.linalg.norm(v.to_dense())
                  for v in vectors])
    assert model.final_loss == pytest.approx(reconstruction_loss(reference, x))


def test_autoencoder_training_is_reproducible():
    vectors = make_vectors([[1, 2, 0, 1], [0, 0, 3, 1], [2, 2, 2, 2]])
    config = AutoencoderConfig(hidden_dim=3, epochs=50, batch_size=2, seed=9)
    first = train_autoencoder(vectors, config)
    second = train_autoencoder(vectors, config)
    assert np.array_equal(first.encoder_weights, second.encoder_weights)
    assert np.array_equal(first.decoder_weights, second.decoder_weights)
    assert first.final_loss == second.final_loss


def gradient_check(model, x, step=1e-5):
    """Max relative error between analytic and central-difference gradients."""
    analytic = loss_gradients(model, x)
    params = [model.encoder_weights, model.encoder_bias,
              model.decoder_weights, model.decoder_bias]
    worst = 0.0
    for grad, param in zip(analytic, params):
        flat_param = param.ravel()
        flat_grad = grad.ravel()
        for idx in range(flat_param.size):
            original = flat_param[idx]
            flat_param[idx] = original + step
            up = reconstruction_loss(model, x)
            flat_param[idx] = original - step
            down = reconstruction_loss(model, x)
            flat_param[idx] = original
            numeric = (up - down) / (2 * step)
            scale = max(abs(numeric), abs(flat_grad[idx]), 1e-8)
            worst = max(worst, abs(numeric - flat_grad[idx]) / scale)
    return worst


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    for seed in range(5):
        config = AutoencoderConfig(hidden_dim=3, seed=seed)
        model = init_autoencoder(4, config)
        x = rng.random((4, 4))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        assert gradient_check(model, x) < 1e-4


def test_autoencoder_config_validation():
    vectors = make_vectors([[1, 0]])
    with pytest.raises(ConfigError):
        train_autoencoder(vectors, AutoencoderConfig(hidden_dim=0))
    with pytest.raises(ConfigError):
        train_autoencoder(vectors, AutoencoderConfig(learning_rate=0))
    with pytest.raises(ConfigError):
        train_autoencoder([], AutoencoderConfig())


def test_embed_zero_vector_is_bias_activation():
    config = AutoencoderConfig(hidden_dim=3, seed=4)
    model = init_autoencoder(5, config)
    model.encoder_bias = np.array([0.5, -0.5, 0.0])
    out = embed(BowVector(counts={}, dim=5, vocab_ref="v"), model)
    assert np.array_equal(out.values, np.array([0.5, 0.0, 0.0]))


def test_embed_shapes_and_determinism():
    config = AutoencoderConfig(hidden_dim=7, seed=4)
    model = init_autoencoder(5, config)
    vec = BowVector(counts={0: 1, 3: 2}, dim=5, vocab_ref="v")
    first = embed(vec, model)
    second = embed(vec, model)
    assert first.values.shape == (7,)
    assert np.array_equal(first.values, second.values)


def test_embed_dimension_mismatch():
    model = init_autoencoder(5, AutoencoderConfig(hidden_dim=2, seed=0))
    with pytest.raises(DimensionMismatch):
        embed(BowVector(counts={}, dim=4, vocab_ref="v"), model)


# ---------------------------------------------------------------------------
# script_distance dispatch

def fitted_configs(scripts):
    configs = []
    for scheme in EqualityScheme:
        configs.append(DistanceConfig(MetricFamily.JACCARD, scheme))
        vocab = build_vocabulary(scripts, scheme)
        configs.append(DistanceConfig(MetricFamily.BOW_COSINE, scheme,
                                      vocabulary=vocab))
        if len(vocab) > 0:
            vectors = [vectorize(s, scheme, vocab) for s in scripts]
            ae = train_autoencoder(vectors, AutoencoderConfig(
                hidden_dim=4, epochs=20, seed=0))
            configs.append(DistanceConfig(MetricFamily.AE_COSINE, scheme,
                                          vocabulary=vocab, autoencoder=ae))
    return configs


def test_script_distance_properties_on_random_scripts():
    rng = random.Random(77)
    scripts = [diff(random_tree(rng), random_tree(rng)) for _ in range(20)]
    configs = fitted_configs(scripts)
    for config in configs:
        for s in scripts[:5]:
            assert script_distance(s, s, config) == 0.0
        for i in range(0, 10, 2):
            a, b = scripts[i], scripts[i + 1]
            d_ab = script_distance(a, b, config)
            d_ba = script_distance(b, a, config)
            assert d_ab == d_ba
            assert 0.0 <= d_ab <= 1.0


def test_script_distance_disjoint_jaccard_is_one():
    a = script_of([UPDATE_BINOP])
    b = script_of([{"kind": "Delete", "node_type": "Name", "label": "x",
                    "parent_type": "Assign"}])
    config = DistanceConfig(MetricFamily.JACCARD, EqualityScheme.KIND)
    assert script_distance(a, b, config) == 1.0


def test_script_distance_requires_fitted_artifacts():
    a = script_of([UPDATE_BINOP])
    with pytest.raises(ConfigError):
        script_distance(a, a, DistanceConfig(MetricFamily.BOW_COSINE,
                                             EqualityScheme.KIND))
    vocab = build_vocabulary([a], EqualityScheme.KIND)
    with pytest.raises(ConfigError):
        script_distance(a, a, DistanceConfig(MetricFamily.AE_COSINE,
                                             EqualityScheme.KIND,
                                             vocabulary=vocab))
