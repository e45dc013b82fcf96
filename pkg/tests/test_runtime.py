"""Bundle I/O, tokenizer and forward-pass behavior."""

from __future__ import annotations

import json
import struct

import numpy as np
import pytest

from sidutxt import (
    MAGIC,
    BundleFormatError,
    ModelBundle,
    TokenSequence,
    Vocabulary,
    extract_words,
    forward,
    forward_many,
    load_bundle,
    read_metadata,
    save_bundle,
    tokenize,
)
from sidutxt.runtime import OUTPUT_SOFTMAX, PADDING_VALID

import modelzoo


class TestVocabulary:
    def test_unknown_word_maps_to_zero(self):
        vocab = Vocabulary(tokens=("<unk>", "good"), max_sequence_length=4)
        assert vocab.id_for("good") == 1
        assert vocab.id_for("nope") == 0

    def test_first_token_must_be_unknown(self):
        with pytest.raises(BundleFormatError, match="id 0"):
            Vocabulary(tokens=("good", "<unk>"), max_sequence_length=4)

    def test_duplicate_tokens_rejected(self):
        with pytest.raises(BundleFormatError, match="duplicate"):
            Vocabulary(tokens=("<unk>", "good", "good"), max_sequence_length=4)


class TestTokenize:
    def test_lowercases_and_splits_on_non_alphanumerics(self):
        assert extract_words("Good, GREAT!! film-2024's") == [
            "good", "great", "film", "2024", "s",
        ]

    def test_empty_text_is_all_padding(self):
        vocab = Vocabulary(tokens=("<unk>", "a"), max_sequence_length=5)
        seq = tokenize("", vocab)
        assert seq.words == ()
        assert seq.ids.tolist() == [0, 0, 0, 0, 0]

    def test_exact_length_text_has_no_padding(self):
        vocab = Vocabulary(tokens=("<unk>", "a", "b"), max_sequence_length=3)
        seq = tokenize("a b a", vocab)
        assert seq.ids.tolist() == [1, 2, 1]
        assert seq.num_words == 3

    def test_truncates_beyond_max_length(self):
        vocab = Vocabulary(tokens=("<unk>", "a"), max_sequence_length=2)
        seq = tokenize("a a a a", vocab)
        assert seq.ids.tolist() == [1, 1]
        assert seq.num_words == 2

    def test_oov_words_stay_visible(self):
        vocab = Vocabulary(tokens=("<unk>", "a"), max_sequence_length=4)
        seq = tokenize("a zebra", vocab)
        assert seq.ids.tolist() == [1, 0, 0, 0]
        assert seq.words == ("a", "zebra")


class TestTokenSequence:
    def test_from_ids_treats_trailing_zeros_as_padding(self):
        vocab = Vocabulary(tokens=("<unk>", "a", "b"), max_sequence_length=5)
        seq = TokenSequence.from_ids([1, 0, 2, 0, 0], vocab)
        assert seq.words == ("a", "<unk>", "b")
        assert seq.num_words == 3

    def test_from_ids_rejects_out_of_range(self):
        vocab = Vocabulary(tokens=("<unk>", "a"), max_sequence_length=3)
        with pytest.raises(ValueError, match="out of range"):
            TokenSequence.from_ids([1, 9, 0], vocab)

    def test_negative_ids_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            TokenSequence(ids=np.array([1, -1]), words=("a",))


def _tamper(path, mutate):
    blob = bytearray(path.read_bytes())
    mutate(blob)
    path.write_bytes(bytes(blob))


class TestBundleFormat:
    def test_round_trip_preserves_everything(self, tiny_model, tmp_path):
        path = tmp_path / "m.sidu"
        save_bundle(tiny_model, path)
        loaded = load_bundle(path)
        assert loaded.vocabulary.tokens == tiny_model.vocabulary.tokens
        assert loaded.output_kind == tiny_model.output_kind
        assert loaded.padding == tiny_model.padding
        for name in ("embedding", "conv_filters", "conv_bias", "dense1_weights",
                     "dense1_bias", "output_weights", "output_bias"):
            np.testing.assert_array_equal(getattr(loaded, name), getattr(tiny_model, name))

    def test_save_is_byte_deterministic(self, tiny_model, tmp_path):
        a, b = tmp_path / "a.sidu", tmp_path / "b.sidu"
        save_bundle(tiny_model, a)
        save_bundle(tiny_model, b)
        assert a.read_bytes() == b.read_bytes()

    def test_empty_file_is_malformed_header(self, tmp_path):
        path = tmp_path / "zero.sidu"
        path.write_bytes(b"")
        with pytest.raises(BundleFormatError, match="malformed header"):
            load_bundle(path)

    def test_bad_magic_rejected(self, tiny_model, tmp_path):
        path = tmp_path / "m.sidu"
        save_bundle(tiny_model, path)
        _tamper(path, lambda blob: blob.__setitem__(slice(0, 8), b"NOTMAGIC"))
        with pytest.raises(BundleFormatError, match="bad magic"):
            load_bundle(path)

    def test_metadata_length_beyond_file_rejected(self, tiny_model, tmp_path):
        path = tmp_path / "m.sidu"
        save_bundle(tiny_model, path)
        _tamper(path, lambda blob: blob.__setitem__(
            slice(8, 12), struct.pack("<I", len(blob) * 2)))
        with pytest.raises(BundleFormatError, match="metadata length"):
            load_bundle(path)

    def test_unparseable_metadata_rejected(self, tiny_model, tmp_path):
        path = tmp_path / "m.sidu"
        save_bundle(tiny_model, path)
        _tamper(path, lambda blob: blob.__setitem__(12, ord("}")))
        with pytest.raises(BundleFormatError, match="malformed metadata"):
            load_bundle(path)

    def test_truncated_tensor_data_rejected(self, tiny_model, tmp_path):
        path = tmp_path / "m.sidu"
        save_bundle(tiny_model, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(BundleFormatError, match="truncated tensor blob"):
            load_bundle(path)

    def test_shape_mismatch_names_the_tensor(self, tiny_model, tmp_path):
        path = tmp_path / "m.sidu"
        save_bundle(tiny_model, path)
        meta = read_metadata(path)
        meta["architecture"]["num_filters"] += 1
        blob = path.read_bytes()
        (meta_len,) = struct.unpack_from("<I", blob, 8)
        new_meta = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
        path.write_bytes(MAGIC + struct.pack("<I", len(new_meta)) + new_meta
                         + blob[12 + meta_len:])
        with pytest.raises(BundleFormatError, match="conv_filters|conv_bias"):
            load_bundle(path)

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_bundle(tmp_path / "nope.sidu")

    def test_conv_bias_length_checked_at_construction(self, tiny_model):
        with pytest.raises(BundleFormatError, match="conv_bias"):
            ModelBundle(
                vocabulary=tiny_model.vocabulary,
                embedding=tiny_model.embedding,
                conv_filters=tiny_model.conv_filters,
                conv_bias=np.zeros(tiny_model.num_filters + 1),
                dense1_weights=tiny_model.dense1_weights,
                dense1_bias=tiny_model.dense1_bias,
                output_weights=tiny_model.output_weights,
                output_bias=tiny_model.output_bias,
                output_kind=tiny_model.output_kind,
                padding=tiny_model.padding,
            )


def _reference_forward(model, ids):
    """Straight-line float64 forward pass written independently."""
    emb = model.embedding.astype(np.float64)
    conv = model.conv_filters.astype(np.float64)
    length = len(ids)
    kernel = model.kernel_size
    x = np.stack([emb[i] for i in ids])
    if model.padding == "same":
        left = (kernel - 1) // 2
        x = np.concatenate([
            np.zeros((left, x.shape[1])), x,
            np.zeros((kernel - 1 - left, x.shape[1])),
        ])
        n_out = length
    else:
        n_out = length - kernel + 1
    fm = np.zeros((n_out, model.num_filters))
    for j in range(n_out):
        window = x[j : j + kernel]
        for i in range(model.num_filters):
            fm[j, i] = max(0.0, float((window * conv[i]).sum())
                           + float(model.conv_bias[i]))
    pooled = fm.mean(axis=0)
    hidden = np.maximum(
        pooled @ model.dense1_weights.astype(np.float64)
        + model.dense1_bias.astype(np.float64), 0.0)
    logits = hidden @ model.output_weights.astype(np.float64) \
        + model.output_bias.astype(np.float64)
    if model.output_kind == "sigmoid-scalar":
        p = 1.0 / (1.0 + np.exp(-logits[0]))
        return np.array([1.0 - p, p]), fm
    e = np.exp(logits - logits.max())
    return e / e.sum(), fm


class TestForward:
    @pytest.mark.parametrize("seed", range(12))
    def test_matches_straight_line_reference(self, seed):
        model = modelzoo.random_tiny_bundle(seed)
        seq = modelzoo.random_sequence(model, seed + 100)
        probs, fm = forward(model, seq)
        ref_probs, ref_fm = _reference_forward(model, seq.ids.tolist())
        np.testing.assert_allclose(probs.probs, ref_probs, atol=1e-9)
        np.testing.assert_allclose(fm, ref_fm, atol=1e-9)

    @pytest.mark.parametrize("seed", range(6))
    def test_probabilities_sum_to_one(self, seed):
        model = modelzoo.random_tiny_bundle(seed)
        seq = modelzoo.random_sequence(model, seed)
        probs, _ = forward(model, seq)
        assert abs(float(probs.probs.sum()) - 1.0) < 1e-6
        assert np.all(probs.probs >= 0)

    def test_feature_map_shapes(self):
        same = modelzoo.random_tiny_bundle(3, padding="same")
        _, fm = forward(same, modelzoo.random_sequence(same, 1))
        assert fm.shape == (same.vocabulary.max_sequence_length, same.num_filters)
        valid = modelzoo.random_tiny_bundle(5, padding=PADDING_VALID)
        _, fm = forward(valid, modelzoo.random_sequence(valid, 1))
        expect = valid.vocabulary.max_sequence_length - valid.kernel_size + 1
        assert fm.shape == (expect, valid.num_filters)

    def test_feature_maps_non_negative(self, tiny_model):
        _, fm = forward(tiny_model, modelzoo.random_sequence(tiny_model, 9))
        assert np.all(fm >= 0)

    def test_repeated_calls_bitwise_identical(self, tiny_model):
        seq = modelzoo.random_sequence(tiny_model, 2)
        p1, f1 = forward(tiny_model, seq)
        p2, f2 = forward(tiny_model, seq)
        assert np.array_equal(p1.probs, p2.probs)
        assert np.array_equal(f1, f2)

    @pytest.mark.parametrize("seed", range(4))
    def test_batch_rows_bitwise_equal_single_calls(self, seed):
        model = modelzoo.random_tiny_bundle(seed)
        rows = np.stack([
            modelzoo.random_sequence(model, 50 + i).ids for i in range(200)
        ])
        batch_probs, batch_fm = forward_many(model, rows)
        for i in (0, 1, 77, 127, 128, 199):
            single_probs, single_fm = forward_many(model, rows[i])
            assert np.array_equal(batch_probs[i], single_probs[0])
            assert np.array_equal(batch_fm[i], single_fm[0])

    def test_pooling_covers_padding_positions(self):
        # One word in a length-4 input: the pooled activation must be
        # diluted by the three padding positions, i.e. 1/4 and not 1.
        vocab = Vocabulary(tokens=("<unk>", "a"), max_sequence_length=4)
        model = ModelBundle(
            vocabulary=vocab,
            embedding=np.array([[0.0], [1.0]]),
            conv_filters=np.array([[[1.0]]]),
            conv_bias=np.zeros(1),
            dense1_weights=np.array([[1.0]]),
            dense1_bias=np.zeros(1),
            output_weights=np.array([[1.0]]),
            output_bias=np.zeros(1),
            output_kind="sigmoid-scalar",
        )
        probs, fm = forward(model, tokenize("a", vocab))
        assert fm[:, 0].tolist() == [1.0, 0.0, 0.0, 0.0]
        expected = 1.0 / (1.0 + np.exp(-0.25))
        assert abs(float(probs.probs[1]) - expected) < 1e-12

    def test_rejects_wrong_length_rows(self, tiny_model):
        with pytest.raises(ValueError, match="max_sequence_length"):
            forward_many(tiny_model, np.zeros(3, dtype=np.int64))

    def test_rejects_out_of_range_ids(self, tiny_model):
        ids = np.zeros(tiny_model.vocabulary.max_sequence_length, dtype=np.int64)
        ids[0] = tiny_model.vocabulary.size
        with pytest.raises(ValueError, match="token ids"):
            forward_many(tiny_model, ids)

    def test_softmax_head_supported(self):
        model = modelzoo.random_tiny_bundle(11, output_kind=OUTPUT_SOFTMAX)
        probs, _ = forward(model, modelzoo.random_sequence(model, 4))
        assert abs(float(probs.probs.sum()) - 1.0) < 1e-6
