import numpy as np
import pytest

from eudparse.autodiff import Tensor
from eudparse.encoder import Encoder, SubwordAlignment, filter_first, fnv1a64, subword_tokenize


class TestSubwordTokenize:
    def test_single_char_token_is_single_piece(self):
        alignment = subword_tokenize(["a"], vocab_size=64)
        assert len(alignment.pieces) == 1
        assert alignment.token_first == (0,)

    def test_piece_counts_follow_trigrams(self):
        # whole-token hash plus one piece per character trigram
        alignment = subword_tokenize(["abcd", "x"], vocab_size=64)
        assert alignment.token_first == (0, 3)
        assert len(alignment.pieces) == 4

    def test_token_first_strictly_increasing(self):
        tokens = ["the", "quick", "brown", "fox", "jumps", "over", "a", "lazy", "dog", "now"]
        alignment = subword_tokenize(tokens, vocab_size=512)
        assert len(alignment.token_first) == 10
        assert all(a < b for a, b in zip(alignment.token_first, alignment.token_first[1:]))

    def test_hashing_is_deterministic_and_total(self):
        a = subword_tokenize(["straße", "ῥήτωρ", "!!!"], vocab_size=128)
        b = subword_tokenize(["straße", "ῥήτωρ", "!!!"], vocab_size=128)
        assert a == b
        assert all(0 <= p < 128 for p in a.pieces)

    def test_empty_token_rejected(self):
        with pytest.raises(ValueError):
            subword_tokenize(["ok", ""], vocab_size=64)

    def test_fnv_reference_value(self):
        # FNV-1a 64-bit test vector
        assert fnv1a64("") == 0xCBF29CE484222325
        assert fnv1a64("a") == 0xAF63DC4C8601EC8C


class TestFilterFirst:
    def test_selects_first_rows(self):
        E = Tensor(np.arange(9, dtype=float).reshape(3, 3))
        alignment = SubwordAlignment(pieces=(1, 2, 3), token_first=(0, 2))
        out = filter_first(E, alignment)
        assert np.array_equal(out.data, E.data[[0, 2]])

    def test_identity_when_one_piece_per_token(self):
        E = Tensor(np.random.default_rng(0).normal(size=(4, 2)))
        alignment = SubwordAlignment(pieces=(5, 6, 7, 8), token_first=(0, 1, 2, 3))
        assert np.array_equal(filter_first(E, alignment).data, E.data)

    def test_rows_are_bitwise_copies(self):
        rng = np.random.default_rng(1)
        E = Tensor(rng.normal(size=(10, 4)))
        firsts = (0, 3, 4, 7)
        alignment = SubwordAlignment(pieces=tuple(range(10)), token_first=firsts)
        out = filter_first(E, alignment).data
        for row, src in enumerate(firsts):
            assert out[row].tobytes() == E.data[src].tobytes()

    def test_alignment_out_of_range(self):
        E = Tensor(np.zeros((2, 2)))
        alignment = SubwordAlignment(pieces=(1, 2, 3), token_first=(0, 2))
        with pytest.raises(ValueError):
            filter_first(E, alignment)


def make_encoder(layers=2, dim=8, vocab=64, seed=0):
    return Encoder(dim=dim, vocab_size=vocab, layers=layers, window=2, ngram=3,
                   rng=np.random.default_rng(seed))


class TestEncode:
    def test_root_row_prepended(self):
        enc = make_encoder()
        alignment = enc.tokenize(["one"])
        R = enc.encode(alignment)
        assert R.shape == (2, 8)
        assert np.array_equal(R.data[0], enc.root.data[0])

    def test_zero_layers_returns_embeddings(self):
        enc = make_encoder(layers=0)
        alignment = enc.tokenize(["abc", "de"])
        R = enc.encode(alignment)
        for j, first in enumerate(alignment.token_first, start=1):
            assert np.array_equal(R.data[j], enc.embeddings.data[alignment.pieces[first]])

    def test_deterministic_without_dropout(self):
        enc = make_encoder()
        alignment = enc.tokenize(["the", "cat", "sat"])
        a = enc.encode(alignment).data
        b = enc.encode(alignment).data
        assert np.array_equal(a, b)

    def test_shape_is_tokens_plus_one(self):
        enc = make_encoder()
        for tokens in (["a"], ["a", "bb", "ccc"], list("abcdefg")):
            R = enc.encode(enc.tokenize(tokens))
            assert R.shape == (len(tokens) + 1, 8)

    def test_dropout_changes_output_but_keeps_shape(self):
        enc = make_encoder()
        alignment = enc.tokenize(["the", "cat"])
        clean = enc.encode(alignment).data
        noisy = enc.encode(alignment, input_dropout=0.35, dropout=0.35,
                           rng=np.random.default_rng(5)).data
        assert noisy.shape == clean.shape
        assert not np.array_equal(noisy, clean)

    def test_out_of_vocab_piece_rejected(self):
        enc = make_encoder(vocab=16)
        alignment = SubwordAlignment(pieces=(99,), token_first=(0,))
        with pytest.raises(ValueError):
            enc.encode(alignment)

    def test_context_window_mixes_neighbours(self):
        enc = make_encoder(layers=1)
        a = enc.encode(enc.tokenize(["a", "bbbb"])).data
        b = enc.encode(enc.tokenize(["a", "cccc"])).data
        # the second token is inside the first token's mixing window
        assert not np.array_equal(a[1], b[1])
