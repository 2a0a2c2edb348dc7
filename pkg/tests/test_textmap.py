import numpy as np
import pytest

from calligart import textmap
from calligart.corpus import Vocabulary
from calligart.textmap import (CharacterScore, EmbeddingError,
                               HashEmbeddingProvider, TextEmbedding,
                               embed_vocabulary, similarity,
                               text_to_condition, top_k_characters)


def vocab_of(chars: str) -> Vocabulary:
    return Vocabulary(entries=tuple((ch, i, 30) for i, ch in enumerate(chars)))


def emb(v, provider="p") -> TextEmbedding:
    return TextEmbedding(vector=np.asarray(v, dtype=float), provider_id=provider)


class TestSimilarity:
    def test_self_similarity(self):
        v = emb([1.0, 2.0, -3.0])
        assert similarity(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert similarity(emb([1, 0]), emb([0, 1])) == pytest.approx(0.0)

    def test_analytic_45_degrees(self):
        w = emb(np.array([1.0, 1.0]) / np.sqrt(2))
        assert similarity(emb([1.0, 0.0]), w) == pytest.approx(np.sqrt(2) / 2)

    def test_zero_norm_rejected(self):
        with pytest.raises(EmbeddingError):
            similarity(emb([0.0, 0.0]), emb([1.0, 0.0]))

    def test_symmetric_and_scale_invariant(self):
        rng = np.random.RandomState(0)
        for _ in range(20):
            a, b = rng.standard_normal(5), rng.standard_normal(5)
            s = similarity(emb(a), emb(b))
            assert similarity(emb(b), emb(a)) == pytest.approx(s)
            assert similarity(emb(3.7 * a), emb(b)) == pytest.approx(s)
            assert similarity(emb(a), emb(0.01 * b)) == pytest.approx(s)

    def test_provider_mismatch(self):
        with pytest.raises(EmbeddingError):
            similarity(emb([1.0], "x"), emb([1.0], "y"))


class TestHashProvider:
    def test_deterministic(self):
        p = HashEmbeddingProvider(32)
        assert np.array_equal(p.embed("麻婆豆腐").vector, p.embed("麻婆豆腐").vector)

    def test_distinct_texts_distinct_vectors(self):
        p = HashEmbeddingProvider(32)
        assert not np.array_equal(p.embed("a").vector, p.embed("b").vector)

    def test_unit_norm(self):
        assert np.linalg.norm(
            HashEmbeddingProvider(16).embed("x").vector) == pytest.approx(1.0)


class CountingProvider(HashEmbeddingProvider):
    def __init__(self, dimension=16):
        super().__init__(dimension)
        self.calls = 0

    def embed(self, text):
        self.calls += 1
        return super().embed(text)


class TestEmbedVocabulary:
    def test_matrix_shape(self):
        p = HashEmbeddingProvider(16)
        vocab = vocab_of("甲乙丙丁")
        assert embed_vocabulary(p, vocab).shape == (4, 16)

    def test_singleton(self):
        p = HashEmbeddingProvider(16)
        matrix = embed_vocabulary(p, vocab_of("甲"))
        assert np.array_equal(matrix[0], p.embed("甲").vector)

    def test_warm_cache_skips_provider(self, tmp_path):
        vocab = vocab_of("甲乙丙")
        p = CountingProvider()
        first = embed_vocabulary(p, vocab, cache_dir=tmp_path)
        assert p.calls == 3
        second = embed_vocabulary(p, vocab, cache_dir=tmp_path)
        assert p.calls == 3
        assert np.array_equal(first, second)

    def test_provider_failure_names_character(self):
        class FailingProvider(HashEmbeddingProvider):
            def embed(self, text):
                if text == "乙":
                    raise RuntimeError("boom")
                return super().embed(text)

        with pytest.raises(EmbeddingError, match="乙"):
            embed_vocabulary(FailingProvider(), vocab_of("甲乙"))


def brute_force_ranking(text, provider, vocab):
    query = provider.embed(text)
    scores = []
    for ch, idx, _ in vocab.entries:
        s = similarity(query, provider.embed(ch))
        scores.append((ch, idx, s))
    scores.sort(key=lambda t: (-t[2], t[0]))
    return scores


class TestTopK:
    def test_self_match_ranks_first(self):
        p = HashEmbeddingProvider()
        vocab = vocab_of("甲乙丙丁戊")
        top = top_k_characters("丙", p, vocab, 3)
        assert top[0].character == "丙"
        assert top[0].similarity == pytest.approx(1.0)

    def test_k_results(self):
        vocab = vocab_of("甲乙丙丁戊己庚辛")
        assert len(top_k_characters("鱼香肉丝", HashEmbeddingProvider(), vocab, 5)) == 5

    def test_matches_brute_force_oracle(self):
        p = HashEmbeddingProvider(8)
        vocab = vocab_of("甲乙丙丁戊己庚辛")
        rng = np.random.RandomState(0)
        for _ in range(25):
            text = "".join(chr(rng.randint(0x4E00, 0x4E80)) for _ in range(3))
            expected = brute_force_ranking(text, p, vocab)
            got = top_k_characters(text, p, vocab, 8)
            assert [(s.character, s.class_index) for s in got] == \
                [(ch, idx) for ch, idx, _ in expected]

    def test_permutation_stable(self):
        p = HashEmbeddingProvider(8)
        chars = "甲乙丙丁戊己"
        vocab_a = vocab_of(chars)
        vocab_b = Vocabulary(entries=tuple(
            (ch, i, 30) for i, ch in enumerate(reversed(chars))))
        top_a = top_k_characters("宫保鸡丁", p, vocab_a, 4)
        top_b = top_k_characters("宫保鸡丁", p, vocab_b, 4)
        assert [s.character for s in top_a] == [s.character for s in top_b]
        assert [s.similarity for s in top_a] == \
            pytest.approx([s.similarity for s in top_b])

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            top_k_characters("", HashEmbeddingProvider(), vocab_of("甲"), 1)

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            top_k_characters("x", HashEmbeddingProvider(), vocab_of("甲"), 2)


class TestTextToCondition:
    def test_default_equal_weights(self):
        vocab = vocab_of("甲乙丙丁戊己")
        cond = text_to_condition("红烧肉", HashEmbeddingProvider(), vocab, 5)
        nonzero = cond.weights[cond.weights > 0]
        assert len(nonzero) == 5
        assert np.allclose(nonzero, 0.2)

    def test_k1_one_hot(self):
        vocab = vocab_of("甲乙丙")
        cond = text_to_condition("甲", HashEmbeddingProvider(), vocab, 1)
        assert cond.weights[vocab.class_index("甲")] == pytest.approx(1.0)
        assert cond.weights.sum() == pytest.approx(1.0)

    def test_rank_weights_normalized(self):
        vocab = vocab_of("甲乙丙丁")
        cond = text_to_condition("丁", HashEmbeddingProvider(), vocab, 2,
                                 weights=[3.0, 1.0])
        top = top_k_characters("丁", HashEmbeddingProvider(), vocab, 2)
        assert cond.weights[top[0].class_index] == pytest.approx(0.75)
        assert cond.weights[top[1].class_index] == pytest.approx(0.25)

    def test_output_is_valid_condition(self):
        vocab = vocab_of("甲乙丙丁戊")
        for text in ["a", "bb", "宫保鸡丁"]:
            cond = text_to_condition(text, HashEmbeddingProvider(), vocab, 3)
            assert abs(cond.weights.sum() - 1.0) <= 1e-6
            assert (cond.weights >= 0).all()

    def test_wrong_weight_length(self):
        with pytest.raises(ValueError):
            text_to_condition("x", HashEmbeddingProvider(), vocab_of("甲乙"), 2,
                              weights=[1.0])

    def test_character_score_fields(self):
        s = top_k_characters("甲", HashEmbeddingProvider(), vocab_of("甲乙"), 1)[0]
        assert isinstance(s, CharacterScore)
        assert -1.0 <= s.similarity <= 1.0
