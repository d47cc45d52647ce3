import numpy as np
import pytest
from scipy import stats

from tweetclust.corpus import Corpus, Document
from tweetclust.embed import (
    SkipgramHyperparams,
    UnigramTable,
    Vocabulary,
    build_vocabulary,
    init_embeddings,
    load_embeddings,
    nearest_words,
    negative_sample,
    pair_gradients,
    pair_loss,
    save_embeddings,
    train_skipgram,
)
from conftest import make_two_block_corpus


def corpus_of(*token_lists):
    return Corpus(
        documents=[Document(id=str(i), tokens=list(t)) for i, t in enumerate(token_lists)]
    )


class TestVocabulary:
    def test_min_count_threshold(self):
        vocab = build_vocabulary(corpus_of(["a", "a", "b"]), min_count=2)
        assert vocab.words == ["a"]

    def test_single_word(self):
        vocab = build_vocabulary(corpus_of(["x"]), min_count=1)
        assert vocab.words == ["x"] and vocab.counts[0] == 1

    def test_tie_break_lexicographic(self):
        vocab = build_vocabulary(corpus_of(["b", "b", "a", "a"]), min_count=1)
        assert vocab.words == ["a", "b"]

    def test_descending_frequency(self):
        vocab = build_vocabulary(corpus_of(["z", "z", "z", "m", "m", "q"]), min_count=1)
        assert vocab.words == ["z", "m", "q"]
        assert vocab.word_to_id == {"z": 0, "m": 1, "q": 2}

    def test_empty_after_filtering(self):
        with pytest.raises(ValueError, match="empty"):
            build_vocabulary(corpus_of(["a"]), min_count=2)


class TestNegativeSampling:
    def test_single_word_degenerate(self):
        vocab = Vocabulary(words=["only"], counts=np.array([3]))
        rng = np.random.default_rng(0)
        draws = negative_sample(vocab, rng, 50, table_size=1000)
        assert np.all(draws == 0)

    def test_three_quarter_power_ratio(self):
        # counts 16 and 1 give probabilities 16^0.75 : 1 = 8 : 1
        vocab = Vocabulary(words=["big", "small"], counts=np.array([16, 1]))
        table = UnigramTable.from_vocabulary(vocab)
        rng = np.random.default_rng(7)
        draws = table.sample(rng, 1_000_000)
        observed = np.bincount(draws, minlength=2)
        expected = np.array([8 / 9, 1 / 9]) * len(draws)
        chi = stats.chisquare(observed, expected)
        assert chi.pvalue > 1e-3

    def test_equal_counts_symmetric(self):
        vocab = Vocabulary(words=["x", "y"], counts=np.array([5, 5]))
        table = UnigramTable.from_vocabulary(vocab)
        rng = np.random.default_rng(11)
        n = 1_000_000
        draws = table.sample(rng, n)
        sigma = np.sqrt(n * 0.25)
        assert abs(np.sum(draws == 0) - n / 2) < 3 * sigma

    def test_table_is_exactly_filled(self):
        vocab = Vocabulary(words=["a", "b", "c"], counts=np.array([7, 3, 2]))
        table = UnigramTable.from_vocabulary(vocab, size=10_001)
        assert len(table.table) == 10_001


class TestObjective:
    def test_sigma_symmetry(self):
        # loss of a positive pair at score s equals a negative pair at -s
        rng = np.random.default_rng(3)
        for _ in range(20):
            v = rng.normal(size=6)
            u = rng.normal(size=(1, 6))
            pos = pair_loss(v, u, np.array([1.0]))
            neg = pair_loss(v, -u, np.array([0.0]))
            assert pos == pytest.approx(neg, abs=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        h = 1e-6
        for _ in range(10):
            dim, k = 8, 4
            v = rng.normal(scale=0.5, size=dim)
            u = rng.normal(scale=0.5, size=(k + 1, dim))
            labels = np.zeros(k + 1)
            labels[0] = 1.0
            grad_v, grad_u = pair_gradients(v, u, labels)

            num_v = np.zeros_like(v)
            for i in range(dim):
                vp, vm = v.copy(), v.copy()
                vp[i] += h
                vm[i] -= h
                num_v[i] = (pair_loss(vp, u, labels) - pair_loss(vm, u, labels)) / (2 * h)
            num_u = np.zeros_like(u)
            for r in range(k + 1):
                for c in range(dim):
                    up, um = u.copy(), u.copy()
                    up[r, c] += h
                    um[r, c] -= h
                    num_u[r, c] = (
                        pair_loss(v, up, labels) - pair_loss(v, um, labels)
                    ) / (2 * h)
            assert np.linalg.norm(grad_v - num_v) < 1e-4 * max(1.0, np.linalg.norm(grad_v))
            assert np.linalg.norm(grad_u - num_u) < 1e-4 * max(1.0, np.linalg.norm(grad_u))


class TestTraining:
    def test_zero_epochs_returns_initialization(self):
        corpus, _ = make_two_block_corpus(docs_per_block=3)
        vocab = build_vocabulary(corpus, min_count=1)
        hp = SkipgramHyperparams(dim=12, epochs=0, min_count=1, seed=9)
        emb = train_skipgram(corpus, vocab, hp)
        expected = init_embeddings(len(vocab), 12, np.random.default_rng(9))
        np.testing.assert_array_equal(emb.input_vectors, expected.input_vectors)
        np.testing.assert_array_equal(emb.output_vectors, expected.output_vectors)

    def test_same_seed_bit_identical(self):
        corpus, _ = make_two_block_corpus(docs_per_block=4)
        vocab = build_vocabulary(corpus, min_count=1)
        hp = SkipgramHyperparams(
            dim=8, window=3, negatives=3, epochs=2, initial_lr=0.05,
            min_count=1, seed=21,
        )
        a = train_skipgram(corpus, vocab, hp)
        b = train_skipgram(corpus, vocab, hp)
        np.testing.assert_array_equal(a.input_vectors, b.input_vectors)
        np.testing.assert_array_equal(a.output_vectors, b.output_vectors)

    def test_two_block_similarity_ordering(self):
        # alpha/beta co-occur, gamma/delta co-occur; blocks never mix
        docs = []
        for i in range(10):
            docs.append(Document(id=f"x{i}", tokens=["alpha", "beta"] * 2))
            docs.append(Document(id=f"y{i}", tokens=["gamma", "delta"] * 2))
        corpus = Corpus(documents=docs)
        vocab = build_vocabulary(corpus, min_count=1)
        hp = SkipgramHyperparams(
            dim=8, window=3, negatives=5, epochs=500, initial_lr=0.05,
            min_count=1, seed=13,
        )
        emb = train_skipgram(corpus, vocab, hp)
        mat = emb.input_vectors

        def cos(w1, w2):
            x = mat[vocab.word_to_id[w1]]
            y = mat[vocab.word_to_id[w2]]
            return x @ y / (np.linalg.norm(x) * np.linalg.norm(y))

        assert cos("alpha", "beta") > cos("alpha", "gamma")
        assert nearest_words(emb, vocab, "alpha", 1)[0][0] == "beta"

    def test_no_nan_inf_after_training(self, two_block):
        corpus, _ = two_block
        vocab = build_vocabulary(corpus, min_count=1)
        hp = SkipgramHyperparams(
            dim=10, window=3, negatives=5, epochs=5, initial_lr=0.05,
            min_count=1, seed=2,
        )
        emb = train_skipgram(corpus, vocab, hp)
        assert np.isfinite(emb.input_vectors).all()
        assert np.isfinite(emb.output_vectors).all()

    def test_empty_corpus_rejected(self):
        vocab = Vocabulary(words=["x"], counts=np.array([1]))
        with pytest.raises(ValueError):
            train_skipgram(Corpus(documents=[]), vocab, SkipgramHyperparams(min_count=1))


@pytest.fixture(scope="module")
def trained():
    corpus, blocks = make_two_block_corpus(docs_per_block=10)
    vocab = build_vocabulary(corpus, min_count=1)
    hp = SkipgramHyperparams(
        dim=8, window=3, negatives=5, epochs=30, initial_lr=0.05,
        min_count=1, seed=4,
    )
    return train_skipgram(corpus, vocab, hp), vocab


class TestNearestWords:
    def test_query_excluded(self, trained):
        emb, vocab = trained
        names = [w for w, _ in nearest_words(emb, vocab, "a0", len(vocab))]
        assert "a0" not in names

    def test_similarities_non_increasing(self, trained):
        emb, vocab = trained
        sims = [s for _, s in nearest_words(emb, vocab, "a1", 5)]
        assert all(s1 >= s2 for s1, s2 in zip(sims, sims[1:]))

    def test_unknown_word(self, trained):
        emb, vocab = trained
        with pytest.raises(KeyError):
            nearest_words(emb, vocab, "zzz", 3)


class TestEmbeddingFile:
    def test_round_trip(self, tmp_path):
        vocab = Vocabulary(words=["oil", "gas"], counts=np.array([4, 2]))
        emb = init_embeddings(2, 3, np.random.default_rng(1))
        emb.input_vectors[:] = [[0.123456789, -1.5, 0.0], [2.25, 0.000001, -0.349999]]
        path = tmp_path / "emb.txt"
        save_embeddings(vocab, emb, path)
        first = path.read_text().splitlines()[0]
        assert first == "2 3"
        words, mat = load_embeddings(path)
        assert words == ["oil", "gas"]
        np.testing.assert_allclose(mat, emb.input_vectors, atol=5e-7)

    def test_rejects_truncated_file(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("2 3\noil 0.1 0.2 0.3\n")
        with pytest.raises(ValueError):
            load_embeddings(path)
