"""Skip-gram word2vec with negative sampling, trained by plain SGD.

Produces one dense vector per vocabulary word. Training follows the
classic recipe: dynamic window shrinking, a smoothed-unigram negative
sampling table, and a linearly decaying learning rate. Single-threaded
and bit-reproducible for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._math import log_sigmoid, sigmoid
from .corpus import Corpus

NEGATIVE_TABLE_SIZE = 10_000_000
UNIGRAM_POWER = 0.75
LR_FLOOR_FACTOR = 1e-4


@dataclass
class Vocabulary:
    """Dense word ids ordered by descending corpus frequency (ties by word)."""

    words: list[str]
    counts: np.ndarray
    word_to_id: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.word_to_id = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_id


@dataclass
class SkipgramHyperparams:
    dim: int = 300
    window: int = 5
    negatives: int = 10
    epochs: int = 5
    initial_lr: float = 0.025
    min_count: int = 5
    seed: int = 1

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "min_count"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        # epochs == 0 is allowed and returns the untouched initialization
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if self.initial_lr <= 0:
            raise ValueError(f"initial_lr must be positive, got {self.initial_lr}")


@dataclass
class EmbeddingMatrix:
    """Input vectors are the embeddings; output vectors only exist for training."""

    dim: int
    input_vectors: np.ndarray
    output_vectors: np.ndarray


def build_vocabulary(corpus: Corpus, min_count: int = 5) -> Vocabulary:
    """Count tokens and keep words occurring at least ``min_count`` times."""
    counts: dict[str, int] = {}
    for doc in corpus.documents:
        for tok in doc.tokens:
            counts[tok] = counts.get(tok, 0) + 1
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    if not kept:
        raise ValueError(f"vocabulary empty after min_count={min_count} filtering")
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    return Vocabulary(words=[w for w, _ in kept], counts=np.array([c for _, c in kept]))


class UnigramTable:
    """Precomputed sampling table over the unigram distribution ^ 0.75.

    The table is filled so that word ``w`` owns a share of slots proportional
    to ``count(w) ** 0.75``, making each negative draw an O(1) lookup.
    """

    def __init__(self, counts: np.ndarray, size: int = NEGATIVE_TABLE_SIZE):
        counts = np.asarray(counts, dtype=np.float64)
        if counts.size == 0:
            raise ValueError("cannot build a sampling table over an empty vocabulary")
        weights = counts**UNIGRAM_POWER
        probs = weights / weights.sum()
        slots = np.floor(probs * size).astype(np.int64)
        # distribute rounding leftovers to the largest remainders
        leftovers = size - int(slots.sum())
        if leftovers > 0:
            order = np.argsort(-(probs * size - slots), kind="stable")
            slots[order[:leftovers]] += 1
        self.table = np.repeat(
            np.arange(len(counts), dtype=np.int64), slots
        )
        self.probs = probs

    @classmethod
    def from_vocabulary(cls, vocab: Vocabulary, size: int = NEGATIVE_TABLE_SIZE):
        return cls(vocab.counts, size=size)

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        """Draw k word ids i.i.d. from the smoothed unigram distribution."""
        return self.table[rng.integers(0, len(self.table), size=k)]


def negative_sample(vocab: Vocabulary, rng: np.random.Generator, k: int,
                    table_size: int = NEGATIVE_TABLE_SIZE) -> np.ndarray:
    """Convenience one-shot sampler; builds the table each call, so prefer
    :class:`UnigramTable` in loops."""
    return UnigramTable.from_vocabulary(vocab, size=table_size).sample(rng, k)


def pair_loss(center_vec: np.ndarray, output_vecs: np.ndarray,
              labels: np.ndarray) -> float:
    """Negative-sampling loss for one center word against (k+1) output rows.

    Row j with label 1 contributes -log sigmoid(u_j . v), label 0 contributes
    -log sigmoid(-u_j . v).
    """
    scores = output_vecs @ center_vec
    signs = np.where(np.asarray(labels, dtype=np.float64) > 0, 1.0, -1.0)
    return float(-np.sum(log_sigmoid(signs * scores)))


def pair_gradients(center_vec: np.ndarray, output_vecs: np.ndarray,
                   labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`pair_loss` w.r.t. the center vector and
    every output row."""
    scores = output_vecs @ center_vec
    residual = sigmoid(scores) - np.asarray(labels, dtype=np.float64)
    grad_center = residual @ output_vecs
    grad_outputs = np.outer(residual, center_vec)
    return grad_center, grad_outputs


def init_embeddings(vocab_size: int, dim: int,
                    rng: np.random.Generator) -> EmbeddingMatrix:
    """Uniform [-0.5/D, 0.5/D) input vectors, zero output vectors."""
    bound = 0.5 / dim
    inputs = rng.uniform(-bound, bound, size=(vocab_size, dim))
    return EmbeddingMatrix(
        dim=dim,
        input_vectors=inputs,
        output_vectors=np.zeros((vocab_size, dim)),
    )


def train_skipgram(corpus: Corpus, vocab: Vocabulary,
                   hp: SkipgramHyperparams) -> EmbeddingMatrix:
    """Train skip-gram embeddings over the tokenized corpus.

    For each (center, context) pair inside a per-center shrunk window, one
    SGD step is taken on the negative-sampling objective with the context
    row labelled 1 and ``hp.negatives`` sampled rows labelled 0. The
    learning rate decays linearly from ``initial_lr`` down to
    ``initial_lr * 1e-4`` over all training pairs.
    """
    if not corpus.documents:
        raise ValueError("cannot train on an empty corpus")
    rng = np.random.default_rng(hp.seed)
    emb = init_embeddings(len(vocab), hp.dim, rng)
    if hp.epochs == 0:
        return emb

    docs = [
        np.array([vocab.word_to_id[t] for t in doc.tokens if t in vocab.word_to_id],
                 dtype=np.int64)
        for doc in corpus.documents
    ]
    docs = [d for d in docs if len(d) >= 2]
    if not docs:
        raise ValueError("no document has two or more in-vocabulary tokens")

    # Window shrinks are pre-drawn so the total pair count, and with it the
    # learning-rate schedule, is known before the first update.
    positions = sum(len(d) for d in docs)
    shrinks = rng.integers(1, hp.window + 1, size=(hp.epochs, positions))
    total_pairs = 0
    for epoch in range(hp.epochs):
        offset = 0
        for d in docs:
            n = len(d)
            b = shrinks[epoch, offset:offset + n]
            left = np.minimum(np.arange(n), b)
            right = np.minimum(n - 1 - np.arange(n), b)
            total_pairs += int(np.sum(left + right))
            offset += n
    table = UnigramTable.from_vocabulary(vocab)

    syn0, syn1 = emb.input_vectors, emb.output_vectors
    labels = np.zeros(hp.negatives + 1)
    labels[0] = 1.0
    rows = np.empty(hp.negatives + 1, dtype=np.int64)
    pair_idx = 0
    for epoch in range(hp.epochs):
        offset = 0
        for d in docs:
            n = len(d)
            for i in range(n):
                b = int(shrinks[epoch, offset + i])
                lo, hi = max(0, i - b), min(n, i + b + 1)
                center = int(d[i])
                for j in range(lo, hi):
                    if j == i:
                        continue
                    lr = hp.initial_lr * max(
                        1.0 - pair_idx / total_pairs, LR_FLOOR_FACTOR
                    )
                    rows[0] = d[j]
                    rows[1:] = table.sample(rng, hp.negatives)
                    grad_c, grad_o = pair_gradients(syn0[center], syn1[rows], labels)
                    syn0[center] -= lr * grad_c
                    np.add.at(syn1, rows, -lr * grad_o)
                    pair_idx += 1
            offset += n

    if not (np.isfinite(syn0).all() and np.isfinite(syn1).all()):
        raise FloatingPointError("training diverged: non-finite embedding entries")
    return emb


def nearest_words(emb: EmbeddingMatrix, vocab: Vocabulary, word: str,
                  n: int = 10) -> list[tuple[str, float]]:
    """The n words most cosine-similar to ``word``, excluding the word itself."""
    if word not in vocab:
        raise KeyError(f"unknown word: {word!r}")
    wid = vocab.word_to_id[word]
    mat = emb.input_vectors
    norms = np.linalg.norm(mat, axis=1)
    query = mat[wid]
    sims = (mat @ query) / (norms * np.linalg.norm(query))
    order = sorted(
        (i for i in range(len(vocab)) if i != wid),
        key=lambda i: (-sims[i], vocab.words[i]),
    )
    return [(vocab.words[i], float(sims[i])) for i in order[:n]]


def save_embeddings(vocab: Vocabulary, emb: EmbeddingMatrix,
                    path: str | Path) -> None:
    """Text format: first line ``V D``, then ``word v_1 ... v_D`` per word
    with 6-decimal fixed-point values. Only input vectors are persisted."""
    mat = emb.input_vectors
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(vocab)} {emb.dim}\n")
        for word, row in zip(vocab.words, mat):
            fh.write(word + " " + " ".join(f"{v:.6f}" for v in row) + "\n")


def load_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a file written by :func:`save_embeddings`; returns (words, V x D)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty embedding file")
    v, d = (int(x) for x in lines[0].split())
    words, mat = [], np.empty((v, d))
    for i, line in enumerate(lines[1 : v + 1]):
        parts = line.split()
        if len(parts) != d + 1:
            raise ValueError(f"{path}: line {i + 2} has {len(parts) - 1} values, expected {d}")
        words.append(parts[0])
        mat[i] = [float(x) for x in parts[1:]]
    if len(words) != v:
        raise ValueError(f"{path}: expected {v} rows, found {len(words)}")
    return words, mat
