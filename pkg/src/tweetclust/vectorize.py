"""TF-IDF statistics and tweet vectors over word clusters.

A tweet's vector has one entry per word cluster: the summed term
frequencies of the tweet's words that fall in that cluster, times the
summed IDF of every word in the cluster, L1-normalized over the whole
vector. Tweets with no in-vocabulary token get the all-zero vector and
are meant to be excluded downstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, Document
from .embed import Vocabulary

logger = logging.getLogger(__name__)


@dataclass
class TfidfStats:
    idf: np.ndarray            # per-vocabulary-word, natural log
    document_count: int
    doc_frequency: np.ndarray  # per-vocabulary-word


@dataclass
class WordClusterMap:
    """Total map from vocabulary word id to word-cluster id."""

    cluster_of: np.ndarray
    cluster_count: int

    def __post_init__(self):
        self.cluster_of = np.asarray(self.cluster_of, dtype=np.int64)
        if self.cluster_count <= 0:
            raise ValueError("cluster_count must be positive")
        if self.cluster_of.size and (
            self.cluster_of.min() < 0 or self.cluster_of.max() >= self.cluster_count
        ):
            raise ValueError("cluster id out of range")


@dataclass
class TweetVector:
    id: str
    weights: np.ndarray


def term_frequency(word: str, doc: Document) -> float:
    """Occurrences of ``word`` in the document over its total token count."""
    if not doc.tokens:
        raise ValueError(f"document {doc.id!r} is empty")
    return doc.tokens.count(word) / len(doc.tokens)


def compute_idf(corpus: Corpus, vocab: Vocabulary) -> TfidfStats:
    """idf(w) = ln(N / df(w)) with df counted over whole documents."""
    if not corpus.documents:
        raise ValueError("cannot compute IDF over an empty corpus")
    df = np.zeros(len(vocab), dtype=np.int64)
    for doc in corpus.documents:
        for word in set(doc.tokens):
            wid = vocab.word_to_id.get(word)
            if wid is not None:
                df[wid] += 1
    if np.any(df == 0):
        missing = [vocab.words[i] for i in np.flatnonzero(df == 0)[:5]]
        raise ValueError(f"vocabulary words absent from corpus: {missing}")
    n = len(corpus.documents)
    return TfidfStats(idf=np.log(n / df), document_count=n, doc_frequency=df)


def cluster_idf_sums(cmap: WordClusterMap, stats: TfidfStats) -> np.ndarray:
    """Summed IDF of every vocabulary word per cluster, present or not."""
    sums = np.zeros(cmap.cluster_count)
    np.add.at(sums, cmap.cluster_of, stats.idf)
    return sums


def tweet_vector(doc: Document, cmap: WordClusterMap, stats: TfidfStats,
                 vocab: Vocabulary,
                 idf_sums: np.ndarray | None = None) -> TweetVector:
    """The L1-normalized per-cluster weight vector of one tweet.

    raw(a) = (sum of TF over the tweet's words in cluster a)
             * (sum of IDF over all words of cluster a);
    weights = raw / sum(raw). A tweet with no in-vocabulary token yields
    the all-zero vector.
    """
    if idf_sums is None:
        idf_sums = cluster_idf_sums(cmap, stats)
    raw = np.zeros(cmap.cluster_count)
    if doc.tokens:
        for word in set(doc.tokens):
            wid = vocab.word_to_id.get(word)
            if wid is not None:
                raw[cmap.cluster_of[wid]] += term_frequency(word, doc)
        raw *= idf_sums
    total = raw.sum()
    weights = raw / total if total > 0.0 else raw
    return TweetVector(id=doc.id, weights=weights)


def tweet_vectors(corpus: Corpus, cmap: WordClusterMap, stats: TfidfStats,
                  vocab: Vocabulary) -> tuple[list[str], np.ndarray]:
    """Vectorize every document; returns (ids, n_docs x C matrix).

    Degenerate rows (no in-vocabulary token) come out all-zero; their ids
    are logged so downstream stages can drop them.
    """
    idf_sums = cluster_idf_sums(cmap, stats)
    ids, rows = [], []
    degenerate = []
    for doc in corpus.documents:
        vec = tweet_vector(doc, cmap, stats, vocab, idf_sums=idf_sums)
        ids.append(vec.id)
        rows.append(vec.weights)
        if vec.weights.sum() == 0.0:
            degenerate.append(vec.id)
    if degenerate:
        logger.info(
            "%d of %d tweets have no in-vocabulary token and were vectorized "
            "as zero: %s%s",
            len(degenerate), len(ids), ",".join(degenerate[:10]),
            "..." if len(degenerate) > 10 else "",
        )
    return ids, np.vstack(rows) if rows else np.zeros((0, cmap.cluster_count))


def save_tweet_vectors(ids: list[str], matrix: np.ndarray,
                       path: str | Path) -> None:
    """CSV rows ``id,w_0,...,w_{C-1}`` with 9-significant-digit reals."""
    c = matrix.shape[1]
    header = "id," + ",".join(f"w_{i}" for i in range(c))
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for pid, row in zip(ids, matrix):
            fh.write(pid + "," + ",".join(f"{v:.9g}" for v in row) + "\n")


def load_tweet_vectors(path: str | Path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("id,"):
        raise ValueError(f"{path}: expected an 'id,w_0,...' header")
    c = len(lines[0].split(",")) - 1
    ids, rows = [], []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != c + 1:
            raise ValueError(f"{path}: row with {len(parts) - 1} values, expected {c}")
        ids.append(parts[0])
        rows.append([float(x) for x in parts[1:]])
    return ids, np.array(rows) if rows else np.zeros((0, c))
