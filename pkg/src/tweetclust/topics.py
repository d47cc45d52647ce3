"""Per-cluster topic analysis: collapsed-Gibbs LDA plus frequent words.

The sampler keeps the usual count tables (document-topic, topic-word,
topic totals) and resamples every token each sweep from

    p(z = k)  ~  (n_dk + alpha) * (n_kw + beta) / (n_k + V * beta)

Counts live in plain Python lists because the per-token inner loop
dominates; distributions are materialized as numpy arrays at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import Document

DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 500


@dataclass
class LdaConfig:
    num_topics: int = 5
    alpha: Optional[float] = None  # None: 50 / num_topics
    beta: float = DEFAULT_BETA
    iterations: int = DEFAULT_ITERATIONS
    seed: int = 1

    def __post_init__(self):
        if self.num_topics < 1:
            raise ValueError("num_topics must be >= 1")
        if self.alpha is None:
            self.alpha = 50.0 / self.num_topics
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class TopicModel:
    words: list[str]
    phi: np.ndarray                # K x V topic-word probabilities
    theta: np.ndarray              # D x K document-topic probabilities
    token_assignments: np.ndarray  # flat, tokens in document order


@dataclass
class ClusterTopicSummary:
    """What the report shows for one tweet cluster."""

    cluster_id: int
    doc_count: int
    topics: list[list[tuple[str, float]]]
    frequent_words: list[str]
    skipped: bool = False


class LdaSampler:
    """Collapsed Gibbs sampler with inspectable count state.

    Exposes ``sweep`` so callers (and tests) can step the chain and check
    the count identities between sweeps; ``fit_lda`` is the one-shot
    wrapper.
    """

    def __init__(self, docs: list[Document], cfg: LdaConfig):
        if not docs:
            raise ValueError("LDA needs at least one document")
        self.cfg = cfg
        self.words = sorted({tok for doc in docs for tok in doc.tokens})
        if not self.words:
            raise ValueError("LDA needs at least one token")
        word_to_id = {w: i for i, w in enumerate(self.words)}
        self.doc_of: list[int] = []
        self.word_of: list[int] = []
        for d, doc in enumerate(docs):
            for tok in doc.tokens:
                self.doc_of.append(d)
                self.word_of.append(word_to_id[tok])
        self.num_docs = len(docs)
        self.doc_lengths = [len(doc.tokens) for doc in docs]

        k, v = cfg.num_topics, len(self.words)
        self.rng = np.random.default_rng(cfg.seed)
        self.z = [int(t) for t in self.rng.integers(0, k, size=len(self.doc_of))]
        self.n_dk = [[0] * k for _ in range(self.num_docs)]
        self.n_kw = [[0] * v for _ in range(k)]
        self.n_k = [0] * k
        for i, topic in enumerate(self.z):
            self.n_dk[self.doc_of[i]][topic] += 1
            self.n_kw[topic][self.word_of[i]] += 1
            self.n_k[topic] += 1
        self.sweeps_done = 0

    def sweep(self) -> None:
        """Resample the topic of every token once."""
        k = self.cfg.num_topics
        alpha, beta = self.cfg.alpha, self.cfg.beta
        v_beta = len(self.words) * beta
        n_dk, n_kw, n_k = self.n_dk, self.n_kw, self.n_k
        uniforms = self.rng.random(len(self.z))
        for i, (d, w) in enumerate(zip(self.doc_of, self.word_of)):
            old = self.z[i]
            dk = n_dk[d]
            dk[old] -= 1
            n_kw[old][w] -= 1
            n_k[old] -= 1

            total = 0.0
            cumulative = [0.0] * k
            for t in range(k):
                total += (dk[t] + alpha) * (n_kw[t][w] + beta) / (n_k[t] + v_beta)
                cumulative[t] = total
            u = uniforms[i] * total
            new = 0
            while cumulative[new] < u:
                new += 1

            self.z[i] = new
            dk[new] += 1
            n_kw[new][w] += 1
            n_k[new] += 1
        self.sweeps_done += 1

    def run(self, iterations: int) -> None:
        for _ in range(iterations):
            self.sweep()

    def to_model(self) -> TopicModel:
        """Smoothed point estimates from the current counts."""
        k, v = self.cfg.num_topics, len(self.words)
        alpha, beta = self.cfg.alpha, self.cfg.beta
        n_kw = np.array(self.n_kw, dtype=np.float64)
        n_k = np.array(self.n_k, dtype=np.float64)
        n_dk = np.array(self.n_dk, dtype=np.float64)
        n_d = np.array(self.doc_lengths, dtype=np.float64)
        phi = (n_kw + beta) / (n_k + v * beta)[:, None]
        theta = (n_dk + alpha) / (n_d + k * alpha)[:, None]
        return TopicModel(
            words=self.words,
            phi=phi,
            theta=theta,
            token_assignments=np.array(self.z, dtype=np.int64),
        )


def fit_lda(docs: list[Document], cfg: LdaConfig) -> TopicModel:
    """Run the collapsed Gibbs chain for ``cfg.iterations`` sweeps and
    return the smoothed point estimate."""
    sampler = LdaSampler(docs, cfg)
    sampler.run(cfg.iterations)
    return sampler.to_model()


def top_words(model: TopicModel, topic: int, n: int) -> list[tuple[str, float]]:
    """The n highest-probability words of one topic, ties lexicographic."""
    if topic < 0 or topic >= model.phi.shape[0]:
        raise IndexError(f"topic {topic} out of range")
    row = model.phi[topic]
    order = sorted(range(len(model.words)), key=lambda i: (-row[i], model.words[i]))
    return [(model.words[i], float(row[i])) for i in order[:n]]


def top_frequent_words(docs: list[Document], n: int,
                       stopset: set[str] | None = None) -> list[str]:
    """The n most frequent tokens across the documents, ties lexicographic."""
    stopset = stopset or set()
    counts: dict[str, int] = {}
    for doc in docs:
        for tok in doc.tokens:
            if tok not in stopset:
                counts[tok] = counts.get(tok, 0) + 1
    ranked = sorted(counts.items(), key=lambda wc: (-wc[1], wc[0]))
    return [w for w, _ in ranked[:n]]


def summarize_cluster(cluster_id: int, docs: list[Document], cfg: LdaConfig,
                      topic_words: int, frequent_words: int) -> ClusterTopicSummary:
    """LDA plus frequent words for one tweet cluster.

    Clusters with fewer than ``cfg.num_topics`` documents are not fitted;
    they come back marked skipped, with frequent words still listed.
    """
    frequent = top_frequent_words(docs, frequent_words)
    if len(docs) < cfg.num_topics:
        return ClusterTopicSummary(
            cluster_id=cluster_id,
            doc_count=len(docs),
            topics=[],
            frequent_words=frequent,
            skipped=True,
        )
    model = fit_lda(docs, cfg)
    topics = [
        top_words(model, t, topic_words) for t in range(cfg.num_topics)
    ]
    return ClusterTopicSummary(
        cluster_id=cluster_id,
        doc_count=len(docs),
        topics=topics,
        frequent_words=frequent,
        skipped=False,
    )
