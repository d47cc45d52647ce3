"""Stage orchestration: configuration, artifact caching, and the report.

Every stage persists exactly one artifact file in the output directory
and reads nothing but upstream artifacts. A stage re-runs only when its
inputs digest (relevant config slice plus upstream artifact digests)
changes or its own artifact is missing or altered, so re-running a
finished pipeline is a no-op and editing one knob re-runs only the
stages that depend on it.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import autoenc, cluster, corpus, embed, topics, vectorize

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

STAGES = [
    "preprocess",
    "train-embeddings",
    "cluster-words",
    "vectorize",
    "train-autoencoder",
    "encode",
    "cluster-tweets",
    "topics",
    "report",
]

UPSTREAM = {
    "preprocess": [],
    "train-embeddings": ["preprocess"],
    "cluster-words": ["train-embeddings"],
    "vectorize": ["preprocess", "train-embeddings", "cluster-words"],
    "train-autoencoder": ["vectorize"],
    "encode": ["vectorize", "train-autoencoder"],
    "cluster-tweets": ["encode"],
    "topics": ["preprocess", "cluster-tweets"],
    "report": ["topics"],
}

ARTIFACTS = {
    "preprocess": "tokens.tsv",
    "train-embeddings": "embeddings.txt",
    "cluster-words": "word_clusters.csv",
    "vectorize": "tweet_vectors.csv",
    "train-autoencoder": "autoencoder_model.txt",
    "encode": "codes.csv",
    "cluster-tweets": "tweet_clusters.csv",
    "topics": "topics.json",
    "report": "report.txt",
}

# offsets applied to the global seed so each stochastic stage gets its own
# deterministic stream
_SEED_OFFSETS = {
    "train-embeddings": 0,
    "cluster-words": 1,
    "train-autoencoder": 2,
    "cluster-tweets": 3,
    "topics": 4,
}


class StageError(RuntimeError):
    """A stage failed; partial artifacts from earlier stages are retained."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    """Everything the pipeline needs, with the reported constants as
    defaults: embedding dim 300, 10 negatives, 200 word clusters, 200
    tweet clusters, bottleneck 20, 5 topics of 5 words plus 10 frequent
    words per cluster."""

    input_path: str = "tweets.csv"
    text_column: str = "text"
    stopword_file: str | None = None  # None: packaged English list
    embedding: embed.SkipgramHyperparams = field(
        default_factory=embed.SkipgramHyperparams
    )
    word_clusters: int = 200
    tweet_clusters: int = 200
    autoencoder_layers: list[int] = field(
        default_factory=lambda: [200, 128, 64, 20, 64, 128, 200]
    )
    autoencoder_epochs: int = 100
    autoencoder_batch_size: int = 32
    lda: topics.LdaConfig = field(default_factory=topics.LdaConfig)
    topic_words: int = 5
    frequent_words: int = 10
    kmeans_max_iterations: int = cluster.DEFAULT_MAX_ITERATIONS
    output_dir: str = "out"
    seed: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        raw = dict(raw)
        cfg = cls()
        inp = raw.pop("input", {})
        cfg.input_path = inp.get("path", cfg.input_path)
        cfg.text_column = inp.get("text_column", cfg.text_column)
        cfg.stopword_file = raw.pop("stopwords", cfg.stopword_file)
        emb = raw.pop("embedding", {})
        cfg.embedding = embed.SkipgramHyperparams(
            dim=emb.get("dim", 300),
            window=emb.get("window", 5),
            negatives=emb.get("negatives", 10),
            epochs=emb.get("epochs", 5),
            initial_lr=emb.get("initial_lr", 0.025),
            min_count=emb.get("min_count", 5),
        )
        cfg.word_clusters = raw.pop("word_clusters", cfg.word_clusters)
        cfg.tweet_clusters = raw.pop("tweet_clusters", cfg.tweet_clusters)
        auto = raw.pop("autoencoder", {})
        if "layer_sizes" in auto:
            cfg.autoencoder_layers = list(auto["layer_sizes"])
        else:
            cfg.autoencoder_layers = _default_layers(cfg.word_clusters)
        cfg.autoencoder_epochs = auto.get("epochs", cfg.autoencoder_epochs)
        cfg.autoencoder_batch_size = auto.get("batch_size", cfg.autoencoder_batch_size)
        lda = raw.pop("lda", {})
        cfg.lda = topics.LdaConfig(
            num_topics=lda.get("topics", 5),
            alpha=lda.get("alpha"),
            beta=lda.get("beta", topics.DEFAULT_BETA),
            iterations=lda.get("iterations", topics.DEFAULT_ITERATIONS),
        )
        cfg.topic_words = lda.get("topic_words", cfg.topic_words)
        cfg.frequent_words = lda.get("frequent_words", cfg.frequent_words)
        cfg.kmeans_max_iterations = raw.pop(
            "kmeans_max_iterations", cfg.kmeans_max_iterations
        )
        cfg.output_dir = raw.pop("output_dir", cfg.output_dir)
        cfg.seed = raw.pop("seed", cfg.seed)
        unknown = set(raw)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cfg

    @classmethod
    def from_yaml(cls, path: str | Path) -> "PipelineConfig":
        with Path(path).open(encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a mapping")
        cfg = cls.from_dict(raw)
        # relative paths resolve against the config file location
        base = Path(path).parent
        if not Path(cfg.input_path).is_absolute():
            cfg.input_path = str(base / cfg.input_path)
        if cfg.stopword_file and not Path(cfg.stopword_file).is_absolute():
            cfg.stopword_file = str(base / cfg.stopword_file)
        return cfg

    def validate(self) -> None:
        for name in ("word_clusters", "tweet_clusters", "topic_words",
                     "frequent_words", "autoencoder_epochs",
                     "autoencoder_batch_size", "kmeans_max_iterations"):
            if getattr(self, name) <= 0:
                raise ValueError(f"config: {name} must be positive")
        if not Path(self.input_path).is_file():
            raise ValueError(f"config: input file not found: {self.input_path}")
        if self.stopword_file is not None and not Path(self.stopword_file).is_file():
            raise ValueError(
                f"config: stopword file not found: {self.stopword_file}"
            )
        if self.autoencoder_layers[0] != self.word_clusters:
            raise ValueError(
                "config: autoencoder input layer must equal word_clusters "
                f"({self.autoencoder_layers[0]} != {self.word_clusters})"
            )
        autoenc.NetworkSpec(self.autoencoder_layers)

    def stage_seed(self, stage: str) -> int:
        return self.seed + _SEED_OFFSETS[stage]

    def stopwords(self) -> set[str]:
        if self.stopword_file is None:
            return corpus.default_stopwords()
        return corpus.load_stopwords(self.stopword_file)


def _default_layers(input_dim: int) -> list[int]:
    if input_dim == 200:
        return [200, 128, 64, 20, 64, 128, 200]
    # keep the same tapering idea for desk-scale runs
    mid1 = max(2, int(round(input_dim * 0.64)))
    mid2 = max(2, int(round(input_dim * 0.32)))
    bottleneck = max(1, int(round(input_dim * 0.1)))
    if not input_dim > mid1 > mid2 > bottleneck:
        return [input_dim, max(1, input_dim // 2), input_dim]
    return [input_dim, mid1, mid2, bottleneck, mid2, mid1, input_dim]


@dataclass
class StageResult:
    stage: str
    path: str
    digest: str
    upstream_digests: dict[str, str]
    executed: bool


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _config_slice(cfg: PipelineConfig, stage: str) -> dict:
    """The config subset a stage's output actually depends on."""
    if stage == "preprocess":
        return {
            "input_digest": _sha256(Path(cfg.input_path)),
            "text_column": cfg.text_column,
            "stopwords_digest": hashlib.sha256(
                "\n".join(sorted(cfg.stopwords())).encode()
            ).hexdigest(),
        }
    if stage == "train-embeddings":
        hp = cfg.embedding
        return {
            "dim": hp.dim, "window": hp.window, "negatives": hp.negatives,
            "epochs": hp.epochs, "initial_lr": hp.initial_lr,
            "min_count": hp.min_count, "seed": cfg.stage_seed(stage),
        }
    if stage == "cluster-words":
        return {
            "k": cfg.word_clusters, "seed": cfg.stage_seed(stage),
            "max_iterations": cfg.kmeans_max_iterations,
        }
    if stage == "vectorize":
        return {}
    if stage == "train-autoencoder":
        return {
            "layers": cfg.autoencoder_layers,
            "epochs": cfg.autoencoder_epochs,
            "batch_size": cfg.autoencoder_batch_size,
            "seed": cfg.stage_seed(stage),
        }
    if stage == "encode":
        return {}
    if stage == "cluster-tweets":
        return {
            "k": cfg.tweet_clusters, "seed": cfg.stage_seed(stage),
            "max_iterations": cfg.kmeans_max_iterations,
        }
    if stage == "topics":
        return {
            "topics": cfg.lda.num_topics, "alpha": cfg.lda.alpha,
            "beta": cfg.lda.beta, "iterations": cfg.lda.iterations,
            "seed": cfg.stage_seed(stage),
            "topic_words": cfg.topic_words,
            "frequent_words": cfg.frequent_words,
        }
    if stage == "report":
        return {}
    raise ValueError(f"unknown stage: {stage}")


# ---------------------------------------------------------------------------
# stage bodies: read upstream artifact files, write this stage's artifact
# ---------------------------------------------------------------------------

def _stage_preprocess(cfg: PipelineConfig, out: Path) -> None:
    tweets = corpus.load_tweets(cfg.input_path, text_column=cfg.text_column)
    corp = corpus.build_corpus(tweets, cfg.stopwords())
    corpus.save_tokens(corp, out / ARTIFACTS["preprocess"])


def _stage_train_embeddings(cfg: PipelineConfig, out: Path) -> None:
    corp = corpus.load_tokens(out / ARTIFACTS["preprocess"])
    vocab = embed.build_vocabulary(corp, min_count=cfg.embedding.min_count)
    hp = embed.SkipgramHyperparams(
        dim=cfg.embedding.dim, window=cfg.embedding.window,
        negatives=cfg.embedding.negatives, epochs=cfg.embedding.epochs,
        initial_lr=cfg.embedding.initial_lr, min_count=cfg.embedding.min_count,
        seed=cfg.stage_seed("train-embeddings"),
    )
    matrix = embed.train_skipgram(corp, vocab, hp)
    embed.save_embeddings(vocab, matrix, out / ARTIFACTS["train-embeddings"])


def _stage_cluster_words(cfg: PipelineConfig, out: Path) -> None:
    words, mat = embed.load_embeddings(out / ARTIFACTS["train-embeddings"])
    job = cluster.KmeansConfig(
        k=cfg.word_clusters, metric="cosine",
        max_iterations=cfg.kmeans_max_iterations,
        seed=cfg.stage_seed("cluster-words"),
    )
    assignment = cluster.kmeans(mat, job)
    cluster.save_assignment(words, assignment, out / ARTIFACTS["cluster-words"])


def _stage_vectorize(cfg: PipelineConfig, out: Path) -> None:
    corp = corpus.load_tokens(out / ARTIFACTS["preprocess"])
    words, _ = embed.load_embeddings(out / ARTIFACTS["train-embeddings"])
    cluster_words, labels = cluster.load_assignment(out / ARTIFACTS["cluster-words"])
    if cluster_words != words:
        raise ValueError("word cluster assignment does not match embedding vocabulary")
    vocab = embed.Vocabulary(words=words, counts=np.ones(len(words), dtype=np.int64))
    stats = vectorize.compute_idf(corp, vocab)
    cmap = vectorize.WordClusterMap(
        cluster_of=labels, cluster_count=cfg.word_clusters
    )
    ids, matrix = vectorize.tweet_vectors(corp, cmap, stats, vocab)
    vectorize.save_tweet_vectors(ids, matrix, out / ARTIFACTS["vectorize"])


def _nondegenerate(ids: list[str], matrix: np.ndarray) -> tuple[list[str], np.ndarray]:
    mask = matrix.sum(axis=1) > 0.0
    dropped = int((~mask).sum())
    if dropped:
        logger.info("excluding %d degenerate (all-zero) tweet vectors", dropped)
    return [i for i, keep in zip(ids, mask) if keep], matrix[mask]


def _stage_train_autoencoder(cfg: PipelineConfig, out: Path) -> None:
    ids, matrix = vectorize.load_tweet_vectors(out / ARTIFACTS["vectorize"])
    _, matrix = _nondegenerate(ids, matrix)
    spec = autoenc.NetworkSpec(cfg.autoencoder_layers)
    net, report = autoenc.train(
        spec, matrix, epochs=cfg.autoencoder_epochs,
        batch_size=cfg.autoencoder_batch_size,
        seed=cfg.stage_seed("train-autoencoder"),
    )
    logger.info("autoencoder final reconstruction loss: %.6f", report.final_loss)
    autoenc.save_model(net, out / ARTIFACTS["train-autoencoder"])


def _stage_encode(cfg: PipelineConfig, out: Path) -> None:
    ids, matrix = vectorize.load_tweet_vectors(out / ARTIFACTS["vectorize"])
    ids, matrix = _nondegenerate(ids, matrix)
    net = autoenc.load_model(out / ARTIFACTS["train-autoencoder"])
    codes = autoenc.encode(net, matrix)
    path = out / ARTIFACTS["encode"]
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("id," + ",".join(f"c_{i}" for i in range(codes.shape[1])) + "\n")
        for pid, row in zip(ids, codes):
            fh.write(pid + "," + ",".join(f"{v:.9g}" for v in row) + "\n")


def _load_codes(path: Path) -> tuple[list[str], np.ndarray]:
    lines = path.read_text(encoding="utf-8").splitlines()
    ids, rows = [], []
    for line in lines[1:]:
        parts = line.split(",")
        ids.append(parts[0])
        rows.append([float(x) for x in parts[1:]])
    return ids, np.array(rows)


def _stage_cluster_tweets(cfg: PipelineConfig, out: Path) -> None:
    ids, codes = _load_codes(out / ARTIFACTS["encode"])
    job = cluster.KmeansConfig(
        k=cfg.tweet_clusters, metric="euclidean",
        max_iterations=cfg.kmeans_max_iterations,
        seed=cfg.stage_seed("cluster-tweets"),
    )
    assignment = cluster.kmeans(codes, job)
    cluster.save_assignment(ids, assignment, out / ARTIFACTS["cluster-tweets"])


def _stage_topics(cfg: PipelineConfig, out: Path) -> None:
    corp = corpus.load_tokens(out / ARTIFACTS["preprocess"])
    by_id = {doc.id: doc for doc in corp.documents}
    ids, labels = cluster.load_assignment(out / ARTIFACTS["cluster-tweets"])
    base_seed = cfg.stage_seed("topics")
    summaries = []
    for cid in range(cfg.tweet_clusters):
        docs = [by_id[i] for i, lab in zip(ids, labels) if lab == cid]
        lda_cfg = topics.LdaConfig(
            num_topics=cfg.lda.num_topics, alpha=cfg.lda.alpha,
            beta=cfg.lda.beta, iterations=cfg.lda.iterations,
            seed=base_seed ^ cid,
        )
        summary = topics.summarize_cluster(
            cid, docs, lda_cfg, cfg.topic_words, cfg.frequent_words
        )
        if summary.skipped:
            logger.info(
                "cluster %d skipped for LDA (%d documents < %d topics)",
                cid, summary.doc_count, cfg.lda.num_topics,
            )
        summaries.append(summary)
    payload = {
        "clusters": [
            {
                "cluster": s.cluster_id,
                "documents": s.doc_count,
                "skipped": s.skipped,
                "topics": [[[w, round(p, 10)] for w, p in topic] for topic in s.topics],
                "frequent_words": s.frequent_words,
            }
            for s in summaries
        ]
    }
    with (out / ARTIFACTS["topics"]).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_topic_summaries(path: str | Path) -> list[topics.ClusterTopicSummary]:
    with Path(path).open(encoding="utf-8") as fh:
        payload = json.load(fh)
    return [
        topics.ClusterTopicSummary(
            cluster_id=entry["cluster"],
            doc_count=entry["documents"],
            topics=[[(w, p) for w, p in topic] for topic in entry["topics"]],
            frequent_words=entry["frequent_words"],
            skipped=entry["skipped"],
        )
        for entry in payload["clusters"]
    ]


def render_report(summaries: list[topics.ClusterTopicSummary]) -> str:
    """Human-readable per-cluster report.

    Topic rows follow the ``weight*word`` convention with 3-decimal
    weights, e.g. ``0.080*sales 0.080*billion 0.075*quarterly``.
    """
    lines = ["Tweet cluster topic report", "=" * 26, ""]
    for s in summaries:
        noun = "tweet" if s.doc_count == 1 else "tweets"
        lines.append(f"Cluster {s.cluster_id} ({s.doc_count} {noun})")
        if s.skipped:
            lines.append("  LDA skipped: fewer documents than topics")
        else:
            for t, pairs in enumerate(s.topics):
                row = " ".join(f"{p:.3f}*{w}" for w, p in pairs)
                lines.append(f"  topic {t}: {row}")
        if s.frequent_words:
            lines.append("  top frequent words: " + ", ".join(s.frequent_words))
        lines.append("")
    return "\n".join(lines)


def _stage_report(cfg: PipelineConfig, out: Path) -> None:
    summaries = load_topic_summaries(out / ARTIFACTS["topics"])
    text = render_report(summaries)
    (out / ARTIFACTS["report"]).write_text(text, encoding="utf-8", newline="\n")


_STAGE_BODIES = {
    "preprocess": _stage_preprocess,
    "train-embeddings": _stage_train_embeddings,
    "cluster-words": _stage_cluster_words,
    "vectorize": _stage_vectorize,
    "train-autoencoder": _stage_train_autoencoder,
    "encode": _stage_encode,
    "cluster-tweets": _stage_cluster_tweets,
    "topics": _stage_topics,
    "report": _stage_report,
}


def _load_manifest(out: Path) -> dict:
    path = out / MANIFEST_NAME
    if not path.is_file():
        return {"stages": {}}
    with path.open(encoding="utf-8") as fh:
        return json.load(fh)


def _save_manifest(out: Path, manifest: dict) -> None:
    with (out / MANIFEST_NAME).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")


def run_pipeline(cfg: PipelineConfig, stages: list[str] | None = None,
                 force: bool = False) -> list[StageResult]:
    """Run the requested stages in pipeline order, skipping up-to-date ones.

    Raises :class:`StageError` on the first failing stage; artifacts of the
    stages that already completed are retained.
    """
    cfg.validate()
    requested = STAGES if stages is None else list(stages)
    unknown = [s for s in requested if s not in STAGES]
    if unknown:
        raise ValueError(f"unknown stages: {unknown}")
    requested = [s for s in STAGES if s in requested]

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = _load_manifest(out)
    results: list[StageResult] = []

    for stage in requested:
        artifact = out / ARTIFACTS[stage]
        upstream_digests = {}
        for up in UPSTREAM[stage]:
            up_path = out / ARTIFACTS[up]
            if not up_path.is_file():
                raise StageError(
                    stage,
                    FileNotFoundError(
                        f"upstream artifact missing: {up_path} (run stage {up!r})"
                    ),
                )
            upstream_digests[up] = _sha256(up_path)
        inputs_digest = hashlib.sha256(
            json.dumps(
                {"config": _config_slice(cfg, stage), "upstream": upstream_digests},
                sort_keys=True,
            ).encode()
        ).hexdigest()

        recorded = manifest["stages"].get(stage)
        up_to_date = (
            not force
            and recorded is not None
            and recorded.get("inputs_digest") == inputs_digest
            and artifact.is_file()
            and _sha256(artifact) == recorded.get("digest")
        )
        if up_to_date:
            logger.info("stage %s: up to date, skipped", stage)
            results.append(StageResult(
                stage=stage, path=str(artifact), digest=recorded["digest"],
                upstream_digests=upstream_digests, executed=False,
            ))
            continue

        logger.info("stage %s: running", stage)
        try:
            _STAGE_BODIES[stage](cfg, out)
        except Exception as exc:
            raise StageError(stage, exc) from exc
        digest = _sha256(artifact)
        manifest["stages"][stage] = {
            "artifact": ARTIFACTS[stage],
            "digest": digest,
            "inputs_digest": inputs_digest,
            "upstream": upstream_digests,
        }
        _save_manifest(out, manifest)
        results.append(StageResult(
            stage=stage, path=str(artifact), digest=digest,
            upstream_digests=upstream_digests, executed=True,
        ))
    return results
