"""Semantic short-text clustering and topic discovery for tweets.

The pipeline: clean and tokenize tweets, train skip-gram word embeddings,
cluster words by cosine distance, weight each tweet over the word clusters
with TF-IDF, compress the tweet vectors through a deep autoencoder, cluster
the codes, and summarize every cluster with LDA topics and frequent words.
"""

from .autoenc import (
    AdadeltaState,
    NetworkSpec,
    NetworkState,
    TrainReport,
    adadelta_step,
    backward,
    bce_loss,
    encode,
    forward,
)
from .cluster import (
    ClusterAssignment,
    KmeansConfig,
    cosine_distance,
    cosine_similarity,
    euclidean_distance,
    kmeans,
)
from .corpus import (
    Corpus,
    Document,
    RawTweet,
    build_corpus,
    clean_text,
    default_stopwords,
    load_tweets,
    tokenize,
)
from .embed import (
    EmbeddingMatrix,
    SkipgramHyperparams,
    UnigramTable,
    Vocabulary,
    build_vocabulary,
    nearest_words,
    negative_sample,
    train_skipgram,
)
from .pipeline import PipelineConfig, StageError, render_report, run_pipeline
from .topics import (
    LdaConfig,
    LdaSampler,
    TopicModel,
    fit_lda,
    top_frequent_words,
    top_words,
)
from .vectorize import (
    TfidfStats,
    TweetVector,
    WordClusterMap,
    compute_idf,
    term_frequency,
    tweet_vector,
    tweet_vectors,
)

__version__ = "0.1.0"
