from pathlib import Path

import numpy as np
import pytest

from tweetclust.corpus import Corpus, Document

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fixture_csv() -> Path:
    return DATA_DIR / "financial_tweets_500.csv"


def make_two_block_corpus(block_words=4, docs_per_block=20, doc_len=8, seed=0):
    """Two groups of words that only ever co-occur within their own group."""
    rng = np.random.default_rng(seed)
    blocks = (
        [f"a{i}" for i in range(block_words)],
        [f"b{i}" for i in range(block_words)],
    )
    docs = []
    for bi, block in enumerate(blocks):
        for d in range(docs_per_block):
            tokens = [str(t) for t in rng.choice(block, size=doc_len)]
            docs.append(Document(id=f"{bi}_{d}", tokens=tokens))
    return Corpus(documents=docs), blocks


@pytest.fixture(scope="session")
def two_block():
    return make_two_block_corpus()
