"""Tweet ingestion, cleaning and tokenization.

Raw tweets come in as CSV rows; they leave as ordered, stable lists of
lowercase tokens with all the Twitter noise (retweet markers, links,
mentions, hashtags, punctuation) stripped out.
"""

from __future__ import annotations

import csv
import importlib.resources
import sys
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

# Unicode categories P* plus the ASCII symbols we also treat as punctuation.
# Digits are deliberately kept ("q3"-style tokens are meaningful).
_EXTRA_PUNCT = set("$#@^~|<>=")


def _is_punct(ch: str) -> bool:
    return ch in _EXTRA_PUNCT or unicodedata.category(ch).startswith("P")


@dataclass
class RawTweet:
    """One CSV row: opaque id plus the raw (possibly empty) tweet text."""

    id: str
    text: str


@dataclass
class Document:
    """A cleaned, tokenized tweet. Tokens are lowercase and whitespace-free."""

    id: str
    tokens: list[str]


@dataclass
class Corpus:
    """Ordered documents plus the stopword set used to build them."""

    documents: list[Document]
    stopwords: set[str] = field(default_factory=set)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)


def load_tweets(path: str | Path, text_column: str = "text") -> list[RawTweet]:
    """Read one RawTweet per data row of a headered CSV file.

    The id is taken from an ``id`` column when present, otherwise it is the
    0-based data-row index rendered as a string. Rows with a missing text
    field yield an empty text.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"tweet file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, strict=True)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a CSV header row") from None
        except csv.Error as exc:
            raise ValueError(f"{path}: malformed CSV header: {exc}") from exc
        if text_column not in header:
            raise ValueError(
                f"{path}: header {header!r} lacks text column {text_column!r}"
            )
        text_idx = header.index(text_column)
        id_idx = header.index("id") if "id" in header else None

        tweets: list[RawTweet] = []
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as exc:
                raise ValueError(
                    f"{path}: malformed CSV at line {reader.line_num}: {exc}"
                ) from exc
            if len(row) > len(header):
                raise ValueError(
                    f"{path}: row {len(tweets)} (line {reader.line_num}) has "
                    f"{len(row)} fields, header has {len(header)}"
                )
            text = row[text_idx] if text_idx < len(row) else ""
            if id_idx is not None and id_idx < len(row):
                tweet_id = row[id_idx]
            else:
                tweet_id = str(len(tweets))
            tweets.append(RawTweet(id=tweet_id, text=text))
    return tweets


def clean_text(raw: str) -> str:
    """Scrub one tweet down to plain lowercase words.

    In order: drop a leading standalone "RT" marker, drop link tokens
    (http://, https://, www.), drop @-mentions, drop hashtag tokens whole,
    delete remaining punctuation characters, lowercase. Whitespace runs
    collapse to single spaces and the result is trimmed. Total function:
    any string in, possibly empty string out.
    """
    tokens = raw.split()
    if tokens and tokens[0] == "RT":
        tokens = tokens[1:]
    kept = []
    for tok in tokens:
        if tok.startswith(("http://", "https://", "www.")):
            continue
        if tok.startswith("@") or tok.startswith("#"):
            continue
        stripped = "".join(ch for ch in tok if not _is_punct(ch))
        if stripped:
            kept.append(stripped.lower())
    return " ".join(kept)


def tokenize(clean: str, stopwords: set[str]) -> list[str]:
    """Split cleaned text on whitespace and drop stopwords, keeping order
    and duplicates."""
    return [tok for tok in clean.split() if tok not in stopwords]


def build_corpus(
    tweets: list[RawTweet], stopwords: set[str] | None = None
) -> Corpus:
    """Clean and tokenize every tweet, preserving ids and order."""
    stopwords = set() if stopwords is None else stopwords
    docs = [
        Document(id=t.id, tokens=tokenize(clean_text(t.text), stopwords))
        for t in tweets
    ]
    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise ValueError(f"duplicate document id: {doc.id!r}")
        seen.add(doc.id)
    return Corpus(documents=docs, stopwords=stopwords)


def load_stopwords(path: str | Path) -> set[str]:
    """Load a stopword file: one lowercase word per line, blank lines ignored."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word:
            words.add(word.lower())
    return words


def default_stopwords() -> set[str]:
    """The English stopword list shipped with the package."""
    if sys.version_info >= (3, 9):
        ref = importlib.resources.files("tweetclust") / "data" / "stopwords_en.txt"
        text = ref.read_text(encoding="utf-8")
    else:  # pragma: no cover
        text = importlib.resources.read_text("tweetclust.data", "stopwords_en.txt")
    return {w for w in (line.strip() for line in text.splitlines()) if w}


def save_tokens(corpus: Corpus, path: str | Path) -> None:
    """Write one line per document: ``id<TAB>token token ...``."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus.documents:
            if "\t" in doc.id or "\n" in doc.id:
                raise ValueError(f"document id not serializable: {doc.id!r}")
            fh.write(f"{doc.id}\t{' '.join(doc.tokens)}\n")


def load_tokens(path: str | Path) -> Corpus:
    """Read a token file written by :func:`save_tokens`."""
    docs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        doc_id, _, rest = line.partition("\t")
        docs.append(Document(id=doc_id, tokens=rest.split()))
    return Corpus(documents=docs)
