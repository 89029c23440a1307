"""Deterministic text normalization.

Two pipelines: a light one feeding the embedder (lowercase, strip
punctuation/digits/emoticons, collapse repetitions) and an aggressive one
feeding frequent-word analysis (additionally stopword removal and
stemming).
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import EmptyCorpus
from .stemmer import stem

_NON_LETTER = re.compile(r"[^a-z\s]+")
_CHAR_RUN = re.compile(r"(.)\1{2,}")
_WS = re.compile(r"\s+")


def _load_stopwords() -> frozenset[str]:
    text = resources.files("revrec.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_stopwords()


@dataclass(frozen=True)
class CleanedText:
    original: str
    cleaned: str
    token_count: int


@dataclass(frozen=True)
class TokenStats:
    """Frequency table of stemmed, stopword-filtered tokens."""

    counts: Mapping[str, int]
    total_tokens: int


@dataclass(frozen=True)
class WordSet:
    """Top words of a corpus, frequency-descending with lexicographic tie-break."""

    words: tuple[str, ...]
    k: int
    frequencies: Mapping[str, int] = field(default_factory=dict)

    def __contains__(self, word: str) -> bool:
        return word in set(self.words)

    def __len__(self) -> int:
        return len(self.words)


def _clean_chars(text: str) -> list[str]:
    """Lowercase, strip non-letters, collapse character runs >= 3 to 2."""
    s = text.lower()
    s = _NON_LETTER.sub("", s)
    s = _CHAR_RUN.sub(r"\1\1", s)
    return s.split()


def clean_for_embedding(text: str) -> CleanedText:
    """Lowercase, strip non-letters, collapse repetitions, normalize spaces.

    Character runs of length >= 3 are collapsed to 2 ("soooo" -> "soo");
    consecutive duplicate tokens are collapsed to one. Idempotent.
    """
    tokens: list[str] = []
    for tok in _clean_chars(text):
        if not tokens or tokens[-1] != tok:
            tokens.append(tok)
    cleaned = " ".join(tokens)
    return CleanedText(original=text, cleaned=cleaned, token_count=len(tokens))


def clean_for_analysis(text: str) -> list[str]:
    """Character-level cleaning, then stopword removal, then stemming.

    Unlike the embedding pipeline, repeated tokens are kept: frequency
    analysis needs true counts. Stopwords are filtered both before and
    after stemming (stemming can create one, e.g. "one" -> "on").
    """
    stems = (stem(t) for t in _clean_chars(text) if t not in STOPWORDS)
    return [s for s in stems if s not in STOPWORDS]


def token_stats(docs: Iterable[str]) -> TokenStats:
    counts: Counter[str] = Counter()
    total = 0
    for doc in docs:
        tokens = _clean_chars(doc)
        total += len(tokens)
        stems = (stem(t) for t in tokens if t not in STOPWORDS)
        counts.update(s for s in stems if s not in STOPWORDS)
    return TokenStats(counts=dict(counts), total_tokens=total)


def _ranked_words(counts: Mapping[str, int]) -> list[str]:
    return sorted(counts, key=lambda w: (-counts[w], w))


def top_k_frequent(docs: Sequence[str], k: int) -> WordSet:
    """The k most frequent stemmed tokens across docs.

    Ties break lexicographically ascending; if the vocabulary is smaller
    than k the whole vocabulary is returned.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not docs:
        raise EmptyCorpus("top_k_frequent needs at least one document")
    stats = token_stats(docs)
    ranked = _ranked_words(stats.counts)[:k]
    return WordSet(
        words=tuple(ranked),
        k=k,
        frequencies={w: stats.counts[w] for w in ranked},
    )


def _edit_distance_one(a: str, b: str) -> bool:
    if abs(len(a) - len(b)) > 1 or a == b:
        return False
    if len(a) == len(b):
        return sum(x != y for x, y in zip(a, b)) == 1
    if len(a) > len(b):
        a, b = b, a
    # b is one longer: check deletion
    for i in range(len(b)):
        if b[:i] + b[i + 1 :] == a:
            return True
    return False


def correct_spelling(docs: Sequence[str]) -> list[str]:
    """Optional conservative spelling pass over embedding-cleaned docs.

    Off by default everywhere. A token occurring exactly once in the corpus
    is replaced by the most frequent vocabulary token at edit distance 1,
    if any (ties broken lexicographically). Deterministic.
    """
    cleaned_docs = [clean_for_embedding(d).cleaned for d in docs]
    vocab: Counter[str] = Counter()
    for doc in cleaned_docs:
        vocab.update(doc.split())
    replacements: dict[str, str] = {}
    for token, freq in vocab.items():
        if freq != 1:
            continue
        candidates = [
            w for w, c in vocab.items() if c > 1 and _edit_distance_one(token, w)
        ]
        if candidates:
            replacements[token] = min(candidates, key=lambda w: (-vocab[w], w))
    return [
        " ".join(replacements.get(t, t) for t in doc.split()) for doc in cleaned_docs
    ]


def frequent_above(docs: Sequence[str], min_freq: int) -> WordSet:
    """All stemmed tokens with corpus frequency >= min_freq."""
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    if not docs:
        raise EmptyCorpus("frequent_above needs at least one document")
    stats = token_stats(docs)
    kept = {w: c for w, c in stats.counts.items() if c >= min_freq}
    ranked = _ranked_words(kept)
    return WordSet(words=tuple(ranked), k=len(ranked), frequencies=kept)
