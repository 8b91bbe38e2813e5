"""Uncertainty-driven span selection for annotation.

Per-token label marginals arrive from an external tagger; spans are ranked
by summed token entropy under a token-independence assumption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from .corpus import Genre
from .errors import InvalidRange
from .relevance import (
    DfTable,
    GenreRatio,
    HeuristicWeights,
    score_sentence_heuristic,
    select_with_genre_ratio,
)

__all__ = [
    "SpanCandidate",
    "token_entropy",
    "span_entropy",
    "select_uncertain_spans",
    "fallback_rank_sentences",
]

TokenMarginals = Sequence[Mapping[str, float]]


@dataclass(frozen=True)
class SpanCandidate:
    doc_id: str
    seg_id: int
    start: int
    end: int
    entropy: float


def token_entropy(distribution: Mapping[str, float]) -> float:
    """Shannon entropy in nats; zero-probability entries contribute nothing."""
    return -sum(p * math.log(p) for p in distribution.values() if p > 0.0)


def span_entropy(marginals: TokenMarginals, i: int, j: int) -> float:
    """Sum of per-token entropies over [i, j)."""
    if not 0 <= i < j <= len(marginals):
        raise InvalidRange(f"span [{i}, {j}) outside sentence of {len(marginals)} tokens")
    return sum(token_entropy(marginals[t]) for t in range(i, j))


def select_uncertain_spans(
    corpus_marginals: Iterable[tuple[str, int, TokenMarginals]],
    budget: int,
    max_span_len: int = 5,
    max_per_sentence: int = 1,
) -> list[SpanCandidate]:
    """Top-budget spans by entropy, at most max_per_sentence per sentence.

    Per sentence, spans up to max_span_len are ranked by entropy descending
    with leftmost-then-shortest tie-breaks; globally, ties break by
    (doc_id, seg_id, start).
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if max_span_len < 1 or max_per_sentence < 1:
        raise ValueError("max_span_len and max_per_sentence must be >= 1")
    pool: list[SpanCandidate] = []
    for doc_id, seg_id, marginals in corpus_marginals:
        n = len(marginals)
        if n == 0:
            continue
        entropies = [token_entropy(d) for d in marginals]
        spans = [
            (sum(entropies[i:j]), i, j)
            for i in range(n)
            for j in range(i + 1, min(i + max_span_len, n) + 1)
        ]
        spans.sort(key=lambda s: (-s[0], s[1], s[2] - s[1]))
        for entropy, i, j in spans[:max_per_sentence]:
            pool.append(SpanCandidate(doc_id, seg_id, i, j, entropy))
    pool.sort(key=lambda c: (-c.entropy, c.doc_id, c.seg_id, c.start))
    return pool[:budget]


def fallback_rank_sentences(
    corpus: Sequence[tuple[Hashable, Genre, Sequence[str]]],
    table: DfTable,
    ratio: GenreRatio,
    budget: int,
) -> list[Hashable]:
    """Genre-balanced selection by the top-5 TF-IDF sentence score."""
    weights = HeuristicWeights(1.0, 0.0, 0.0, 0.0)
    scored = [
        (ref, genre, score_sentence_heuristic(tokens, table, weights=weights))
        for ref, genre, tokens in corpus
    ]
    return select_with_genre_ratio(scored, ratio, budget)
