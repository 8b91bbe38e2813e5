"""DF statistics, TF-IDF vectors, cosine ranking, and budgeted selection.

The IDF here is 1/DF, not log-scaled. Sentence and query vectors are sparse
dicts keyed by term id; ranking never materializes a dense matrix, so corpora
of a few hundred thousand sentences stay comfortably in memory.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

from .corpus import GENRE_ORDER, Genre
from .errors import ConfigError, EmptyCorpus, InsufficientCandidates

__all__ = [
    "DfTable",
    "SparseVector",
    "GenreRatio",
    "HeuristicWeights",
    "build_df_table",
    "tfidf_vector",
    "query_vector",
    "cosine",
    "rank_by_relevance",
    "score_sentence_heuristic",
    "select_with_genre_ratio",
]


@dataclass
class DfTable:
    """Vocabulary with per-term sentence frequencies.

    df[term_id] is the number of unique sentences containing the term,
    never the number of occurrences.
    """

    vocab: dict[str, int]
    df: list[int]
    n_sentences: int

    def term_id(self, term: str) -> int | None:
        return self.vocab.get(term)


@dataclass
class SparseVector:
    entries: dict[int, float] = field(default_factory=dict)

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.entries.values()))

    def dot(self, other: "SparseVector") -> float:
        a, b = self.entries, other.entries
        if len(b) < len(a):
            a, b = b, a
        return sum(w * b[t] for t, w in a.items() if t in b)


def build_df_table(corpus: Iterable[Sequence[str]]) -> DfTable:
    vocab: dict[str, int] = {}
    df: list[int] = []
    n_sentences = 0
    for tokens in corpus:
        n_sentences += 1
        for term in set(tokens):
            tid = vocab.get(term)
            if tid is None:
                vocab[term] = len(df)
                df.append(1)
            else:
                df[tid] += 1
    if n_sentences == 0:
        raise EmptyCorpus("cannot build a DF table from zero sentences")
    return DfTable(vocab=vocab, df=df, n_sentences=n_sentences)


def tfidf_vector(tokens: Sequence[str], table: DfTable) -> SparseVector:
    """Per-sentence TF-IDF weights: count(term) / df(term). OOV terms are dropped."""
    entries: dict[int, float] = {}
    for term, count in Counter(tokens).items():
        tid = table.vocab.get(term)
        if tid is not None:
            entries[tid] = count / table.df[tid]
    return SparseVector(entries)


def query_vector(
    query_terms: Iterable[tuple[str, float]], table: DfTable
) -> SparseVector:
    """Weight each query term by its given frequency divided by its DF."""
    entries: dict[int, float] = {}
    for term, freq in query_terms:
        tid = table.vocab.get(term)
        if tid is not None:
            entries[tid] = entries.get(tid, 0.0) + freq / table.df[tid]
    return SparseVector({t: w for t, w in entries.items() if w != 0.0})


def cosine(a: SparseVector, b: SparseVector) -> float:
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return a.dot(b) / (na * nb)


def _score_block(
    sentences: Sequence[Sequence[str]],
    start: int,
    stop: int,
    table: DfTable,
    qentries: dict[int, float],
    qnorm: float,
) -> list[tuple[int, float]]:
    vocab_get = table.vocab.get
    df = table.df
    out: list[tuple[int, float]] = []
    for index in range(start, stop):
        counts = Counter(sentences[index])
        num = 0.0
        sumsq = 0.0
        for term, count in counts.items():
            tid = vocab_get(term)
            if tid is None:
                continue
            w = count / df[tid]
            sumsq += w * w
            qw = qentries.get(tid)
            if qw is not None:
                num += w * qw
        if num == 0.0 or sumsq == 0.0:
            out.append((index, 0.0))
        else:
            out.append((index, num / (math.sqrt(sumsq) * qnorm)))
    return out


def rank_by_relevance(
    corpus: Sequence[Sequence[str]],
    query_terms: Iterable[tuple[str, float]],
    table: DfTable,
    workers: int = 1,
) -> list[tuple[int, float]]:
    """Rank sentences by cosine similarity to the query-term vector.

    Scores tie-break by ascending sentence index. Work is sharded into
    contiguous blocks when workers > 1; every sentence is scored
    independently, so the result is identical for any worker count.
    """
    query = query_vector(query_terms, table)
    qnorm = query.norm()
    n = len(corpus)
    if qnorm == 0.0:
        return [(i, 0.0) for i in range(n)]
    if workers <= 1 or n < 2 * workers:
        scored = _score_block(corpus, 0, n, table, query.entries, qnorm)
    else:
        step = (n + workers - 1) // workers
        bounds = [(lo, min(lo + step, n)) for lo in range(0, n, step)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = pool.map(
                lambda span: _score_block(
                    corpus, span[0], span[1], table, query.entries, qnorm
                ),
                bounds,
            )
            scored = [pair for block in blocks for pair in block]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored


@dataclass(frozen=True)
class HeuristicWeights:
    w_tfidf: float = 1.0
    w_kw: float = 1.0
    w_ngram: float = 1.0
    w_cap: float = 0.0


def score_sentence_heuristic(
    tokens: Sequence[str],
    table: DfTable,
    keywords: frozenset[str] | set[str] = frozenset(),
    set_e_ngrams: set[tuple[str, ...]] | frozenset = frozenset(),
    weights: HeuristicWeights = HeuristicWeights(),
    top_m: int = 5,
) -> float:
    """Composite sentence score: top-m TF-IDF sum, keyword hits, longest
    known n-gram, and (optional) capitalized-token count."""
    score = 0.0
    if weights.w_tfidf:
        vec = tfidf_vector(tokens, table)
        per_token = [
            vec.entries[tid]
            for tid in (table.vocab.get(t) for t in tokens)
            if tid is not None
        ]
        per_token.sort(reverse=True)
        score += weights.w_tfidf * sum(per_token[:top_m])
    if weights.w_kw and keywords:
        matched = {t.lower() for t in tokens} & set(keywords)
        score += weights.w_kw * len(matched)
    if weights.w_ngram and set_e_ngrams:
        longest = 0
        max_len = min(max(map(len, set_e_ngrams)), len(tokens))
        for n in range(max_len, 0, -1):
            if any(
                tuple(tokens[i : i + n]) in set_e_ngrams
                for i in range(len(tokens) - n + 1)
            ):
                longest = n
                break
        score += weights.w_ngram * longest
    if weights.w_cap:
        score += weights.w_cap * sum(1 for t in tokens if t and t[0].isupper())
    return score


class GenreRatio:
    """Target genre proportions for selection; fractions must sum to one."""

    def __init__(self, ratio: Mapping[Genre, float]):
        total = sum(ratio.values())
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"genre ratio sums to {total!r}, expected 1.0")
        for genre, fraction in ratio.items():
            if not 0.0 <= fraction <= 1.0:
                raise ConfigError(f"genre fraction out of range: {genre}={fraction}")
        self.ratio = dict(ratio)

    def quotas(self, budget: int) -> dict[Genre, int]:
        """Integer quotas by the largest-remainder method.

        Exact shares are floored; leftover slots go to the largest
        fractional remainders, canonical genre order breaking ties.
        """
        order = {g: i for i, g in enumerate(GENRE_ORDER)}
        shares = [
            (genre, budget * fraction) for genre, fraction in self.ratio.items()
        ]
        quotas = {genre: int(math.floor(share)) for genre, share in shares}
        leftover = budget - sum(quotas.values())
        remainders = sorted(
            shares,
            key=lambda pair: (-(pair[1] - math.floor(pair[1])), order.get(pair[0], 99)),
        )
        for genre, _ in remainders[:leftover]:
            quotas[genre] += 1
        return quotas


def select_with_genre_ratio(
    scored: Sequence[tuple[Hashable, Genre, float]],
    ratio: GenreRatio,
    budget: int,
) -> list[Hashable]:
    """Pick `budget` items respecting per-genre quotas.

    Within a genre the highest scores win, input order breaking ties. When a
    genre cannot fill its quota the shortfall is refilled from all remaining
    candidates by global score.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if budget == 0:
        return []
    if len(scored) < budget:
        raise InsufficientCandidates(
            f"budget {budget} exceeds {len(scored)} candidates"
        )
    quotas = ratio.quotas(budget)
    by_genre: dict[Genre, list[int]] = {}
    for position, (_, genre, _) in enumerate(scored):
        by_genre.setdefault(genre, []).append(position)
    for positions in by_genre.values():
        positions.sort(key=lambda p: (-scored[p][2], p))

    genre_rank = {g: i for i, g in enumerate(GENRE_ORDER)}
    chosen: list[int] = []
    taken: set[int] = set()
    for genre in sorted(quotas, key=lambda g: (genre_rank.get(g, 99), str(g))):
        for position in by_genre.get(genre, [])[: quotas[genre]]:
            chosen.append(position)
            taken.add(position)
    if len(chosen) < budget:
        rest = sorted(
            (p for p in range(len(scored)) if p not in taken),
            key=lambda p: (-scored[p][2], p),
        )
        for position in rest[: budget - len(chosen)]:
            chosen.append(position)
            taken.add(position)
    chosen.sort(key=lambda p: (-scored[p][2], p))
    return [scored[p][0] for p in chosen]
