"""Gazetteer construction, label propagation, and KB string matching.

A gazetteer maps normalized token-tuple surfaces to entity types. Every raw
surface contributes two lookup keys: its case-folded tokenization and its
fully normalized form (punctuation stripped). Propagation tries the folded
form of a text span first, then the normalized form, so "#Kigali" matches
whether the gazetteer listed "#Kigali" or "Kigali".
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import tokenize
from .textnorm import fold_token, levenshtein, nfc, normalize_token

__all__ = [
    "ENTITY_TYPES",
    "TYPE_PRIORITY",
    "Gazetteer",
    "CapStats",
    "normalize_gazetteer",
    "capitalization_stats",
    "cap_bucket",
    "negative_candidates",
    "propagate_gazetteer",
    "mark_unknown_capitalized",
    "propagate_edit_distance",
    "propagate_documents",
    "kb_exact_match",
    "spans_of",
    "validate_bio",
]

ENTITY_TYPES: tuple[str, ...] = ("PER", "ORG", "GPE", "LOC")

# Tie-break order for conflicting type votes.
TYPE_PRIORITY: tuple[str, ...] = ("PER", "GPE", "LOC", "ORG")
_PRIORITY_RANK = {t: i for i, t in enumerate(TYPE_PRIORITY)}


def _majority_type(votes: Iterable[str]) -> str:
    counts = Counter(votes)
    return min(counts, key=lambda t: (-counts[t], _PRIORITY_RANK.get(t, 99)))


@dataclass
class Gazetteer:
    entries: dict[tuple[str, ...], tuple[str, str | None]] = field(default_factory=dict)
    negatives: set[str] = field(default_factory=set)

    def lookup(self, span: Sequence[str]) -> tuple[str, str | None] | None:
        """Entity type for a token span, or None. Folded form wins over
        the punctuation-stripped form."""
        folded = tuple(fold_token(t) for t in span)
        hit = self.entries.get(folded)
        if hit is not None:
            return hit
        normalized = tuple(n for n in (normalize_token(t) for t in span) if n)
        if normalized and normalized != folded:
            return self.entries.get(normalized)
        return None

    def is_negative(self, token: str) -> bool:
        return (
            fold_token(token) in self.negatives
            or normalize_token(token) in self.negatives
        )

    def single_token_keys(self) -> list[tuple[str, str]]:
        """(key, type) for all single-token entries, sorted for determinism."""
        return sorted(
            (key[0], entry[0]) for key, entry in self.entries.items() if len(key) == 1
        )

    def extended(self, additions: Mapping[str, str]) -> "Gazetteer":
        """New gazetteer with extra single-word entries; existing keys win."""
        merged = dict(self.entries)
        for word in sorted(additions):
            for key in _surface_keys(word):
                if key in merged or (len(key) == 1 and key[0] in self.negatives):
                    continue
                merged[key] = (additions[word], None)
        return Gazetteer(entries=merged, negatives=set(self.negatives))


def _surface_keys(surface: str) -> list[tuple[str, ...]]:
    tokens = [t.surface for t in tokenize(nfc(surface))]
    folded = tuple(fold_token(t) for t in tokens)
    normalized = tuple(n for n in (normalize_token(t) for t in tokens) if n)
    keys = []
    if folded:
        keys.append(folded)
    if normalized and normalized != folded:
        keys.append(normalized)
    return keys


def normalize_gazetteer(
    raw_entries: Iterable[tuple[str, str, str | None]],
    negatives: Iterable[str] = (),
) -> Gazetteer:
    """Build a gazetteer from raw (surface, type, kb_id) rows.

    Conflicting types for one key resolve by majority, then PER>GPE>LOC>ORG.
    Single-token keys listed in the negative set are dropped entirely.
    """
    negative_forms: set[str] = set()
    for word in negatives:
        word = nfc(word.strip())
        if not word:
            continue
        negative_forms.add(fold_token(word))
        stripped = normalize_token(word)
        if stripped:
            negative_forms.add(stripped)

    votes: dict[tuple[str, ...], list[tuple[str, str | None]]] = {}
    for surface, entity_type, kb_id in raw_entries:
        if entity_type not in ENTITY_TYPES:
            raise ValueError(f"unknown entity type {entity_type!r} for {surface!r}")
        for key in _surface_keys(surface):
            votes.setdefault(key, []).append((entity_type, kb_id))

    entries: dict[tuple[str, ...], tuple[str, str | None]] = {}
    for key, key_votes in votes.items():
        if len(key) == 1 and key[0] in negative_forms:
            continue
        winner = _majority_type(t for t, _ in key_votes)
        kb_id = next((k for t, k in key_votes if t == winner and k), None)
        entries[key] = (winner, kb_id)
    return Gazetteer(entries=entries, negatives=negative_forms)


# ---------------------------------------------------------------------------
# Capitalization statistics


@dataclass
class CapStats:
    """Per-word (n_capitalized, n_total) counts over a corpus.

    The word key is case-insensitive; the smoothed ratio is strictly inside
    (0, 1) for every count pair, including unseen words.
    """

    counts: dict[str, tuple[int, int]] = field(default_factory=dict)

    def ratio(self, word: str) -> float:
        capitalized, total = self.counts.get(word.lower(), (0, 0))
        return (capitalized + 0.5) / (total + 1.0)


def capitalization_stats(corpus: Iterable[Sequence[str]]) -> CapStats:
    counts: dict[str, list[int]] = {}
    for sentence in corpus:
        for token in sentence:
            if not token:
                continue
            pair = counts.setdefault(token.lower(), [0, 0])
            pair[1] += 1
            if token[0].isupper():
                pair[0] += 1
    return CapStats({w: (c, n) for w, (c, n) in counts.items()})


def cap_bucket(ratio: float, n_buckets: int = 10) -> int:
    if n_buckets < 2:
        raise ValueError("n_buckets must be >= 2")
    return min(int(ratio * n_buckets), n_buckets - 1)


def negative_candidates(stats: CapStats, top_k: int = 1500) -> list[str]:
    """Most-capitalized words, for human review as non-entity candidates."""
    ranked = sorted(
        stats.counts,
        key=lambda w: (-stats.ratio(w), -stats.counts[w][1], w),
    )
    return ranked[: max(top_k, 0)]


# ---------------------------------------------------------------------------
# Label propagation


def propagate_gazetteer(
    tokens: Sequence[str], gaz: Gazetteer, window: int = 5
) -> list[str]:
    """Greedy left-to-right gazetteer tagging.

    At each unread position, spans of length window down to 1 are tried;
    the first gazetteer hit is tagged B-X/I-X... and the cursor skips past
    it. Single tokens in the negative set never match.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    n = len(tokens)
    tags = ["O"] * n
    i = 0
    while i < n:
        hit = None
        for length in range(min(window, n - i), 0, -1):
            span = tokens[i : i + length]
            if length == 1 and gaz.is_negative(span[0]):
                continue
            found = gaz.lookup(span)
            if found is not None:
                hit = (length, found[0])
                break
        if hit is None:
            i += 1
        else:
            length, entity_type = hit
            tags[i] = f"B-{entity_type}"
            for j in range(i + 1, i + length):
                tags[j] = f"I-{entity_type}"
            i += length
    return tags


def mark_unknown_capitalized(
    tags: Sequence[str], tokens: Sequence[str], negatives: set[str]
) -> list[str]:
    """Flip O tags on capitalized non-negative tokens to UNK."""
    out = list(tags)
    for i, (tag, token) in enumerate(zip(tags, tokens)):
        if tag != "O" or not token or not token[0].isupper():
            continue
        if fold_token(token) in negatives or normalize_token(token) in negatives:
            continue
        out[i] = "UNK"
    return out


def propagate_edit_distance(
    vocabulary: Iterable[str], gaz: Gazetteer, min_edit_dist: int = 2
) -> dict[str, str]:
    """Type assignments for words nearly matching single-token gazetteer keys.

    A word not already in the gazetteer picks up the majority type of all
    single-token keys at Levenshtein distance strictly below min_edit_dist.
    """
    if min_edit_dist < 1:
        raise ValueError("min_edit_dist must be >= 1")
    single_keys = gaz.single_token_keys()
    limit = min_edit_dist - 1
    additions: dict[str, str] = {}
    for word in sorted(set(vocabulary)):
        if gaz.lookup([word]) is not None:
            continue
        folded = fold_token(word)
        neighbor_types = [
            entity_type
            for key, entity_type in single_keys
            if abs(len(key) - len(folded)) <= limit
            and levenshtein(folded, key, limit=limit) < min_edit_dist
        ]
        if neighbor_types:
            additions[word] = _majority_type(neighbor_types)
    return additions


TaggedSentence = tuple[list[str], list[str]]


def spans_of(tags: Sequence[str]) -> list[tuple[int, int, str]]:
    """(start, end, type) for every B-X/I-X... span, half-open end."""
    spans: list[tuple[int, int, str]] = []
    i = 0
    while i < len(tags):
        tag = tags[i]
        if tag.startswith("B-"):
            entity_type = tag[2:]
            j = i + 1
            while j < len(tags) and tags[j] == f"I-{entity_type}":
                j += 1
            spans.append((i, j, entity_type))
            i = j
        else:
            i += 1
    return spans


def validate_bio(tags: Sequence[str]) -> str | None:
    """None if the sequence is valid BIO (+UNK), else a description."""
    previous = "O"
    for position, tag in enumerate(tags):
        if tag in ("O", "UNK"):
            previous = tag
            continue
        if len(tag) < 3 or tag[1] != "-" or tag[0] not in "BI":
            return f"malformed tag {tag!r} at position {position}"
        if tag[2:] not in ENTITY_TYPES:
            return f"unknown entity type in {tag!r} at position {position}"
        if tag[0] == "I":
            if previous not in (f"B-{tag[2:]}", tag):
                return f"{tag} at position {position} does not continue a span"
        previous = tag
    return None


def _fold_sentence(tokens: Sequence[str]) -> tuple[str, ...]:
    return tuple(fold_token(t) for t in tokens)


def _retag_occurrences(
    sentences: list[TaggedSentence],
    surface: tuple[str, ...],
    entity_type: str,
) -> None:
    width = len(surface)
    for tokens, tags in sentences:
        folded = _fold_sentence(tokens)
        for start in range(len(tokens) - width + 1):
            if folded[start : start + width] != surface:
                continue
            if any(tag != "O" for tag in tags[start : start + width]):
                continue
            tags[start] = f"B-{entity_type}"
            for j in range(start + 1, start + width):
                tags[j] = f"I-{entity_type}"


def propagate_documents(
    tagged_corpus: Sequence[Sequence[TaggedSentence]],
) -> list[list[TaggedSentence]]:
    """Propagate predicted span labels within documents, then corpus-wide.

    Surfaces (case-folded) from all predicted spans are re-applied to every
    still-untagged occurrence, longer surfaces first, majority type winning
    (document majority inside a document, corpus majority across). Existing
    non-O tags are never overwritten; applying the operation twice changes
    nothing.
    """
    corpus: list[list[TaggedSentence]] = [
        [(list(tokens), list(tags)) for tokens, tags in doc] for doc in tagged_corpus
    ]

    corpus_votes: Counter[tuple[tuple[str, ...], str]] = Counter()
    doc_votes: list[Counter[tuple[tuple[str, ...], str]]] = []
    for doc in corpus:
        votes: Counter[tuple[tuple[str, ...], str]] = Counter()
        for tokens, tags in doc:
            folded = _fold_sentence(tokens)
            for start, end, entity_type in spans_of(tags):
                votes[(folded[start:end], entity_type)] += 1
        doc_votes.append(votes)
        corpus_votes.update(votes)

    def winners(votes: Counter) -> list[tuple[tuple[str, ...], str]]:
        by_surface: dict[tuple[str, ...], list[tuple[str, int]]] = {}
        for (surface, entity_type), count in votes.items():
            by_surface.setdefault(surface, []).append((entity_type, count))
        resolved = []
        for surface, typed in by_surface.items():
            best = min(typed, key=lambda tc: (-tc[1], _PRIORITY_RANK.get(tc[0], 99)))
            resolved.append((surface, best[0]))
        resolved.sort(key=lambda st: (-len(st[0]), st[0]))
        return resolved

    for doc, votes in zip(corpus, doc_votes):
        for surface, entity_type in winners(votes):
            _retag_occurrences(doc, surface, entity_type)

    corpus_winners = winners(corpus_votes)
    for doc in corpus:
        for surface, entity_type in corpus_winners:
            _retag_occurrences(doc, surface, entity_type)
    return corpus


# ---------------------------------------------------------------------------
# KB exact-string matching


def kb_exact_match(
    tokens: Sequence[str],
    kb_index: Mapping[str, str],
    stopwords: set[str],
    n_max: int = 4,
    nospace_index: Mapping[str, str] | None = None,
) -> list[str]:
    """Tag spans whose lowercased join is a KB name, longest first.

    N-grams containing a stopword never match. A single '#'-initial token
    additionally matches KB names with internal spaces removed. Pass a
    precomputed nospace_index when calling repeatedly over one KB.
    """
    if nospace_index is None:
        nospace_index = {
            key.replace(" ", ""): entity_type
            for key, entity_type in sorted(kb_index.items())
        }
    n = len(tokens)
    tags = ["O"] * n
    lowered = [t.lower() for t in tokens]
    for length in range(min(n_max, n), 0, -1):
        for start in range(n - length + 1):
            window = range(start, start + length)
            if any(tags[i] != "O" for i in window):
                continue
            words = lowered[start : start + length]
            if any(w in stopwords for w in words):
                continue
            entity_type = kb_index.get(" ".join(words))
            if entity_type is None and length == 1 and tokens[start].startswith("#"):
                stripped = lowered[start][1:]
                if stripped and stripped not in stopwords:
                    entity_type = nospace_index.get(stripped)
            if entity_type is None:
                continue
            tags[start] = f"B-{entity_type}"
            for i in range(start + 1, start + length):
                tags[i] = f"I-{entity_type}"
    return tags
