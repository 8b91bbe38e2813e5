"""Parallel-corpus tooling.

Covers sentence realignment, noise-injected filter training, entity-swap
augmentation, do-not-translate masking, fallback word-by-word corpus
transfer, lexicon pivoting, and needs-identification phrase selection.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .corpus import _SPECIAL, extract_ngrams
from .errors import (
    DegenerateLabels,
    EmptyEntityLexicon,
    InvalidRange,
    MissingPlaceholderWarning,
    TooFewPairs,
)
from .lexicon import Lexicon
from .relevance import SparseVector
from .rng import SplitMix64
from .textnorm import levenshtein

__all__ = [
    "SentencePair",
    "FilterModel",
    "DntMask",
    "PAIR_FEATURE_NAMES",
    "realign_document",
    "make_noisy_training",
    "pair_features",
    "logloss_and_gradient",
    "train_filter",
    "predict_noisy_probability",
    "filter_parallel",
    "augment_with_entities",
    "dnt_tag",
    "dnt_restore",
    "translate_corpus_fallback",
    "pivot_lexicon",
    "select_ni_phrases",
]


@dataclass(frozen=True)
class SentencePair:
    src: tuple[str, ...]
    tgt: tuple[str, ...]
    origin_doc: str = ""
    index: int = 0

    @classmethod
    def of(cls, src: Sequence[str], tgt: Sequence[str], origin_doc: str = "", index: int = 0) -> "SentencePair":
        return cls(tuple(src), tuple(tgt), origin_doc, index)


# ---------------------------------------------------------------------------
# Sentence realignment


_Move = tuple[int, int, float]


def _moves(penalty_gap: float, penalty_merge: float) -> tuple[_Move, ...]:
    return (
        (1, 1, 0.0),
        (1, 0, penalty_gap),
        (0, 1, penalty_gap),
        (1, 2, penalty_merge),
        (2, 1, penalty_merge),
    )


def _length_cost(src_len: int, tgt_len: int) -> float:
    delta = src_len - tgt_len
    return (delta * delta) / (src_len + tgt_len + 1)


def realign_document(
    src_segments: Sequence[str],
    tgt_segments: Sequence[str],
    penalty_gap: float = 4.0,
    penalty_merge: float = 1.5,
) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Monotone segment alignment by dynamic programming.

    Moves are 1-1, 1-0, 0-1, 1-2 and 2-1; each move costs its penalty plus
    the squared character-length difference normalized by total length.
    Returns half-open ranges ((s0, s1), (t0, t1)) covering both sides
    exactly once.
    """
    if not src_segments or not tgt_segments:
        raise ValueError("realign_document requires non-empty segment lists")
    src_lens = [len(s) for s in src_segments]
    tgt_lens = [len(t) for t in tgt_segments]
    n, m = len(src_lens), len(tgt_lens)
    moves = _moves(penalty_gap, penalty_merge)

    inf = math.inf
    cost = [[inf] * (m + 1) for _ in range(n + 1)]
    back: list[list[int]] = [[-1] * (m + 1) for _ in range(n + 1)]
    cost[0][0] = 0.0
    for i in range(n + 1):
        for j in range(m + 1):
            base = cost[i][j]
            if base == inf:
                continue
            for move_id, (ds, dt, penalty) in enumerate(moves):
                ni, nj = i + ds, j + dt
                if ni > n or nj > m:
                    continue
                step = penalty + _length_cost(
                    sum(src_lens[i:ni]), sum(tgt_lens[j:nj])
                )
                if base + step < cost[ni][nj]:
                    cost[ni][nj] = base + step
                    back[ni][nj] = move_id

    alignment: list[tuple[tuple[int, int], tuple[int, int]]] = []
    i, j = n, m
    while i > 0 or j > 0:
        ds, dt, _ = moves[back[i][j]]
        alignment.append(((i - ds, i), (j - dt, j)))
        i, j = i - ds, j - dt
    alignment.reverse()
    return alignment


# ---------------------------------------------------------------------------
# Noise injection and the misalignment filter


def make_noisy_training(
    pairs: Sequence[SentencePair], swap_rate: float, seed: int
) -> list[tuple[SentencePair, int]]:
    """Swap the targets of floor(swap_rate * N) disjoint neighbor pairs.

    Both members of a swapped neighbor pair are labelled 0 (misaligned);
    untouched pairs are labelled 1. The swap positions come from a seeded
    SplitMix64 stream, so any (pairs, rate, seed) triple reproduces exactly.
    """
    n = len(pairs)
    if n < 2:
        raise TooFewPairs(f"noise injection needs >= 2 pairs, got {n}")
    if not 0.0 <= swap_rate <= 0.5:
        raise ValueError(f"swap_rate must be within [0, 0.5], got {swap_rate}")
    k = int(swap_rate * n)
    targets = [p.tgt for p in pairs]
    labels = [1] * n
    if k:
        # Sampling k values from [0, n-k) and spreading them by +i yields
        # starts with pairwise gaps >= 2: swapped neighbor pairs never touch.
        rng = SplitMix64(seed)
        draws = sorted(rng.sample_indices(n - k, k))
        for offset, draw in enumerate(draws):
            start = draw + offset
            targets[start], targets[start + 1] = targets[start + 1], targets[start]
            labels[start] = labels[start + 1] = 0
    return [
        (replace(pair, tgt=targets[i]), labels[i]) for i, pair in enumerate(pairs)
    ]


PAIR_FEATURE_NAMES: tuple[str, ...] = (
    "log_len_ratio",
    "src_coverage",
    "tgt_coverage",
    "token_overlap",
    "len_diff_bucket",
)


def pair_features(pair: SentencePair, lexicon: Lexicon) -> SparseVector:
    """Alignment-free pair features for the misalignment filter."""
    src, tgt = pair.src, pair.tgt
    ls, lt = max(len(src), 1), max(len(tgt), 1)
    src_set, tgt_set = set(src), set(tgt)

    covered = sum(
        1
        for token in src
        if any(candidate in tgt_set for candidate, _ in lexicon.translations(token))
    )
    inverted = lexicon.invert()
    covered_rev = sum(
        1
        for token in tgt
        if any(candidate in src_set for candidate, _ in inverted.translations(token))
    )
    overlap = len(src_set & tgt_set) / max(len(src_set), len(tgt_set), 1)

    values = (
        abs(math.log(ls / lt)),
        covered / ls,
        covered_rev / lt,
        overlap,
        float(min(abs(len(src) - len(tgt)), 5)),
    )
    return SparseVector({i: v for i, v in enumerate(values) if v != 0.0})


@dataclass
class FilterModel:
    weights: list[float]
    bias: float
    feature_names: tuple[str, ...] = PAIR_FEATURE_NAMES
    loss_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.feature_names):
            raise ValueError("feature_names length must match weights length")


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _softplus(z: float) -> float:
    return max(z, 0.0) + math.log1p(math.exp(-abs(z)))


def logloss_and_gradient(
    weights: Sequence[float],
    bias: float,
    labeled: Sequence[tuple[SparseVector, int]],
    l2: float,
) -> tuple[float, list[float], float]:
    """Mean regularized log-loss and its exact gradient.

    The L2 penalty applies to the weights only, never the bias, so an
    intercept-only fit still converges to the class-prior logit.
    """
    n = len(labeled)
    loss = 0.0
    grad_w = [0.0] * len(weights)
    grad_b = 0.0
    for features, label in labeled:
        z = bias + sum(weights[i] * v for i, v in features.entries.items())
        loss += label * _softplus(-z) + (1 - label) * _softplus(z)
        err = _sigmoid(z) - label
        for i, v in features.entries.items():
            grad_w[i] += err * v
        grad_b += err
    loss /= n
    grad_b /= n
    for i, w in enumerate(weights):
        grad_w[i] = grad_w[i] / n + l2 * w
        loss += 0.5 * l2 * w * w
    return loss, grad_w, grad_b


def train_filter(
    labeled: Sequence[tuple[SparseVector, int]],
    l2: float = 1e-4,
    epochs: int = 200,
    lr: float = 0.5,
    seed: int = 0,
    feature_names: tuple[str, ...] = PAIR_FEATURE_NAMES,
) -> FilterModel:
    """Fit the logistic misalignment filter by deterministic gradient descent.

    Full-batch steps; after any step that increases the loss, the step is
    reverted and the learning rate halved. The recorded loss history is
    therefore non-increasing. The seed parameter is reserved for sampled
    batch orders and does not affect the default full-batch schedule.
    """
    del seed
    labels = {label for _, label in labeled}
    if labels != {0, 1}:
        raise DegenerateLabels(f"need both classes, saw labels {sorted(labels)}")
    for features, _ in labeled:
        if any(i >= len(feature_names) for i in features.entries):
            raise ValueError("feature id out of range for feature_names")

    weights = [0.0] * len(feature_names)
    bias = 0.0
    loss, grad_w, grad_b = logloss_and_gradient(weights, bias, labeled, l2)
    history = [loss]
    for _ in range(epochs):
        new_weights = [w - lr * g for w, g in zip(weights, grad_w)]
        new_bias = bias - lr * grad_b
        new_loss, new_grad_w, new_grad_b = logloss_and_gradient(
            new_weights, new_bias, labeled, l2
        )
        if new_loss > loss:
            lr *= 0.5
            if lr < 1e-12:
                break
            continue
        weights, bias = new_weights, new_bias
        loss, grad_w, grad_b = new_loss, new_grad_w, new_grad_b
        history.append(loss)
    return FilterModel(weights=weights, bias=bias, feature_names=feature_names, loss_history=history)


def predict_noisy_probability(model: FilterModel, features: SparseVector) -> float:
    z = model.bias + sum(model.weights[i] * v for i, v in features.entries.items())
    return 1.0 - _sigmoid(z)


def filter_parallel(
    pairs: Sequence[SentencePair],
    model: FilterModel,
    lexicon: Lexicon,
    threshold: float = 0.5,
) -> tuple[list[SentencePair], list[SentencePair]]:
    """Partition pairs into (kept, removed); removed iff P(noisy) > threshold."""
    kept: list[SentencePair] = []
    removed: list[SentencePair] = []
    for pair in pairs:
        p_noisy = predict_noisy_probability(model, pair_features(pair, lexicon))
        (removed if p_noisy > threshold else kept).append(pair)
    return kept, removed


# ---------------------------------------------------------------------------
# Entity-swap augmentation


Span = tuple[tuple[int, int], tuple[int, int]]


def _check_span(range_: tuple[int, int], length: int, side: str, pair: SentencePair) -> None:
    lo, hi = range_
    if not 0 <= lo <= hi <= length:
        raise InvalidRange(
            f"{side} span {range_} outside pair {pair.index} of length {length}"
        )


def augment_with_entities(
    pairs: Sequence[SentencePair],
    spans: Sequence[Sequence[Span]],
    entity_lexicon: Lexicon,
    n_copies: int,
    seed: int,
) -> list[SentencePair]:
    """Emit the original pairs plus n_copies entity-swapped variants.

    Every marked (src, tgt) span pair is replaced by one entity drawn from
    the lexicon: the source surface on the source side and its first
    translation on the target side. Draw order is fixed (copy, pair, span),
    so a seed pins the whole augmentation.
    """
    if not entity_lexicon.entries:
        raise EmptyEntityLexicon("entity augmentation needs a non-empty lexicon")
    if len(spans) != len(pairs):
        raise ValueError("spans must align one list per pair")
    for pair, pair_spans in zip(pairs, spans):
        for src_range, tgt_range in pair_spans:
            _check_span(src_range, len(pair.src), "src", pair)
            _check_span(tgt_range, len(pair.tgt), "tgt", pair)

    choices = sorted(entity_lexicon.entries.items())
    rng = SplitMix64(seed)
    out = list(pairs)
    next_index = len(pairs)
    for _ in range(n_copies):
        for pair, pair_spans in zip(pairs, spans):
            drawn = []
            for span in pair_spans:
                src_entity, targets = choices[rng.randrange(len(choices))]
                drawn.append((span, src_entity.split(), targets[0][0].split()))
            src, tgt = list(pair.src), list(pair.tgt)
            for (src_range, tgt_range), src_tokens, tgt_tokens in sorted(
                drawn, key=lambda item: item[0][0][0], reverse=True
            ):
                src[src_range[0] : src_range[1]] = src_tokens
                tgt[tgt_range[0] : tgt_range[1]] = tgt_tokens
            out.append(SentencePair.of(src, tgt, pair.origin_doc, next_index))
            next_index += 1
    return out


# ---------------------------------------------------------------------------
# Do-not-translate masking


@dataclass(frozen=True)
class DntMask:
    masked: tuple[str, ...]
    slots: dict[str, str]


def dnt_tag(tokens: Sequence[str]) -> DntMask:
    """Replace URL/email/@mention/#hashtag tokens with DNT_i placeholders."""
    masked: list[str] = []
    slots: dict[str, str] = {}
    for token in tokens:
        if _SPECIAL.fullmatch(token):
            placeholder = f"DNT_{len(slots)}"
            slots[placeholder] = token
            masked.append(placeholder)
        else:
            masked.append(token)
    return DntMask(tuple(masked), slots)


def dnt_restore(translated: Sequence[str], mask: DntMask) -> list[str]:
    """Substitute original tokens back in place of their placeholders.

    A placeholder missing from the translation triggers a warning and its
    original token is appended at the end, so no content is silently lost.
    """
    out: list[str] = []
    seen: set[str] = set()
    for token in translated:
        original = mask.slots.get(token)
        if original is None:
            out.append(token)
        else:
            out.append(original)
            seen.add(token)
    for placeholder, original in mask.slots.items():
        if placeholder not in seen:
            warnings.warn(
                f"placeholder {placeholder} missing from translation; "
                f"appending {original!r}",
                MissingPlaceholderWarning,
                stacklevel=2,
            )
            out.append(original)
    return out


# ---------------------------------------------------------------------------
# Fallback corpus transfer, pivoting, NI phrases


def translate_corpus_fallback(
    tokens: Sequence[str],
    lexicon: Lexicon,
    vocab_target: Iterable[str],
    neighbor_file: Mapping[str, Sequence] | None = None,
    max_edit: int = 1,
) -> list[str]:
    """Word-by-word transfer with a three-stage fallback chain.

    Per token: the lexicon's top translation; else the lexicographically
    smallest target-vocabulary word within edit distance max_edit; else the
    token's first listed neighbor; else the token unchanged.
    """
    if max_edit < 0:
        raise ValueError("max_edit must be >= 0")
    vocab_sorted = sorted(set(vocab_target))
    neighbors = neighbor_file or {}
    out: list[str] = []
    for token in tokens:
        top = lexicon.top(token)
        if top is not None:
            out.append(top)
            continue
        match = next(
            (
                word
                for word in vocab_sorted
                if abs(len(word) - len(token)) <= max_edit
                and levenshtein(token, word, limit=max_edit) <= max_edit
            ),
            None,
        )
        if match is not None:
            out.append(match)
            continue
        listed = neighbors.get(token)
        if listed:
            first = listed[0]
            out.append(first[0] if isinstance(first, tuple) else first)
            continue
        out.append(token)
    return out


def pivot_lexicon(src_to_pivot: Lexicon, pivot_to_tgt: Lexicon) -> Lexicon:
    """Compose two lexicons through their shared pivot language.

    The (s, t) weight is the sum of w1*w2 over all pivot paths; target
    lists come out sorted by weight descending, then lexicographically.
    """
    composed: dict[str, dict[str, float]] = {}
    for src, pivots in src_to_pivot.entries.items():
        for pivot, w1 in pivots:
            for tgt, w2 in pivot_to_tgt.translations(pivot):
                targets = composed.setdefault(src, {})
                targets[tgt] = targets.get(tgt, 0.0) + w1 * w2
    return Lexicon(
        entries={
            src: sorted(targets.items(), key=lambda pair: (-pair[1], pair[0]))
            for src, targets in composed.items()
        },
        source_lang=src_to_pivot.source_lang,
        target_lang=pivot_to_tgt.target_lang,
    )


def select_ni_phrases(
    monolingual: Iterable[Sequence[str]],
    bilingual_src: Iterable[Sequence[str]],
    n_max: int = 4,
    top_n: int = 100,
) -> list[tuple[tuple[str, ...], int]]:
    """Frequent monolingual phrases absent from the bilingual data.

    Candidates are n-grams up to n_max never seen in bilingual_src. A
    candidate contiguously contained in a retained longer candidate is
    dropped (longest candidates are decided first); survivors are returned
    by frequency descending, ties lexicographic, truncated to top_n.
    """
    counts: Counter[tuple[str, ...]] = Counter()
    for sentence in monolingual:
        for ngram, _ in extract_ngrams(sentence, n_max):
            counts[ngram] += 1
    known: set[tuple[str, ...]] = set()
    for sentence in bilingual_src:
        for ngram, _ in extract_ngrams(sentence, n_max):
            known.add(ngram)

    candidates = [g for g in counts if g not in known]
    candidates.sort(key=lambda g: (-len(g), -counts[g], g))
    retained: list[tuple[str, ...]] = []
    for gram in candidates:
        subsumed = any(
            len(longer) > len(gram)
            and any(
                longer[i : i + len(gram)] == gram
                for i in range(len(longer) - len(gram) + 1)
            )
            for longer in retained
        )
        if not subsumed:
            retained.append(gram)
    retained.sort(key=lambda g: (-counts[g], g))
    return [(gram, counts[gram]) for gram in retained[: max(top_n, 0)]]
