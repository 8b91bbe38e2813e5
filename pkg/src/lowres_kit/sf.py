"""Keyword-based situation-frame detection.

The pipeline induces per-type keyword lists from labeled English data,
tags incident-language sentences by summed keyword confidence, filters the
predictions statistically, attaches locations, and emits one frame per
(document, type).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from statistics import fmean, pstdev
from typing import Iterable, Mapping, Sequence

from .errors import EmptyClass
from .relevance import build_df_table

__all__ = [
    "SF_TYPES",
    "KeywordEntry",
    "SentencePrediction",
    "LocationMention",
    "SituationFrame",
    "candidate_keywords",
    "expand_keywords",
    "filter_by_affinity",
    "tag_sentences",
    "filter_mean_std",
    "filter_topk_per_doc",
    "assign_locations",
    "finalize_frames",
]

# Canonical type order; doubles as the deterministic tie-break.
SF_TYPES: tuple[str, ...] = (
    "evac",
    "food",
    "infra",
    "med",
    "search",
    "shelter",
    "utils",
    "water",
    "crimeviolence",
    "regimechange",
    "terrorism",
)
_SF_RANK = {t: i for i, t in enumerate(SF_TYPES)}


@dataclass(frozen=True)
class KeywordEntry:
    keyword: str
    sf_type: str
    confidence: float


@dataclass(frozen=True)
class SentencePrediction:
    doc_id: str
    seg_id: int
    sf_type: str
    score: float
    matched: tuple[str, ...] = ()


@dataclass(frozen=True)
class LocationMention:
    doc_id: str
    seg_id: int
    start: int
    place: str  # kb_id or NIL cluster id


@dataclass(frozen=True)
class SituationFrame:
    doc_id: str
    sf_type: str
    place: str
    justification_seg: int
    status: str = "current"
    resolution: str = "insufficient"
    urgency: bool | None = None

    def to_record(self) -> dict:
        record = {
            "doc_id": self.doc_id,
            "type": self.sf_type,
            "place_kb_id": self.place,
            "justification_seg": self.justification_seg,
            "status": self.status,
            "resolution": self.resolution,
        }
        if self.urgency is not None:
            record["urgency"] = self.urgency
        return record


def candidate_keywords(
    labeled_corpus: Mapping[str, Sequence[Sequence[str]]],
    top_n: int = 100,
) -> dict[str, list[tuple[str, float]]]:
    """Per-type keyword candidates by TF-IDF.

    TF counts over the type's concatenated documents; DF counts documents
    across the whole labeled corpus, IDF being 1/DF. Ties break
    lexicographically.
    """
    for sf_type, docs in labeled_corpus.items():
        if not docs:
            raise EmptyClass(f"no documents for type {sf_type!r}")
    all_docs = [doc for docs in labeled_corpus.values() for doc in docs]
    table = build_df_table(all_docs)
    out: dict[str, list[tuple[str, float]]] = {}
    for sf_type, docs in labeled_corpus.items():
        tf = Counter(token for doc in docs for token in doc)
        scored = [
            (word, count / table.df[table.vocab[word]]) for word, count in tf.items()
        ]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        out[sf_type] = scored[: max(top_n, 0)]
    return out


def expand_keywords(
    candidates: Mapping[str, Sequence[tuple[str, float]]],
    neighbor_file: Mapping[str, Sequence[tuple[str, float]]],
    max_neighbors: int = 30,
    min_cos: float = 0.70,
) -> dict[str, list[tuple[str, float]]]:
    """Append distributional neighbors to each candidate list.

    Each candidate contributes up to max_neighbors neighbors with cosine
    strictly above min_cos. Per type, duplicates keep the best provenance
    cosine; original candidates carry provenance 1.0.
    """
    out: dict[str, list[tuple[str, float]]] = {}
    for sf_type, words in candidates.items():
        seen: dict[str, float] = {}
        for word, _ in words:
            seen[word] = 1.0
        for word, _ in words:
            added = 0
            for neighbor, cos in neighbor_file.get(word, []):
                if cos <= min_cos:
                    break
                if cos > seen.get(neighbor, 0.0):
                    seen[neighbor] = cos
                added += 1
                if added >= max_neighbors:
                    break
        out[sf_type] = list(seen.items())
    return out


def filter_by_affinity(
    expanded: Mapping[str, Sequence[tuple[str, float]]],
    label_affinity: Mapping[tuple[str, str], float],
    th1: float = 0.8,
) -> list[KeywordEntry]:
    """Retain (word, type) pairs whose label affinity reaches th1.

    The comparison is inclusive: affinity exactly equal to th1 is kept.
    The affinity becomes the keyword's confidence.
    """
    entries: list[KeywordEntry] = []
    for sf_type, words in expanded.items():
        for word, _ in words:
            affinity = label_affinity.get((word, sf_type))
            if affinity is not None and affinity >= th1:
                entries.append(KeywordEntry(word, sf_type, affinity))
    return entries


def tag_sentences(
    corpus: Iterable[tuple[str, int, Sequence[str]]],
    keywords: Sequence[KeywordEntry],
    lemmas: Mapping[str, str] | None = None,
    top_t: int = 2,
) -> list[SentencePrediction]:
    """Score sentences by summed confidence of matched keywords.

    Matching is on lowercased tokens, plus their lemmas when a lemma map is
    supplied. Each sentence emits its top_t types with positive score,
    canonical type order breaking ties.
    """
    index: dict[str, dict[str, float]] = {}
    for entry in keywords:
        by_type = index.setdefault(entry.keyword, {})
        if entry.confidence > by_type.get(entry.sf_type, 0.0):
            by_type[entry.sf_type] = entry.confidence

    predictions: list[SentencePrediction] = []
    for doc_id, seg_id, tokens in corpus:
        forms = {t.lower() for t in tokens}
        if lemmas:
            forms |= {lemmas[f] for f in forms if f in lemmas}
        scores: dict[str, float] = {}
        matched: dict[str, list[str]] = {}
        for form in sorted(forms & index.keys()):
            for sf_type, confidence in index[form].items():
                scores[sf_type] = scores.get(sf_type, 0.0) + confidence
                matched.setdefault(sf_type, []).append(form)
        ranked = sorted(
            (t for t in scores if scores[t] > 0.0),
            key=lambda t: (-scores[t], _SF_RANK.get(t, 99)),
        )
        for sf_type in ranked[: max(top_t, 0)]:
            predictions.append(
                SentencePrediction(
                    doc_id, seg_id, sf_type, scores[sf_type], tuple(matched[sf_type])
                )
            )
    return predictions


def filter_mean_std(
    predictions: Sequence[SentencePrediction], lambda_: float = -1.5
) -> list[SentencePrediction]:
    """Drop predictions scoring below mean + lambda * population std of
    their type."""
    by_type: dict[str, list[float]] = {}
    for prediction in predictions:
        by_type.setdefault(prediction.sf_type, []).append(prediction.score)
    thresholds = {
        sf_type: fmean(scores) + lambda_ * pstdev(scores)
        for sf_type, scores in by_type.items()
    }
    return [p for p in predictions if p.score >= thresholds[p.sf_type]]


def filter_topk_per_doc(
    predictions: Sequence[SentencePrediction],
    cap: int = 3,
    sentence_counts: Mapping[str, int] | None = None,
) -> list[SentencePrediction]:
    """Keep the k = min(cap, S) best types per document, then re-filter.

    S is the document's sentence count when sentence_counts is given,
    otherwise the number of distinct predicted segments. Survivors pass
    through the mean-std filter at lambda = 0.
    """
    docs: dict[str, list[SentencePrediction]] = {}
    for prediction in predictions:
        docs.setdefault(prediction.doc_id, []).append(prediction)
    kept: list[SentencePrediction] = []
    for doc_id, doc_predictions in docs.items():
        if sentence_counts is not None:
            n_sentences = sentence_counts.get(doc_id, 0)
        else:
            n_sentences = len({p.seg_id for p in doc_predictions})
        k = min(cap, n_sentences)
        best: dict[str, float] = {}
        for prediction in doc_predictions:
            if prediction.score > best.get(prediction.sf_type, 0.0):
                best[prediction.sf_type] = prediction.score
        top_types = set(
            sorted(best, key=lambda t: (-best[t], _SF_RANK.get(t, 99)))[: max(k, 0)]
        )
        kept.extend(p for p in doc_predictions if p.sf_type in top_types)
    if not kept:
        return []
    return filter_mean_std(kept, 0.0)


def assign_locations(
    predictions: Sequence[SentencePrediction],
    location_mentions: Iterable[LocationMention],
    n_window: float = 1,
) -> list[tuple[SentencePrediction, str | None]]:
    """Attach a place to each prediction.

    The nearest GPE/LOC mention within n_window segments wins (distance,
    then earlier segment, then leftmost start). Without one, the place of
    the most recent earlier frame in the same document is reused. Pass
    math.inf for an unbounded window.
    """
    if n_window < 0:
        raise ValueError("n_window must be >= 0")
    mentions_by_doc: dict[str, list[LocationMention]] = {}
    for mention in location_mentions:
        mentions_by_doc.setdefault(mention.doc_id, []).append(mention)
    for doc_mentions in mentions_by_doc.values():
        doc_mentions.sort(key=lambda m: (m.seg_id, m.start))

    doc_order: list[str] = []
    by_doc: dict[str, list[SentencePrediction]] = {}
    for prediction in predictions:
        if prediction.doc_id not in by_doc:
            doc_order.append(prediction.doc_id)
        by_doc.setdefault(prediction.doc_id, []).append(prediction)

    placed: list[tuple[SentencePrediction, str | None]] = []
    for doc_id in doc_order:
        doc_predictions = sorted(
            by_doc[doc_id], key=lambda p: (p.seg_id, _SF_RANK.get(p.sf_type, 99))
        )
        doc_mentions = mentions_by_doc.get(doc_id, [])
        last_place: str | None = None
        for prediction in doc_predictions:
            nearby = [
                m
                for m in doc_mentions
                if abs(m.seg_id - prediction.seg_id) <= n_window
            ]
            if nearby:
                best = min(
                    nearby,
                    key=lambda m: (
                        abs(m.seg_id - prediction.seg_id),
                        m.seg_id,
                        m.start,
                    ),
                )
                place: str | None = best.place
            else:
                place = last_place
            if place is not None:
                last_place = place
            placed.append((prediction, place))
    return placed


def finalize_frames(
    placed: Sequence[tuple[SentencePrediction, str | None]],
    urgency: Mapping[tuple[str, str], bool] | None = None,
) -> list[SituationFrame]:
    """One frame per (doc, type), justified by its best-scoring sentence.

    Score ties prefer the earliest segment. Frames come out sorted by
    doc_id and canonical type order.
    """
    best: dict[tuple[str, str], tuple[SentencePrediction, str | None]] = {}
    for prediction, place in placed:
        key = (prediction.doc_id, prediction.sf_type)
        current = best.get(key)
        if current is None or (-prediction.score, prediction.seg_id) < (
            -current[0].score,
            current[0].seg_id,
        ):
            best[key] = (prediction, place)
    frames = [
        SituationFrame(
            doc_id=prediction.doc_id,
            sf_type=prediction.sf_type,
            place=place or "",
            justification_seg=prediction.seg_id,
            urgency=None if urgency is None else urgency.get((prediction.doc_id, prediction.sf_type)),
        )
        for (prediction, place) in best.values()
    ]
    frames.sort(key=lambda f: (f.doc_id, _SF_RANK.get(f.sf_type, 99)))
    return frames
