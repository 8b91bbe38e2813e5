"""File formats: loaders and writers for every corpus artifact.

All readers accept UTF-8 only; all writers emit deterministic bytes (sorted
JSON keys, repr floats) so identical inputs always give identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Document, Genre
from .errors import SchemaViolation
from .lexicon import Lexicon
from .linking import KbEntry, LinkResult
from .parallel import FilterModel, SentencePair
from .sf import SF_TYPES, KeywordEntry, SituationFrame
from .active import SpanCandidate

__all__ = [
    "load_corpus_jsonl",
    "load_terms_tsv",
    "load_lexicon_tsv",
    "load_wordlist",
    "load_gazetteer_tsv",
    "write_conll",
    "read_conll",
    "load_kb_tsv",
    "write_edl_tsv",
    "read_edl_tsv",
    "load_keywords_tsv",
    "write_keywords_tsv",
    "load_neighbors_tsv",
    "load_affinity_tsv",
    "load_lemmas_tsv",
    "load_urgency_tsv",
    "write_frames_jsonl",
    "load_marginals_jsonl",
    "write_spans_tsv",
    "load_parallel_tsv",
    "write_parallel_tsv",
    "load_pair_spans_tsv",
    "load_model_json",
    "write_model_json",
]


def _lines(path: str | Path) -> Iterable[tuple[int, str]]:
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if line:
                yield number, line


def load_corpus_jsonl(path: str | Path) -> list[Document]:
    documents = []
    for number, line in _lines(path):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid JSON: {exc}", line=number) from exc
        if "doc_id" not in record or "segments" not in record:
            raise SchemaViolation("document needs doc_id and segments", line=number)
        documents.append(
            Document(
                doc_id=str(record["doc_id"]),
                genre=Genre.parse(str(record.get("genre", "OTHER"))),
                segments=[str(s) for s in record["segments"]],
            )
        )
    return documents


def load_terms_tsv(path: str | Path) -> list[tuple[str, float]]:
    """Relevant-term rows `term<TAB>freq?`; missing frequency defaults to 1."""
    terms = []
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) == 1:
            terms.append((cols[0], 1.0))
        elif len(cols) == 2:
            try:
                terms.append((cols[0], float(cols[1])))
            except ValueError as exc:
                raise SchemaViolation(f"bad frequency {cols[1]!r}", line=number) from exc
        else:
            raise SchemaViolation("expected 1 or 2 columns", line=number)
    return terms


def load_lexicon_tsv(
    path: str | Path, source_lang: str = "", target_lang: str = ""
) -> Lexicon:
    """Lexicon rows `src<TAB>tgt<TAB>weight?`; missing weight defaults to 1."""
    pairs = []
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) == 2:
            pairs.append((cols[0], cols[1], 1.0))
        elif len(cols) == 3:
            try:
                pairs.append((cols[0], cols[1], float(cols[2])))
            except ValueError as exc:
                raise SchemaViolation(f"bad weight {cols[2]!r}", line=number) from exc
        else:
            raise SchemaViolation("expected 2 or 3 columns", line=number)
    return Lexicon.from_pairs(pairs, source_lang, target_lang)


def load_wordlist(path: str | Path) -> list[str]:
    return [line.strip() for _, line in _lines(path) if line.strip()]


def load_gazetteer_tsv(path: str | Path) -> list[tuple[str, str, str | None]]:
    """Raw gazetteer rows `surface<TAB>TYPE<TAB>kb_id?`."""
    rows = []
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) == 2:
            rows.append((cols[0], cols[1], None))
        elif len(cols) == 3:
            rows.append((cols[0], cols[1], cols[2] or None))
        else:
            raise SchemaViolation("expected 2 or 3 columns", line=number)
    return rows


def write_conll(
    path: str | Path,
    segments: Iterable[tuple[Sequence[str], Sequence[str]]],
) -> None:
    """Two-column token<TAB>tag blocks separated by blank lines."""
    with open(path, "w", encoding="utf-8") as handle:
        first = True
        for tokens, tags in segments:
            if len(tokens) != len(tags):
                raise ValueError("token/tag length mismatch")
            if not first:
                handle.write("\n")
            first = False
            for token, tag in zip(tokens, tags):
                handle.write(f"{token}\t{tag}\n")


def read_conll(path: str | Path) -> list[tuple[list[str], list[str]]]:
    segments: list[tuple[list[str], list[str]]] = []
    tokens: list[str] = []
    tags: list[str] = []
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                if tokens:
                    segments.append((tokens, tags))
                    tokens, tags = [], []
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise SchemaViolation("expected token<TAB>tag", line=number)
            tokens.append(cols[0])
            tags.append(cols[1])
    if tokens:
        segments.append((tokens, tags))
    return segments


def load_kb_tsv(path: str | Path) -> list[KbEntry]:
    """KB rows: kb_id, type, name, ascii_name, alternate_names(|), country, population."""
    entries = []
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) != 7:
            raise SchemaViolation(f"expected 7 columns, got {len(cols)}", line=number)
        kb_id, entity_type, name, ascii_name, alternates, country, population = cols
        try:
            entries.append(
                KbEntry(
                    kb_id=kb_id,
                    entity_type=entity_type,
                    name=name,
                    ascii_name=ascii_name,
                    alternate_names=tuple(a for a in alternates.split("|") if a),
                    country_code=country,
                    population=int(population) if population else 0,
                )
            )
        except ValueError as exc:
            raise SchemaViolation(str(exc), line=number) from exc
    return entries


def write_edl_tsv(path: str | Path, results: Sequence[LinkResult]) -> None:
    """EDL rows: doc_id, mention_id, surface, span, kb_id_or_NIL, type, confidence."""
    with open(path, "w", encoding="utf-8") as handle:
        for i, result in enumerate(results, start=1):
            mention = result.mention
            span = f"{mention.seg_id}:{mention.span[0]}-{mention.span[1]}"
            handle.write(
                "\t".join(
                    (
                        mention.doc_id,
                        f"M{i:05d}",
                        mention.surface,
                        span,
                        result.link_id,
                        mention.entity_type,
                        repr(result.score),
                    )
                )
                + "\n"
            )


def read_edl_tsv(path: str | Path) -> list[dict]:
    """EDL rows as dicts with parsed span fields."""
    rows = []
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) != 7:
            raise SchemaViolation(f"expected 7 columns, got {len(cols)}", line=number)
        doc_id, mention_id, surface, span, link_id, entity_type, confidence = cols
        try:
            seg_part, range_part = span.split(":")
            start, end = range_part.split("-")
            rows.append(
                {
                    "doc_id": doc_id,
                    "mention_id": mention_id,
                    "surface": surface,
                    "seg_id": int(seg_part),
                    "start": int(start),
                    "end": int(end),
                    "link_id": link_id,
                    "entity_type": entity_type,
                    "confidence": float(confidence),
                }
            )
        except ValueError as exc:
            raise SchemaViolation(f"bad span/confidence: {exc}", line=number) from exc
    return rows


def load_keywords_tsv(path: str | Path) -> list[KeywordEntry]:
    entries = []
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) != 3:
            raise SchemaViolation("expected keyword, sf_type, confidence", line=number)
        if cols[1] not in SF_TYPES:
            raise SchemaViolation(f"unknown SF type {cols[1]!r}", line=number)
        try:
            entries.append(KeywordEntry(cols[0], cols[1], float(cols[2])))
        except ValueError as exc:
            raise SchemaViolation(f"bad confidence {cols[2]!r}", line=number) from exc
    return entries


def write_keywords_tsv(path: str | Path, entries: Sequence[KeywordEntry]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(f"{entry.keyword}\t{entry.sf_type}\t{entry.confidence!r}\n")


def load_neighbors_tsv(path: str | Path) -> dict[str, list[tuple[str, float]]]:
    """Neighbor rows `word<TAB>neighbor<TAB>cosine`, file order preserved."""
    neighbors: dict[str, list[tuple[str, float]]] = {}
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) != 3:
            raise SchemaViolation("expected word, neighbor, cosine", line=number)
        try:
            neighbors.setdefault(cols[0], []).append((cols[1], float(cols[2])))
        except ValueError as exc:
            raise SchemaViolation(f"bad cosine {cols[2]!r}", line=number) from exc
    return neighbors


def load_affinity_tsv(path: str | Path) -> dict[tuple[str, str], float]:
    affinity: dict[tuple[str, str], float] = {}
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) != 3:
            raise SchemaViolation("expected word, sf_type, cosine", line=number)
        try:
            affinity[(cols[0], cols[1])] = float(cols[2])
        except ValueError as exc:
            raise SchemaViolation(f"bad cosine {cols[2]!r}", line=number) from exc
    return affinity


def load_lemmas_tsv(path: str | Path) -> dict[str, str]:
    lemmas: dict[str, str] = {}
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) != 2:
            raise SchemaViolation("expected word<TAB>lemma", line=number)
        lemmas[cols[0].lower()] = cols[1].lower()
    return lemmas


def load_urgency_tsv(path: str | Path) -> dict[tuple[str, str], bool]:
    urgency: dict[tuple[str, str], bool] = {}
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) != 3 or cols[2] not in ("true", "false"):
            raise SchemaViolation("expected doc_id, sf_type, true|false", line=number)
        urgency[(cols[0], cols[1])] = cols[2] == "true"
    return urgency


def write_frames_jsonl(path: str | Path, frames: Sequence[SituationFrame]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for frame in frames:
            handle.write(
                json.dumps(frame.to_record(), ensure_ascii=False, sort_keys=True) + "\n"
            )


def load_marginals_jsonl(
    path: str | Path,
) -> list[tuple[str, int, list[dict[str, float]]]]:
    """Marginal rows {doc_id, seg_id, tokens: [{surface, probs}]}, validated."""
    sentences = []
    for number, line in _lines(path):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid JSON: {exc}", line=number) from exc
        try:
            doc_id = str(record["doc_id"])
            seg_id = int(record["seg_id"])
            tokens = record["tokens"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"bad marginal record: {exc}", line=number) from exc
        marginals: list[dict[str, float]] = []
        for token in tokens:
            probs = {str(k): float(v) for k, v in token["probs"].items()}
            if any(p < 0.0 for p in probs.values()):
                raise SchemaViolation("negative probability", line=number)
            total = sum(probs.values())
            if abs(total - 1.0) > 1e-6:
                raise SchemaViolation(
                    f"probabilities sum to {total!r}, expected 1", line=number
                )
            marginals.append(probs)
        sentences.append((doc_id, seg_id, marginals))
    return sentences


def write_spans_tsv(path: str | Path, spans: Sequence[SpanCandidate]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for span in spans:
            handle.write(
                f"{span.doc_id}\t{span.seg_id}\t{span.start}\t{span.end}\t{span.entropy!r}\n"
            )


def load_parallel_tsv(path: str | Path) -> list[SentencePair]:
    """Parallel rows `src<TAB>tgt`, both sides whitespace-tokenized."""
    pairs = []
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) != 2:
            raise SchemaViolation("expected src<TAB>tgt", line=number)
        pairs.append(
            SentencePair.of(cols[0].split(), cols[1].split(), index=len(pairs))
        )
    return pairs


def write_parallel_tsv(path: str | Path, pairs: Sequence[SentencePair]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            handle.write(" ".join(pair.src) + "\t" + " ".join(pair.tgt) + "\n")


def load_pair_spans_tsv(
    path: str | Path, n_pairs: int
) -> list[list[tuple[tuple[int, int], tuple[int, int]]]]:
    """Entity-span rows `pair_index s0 s1 t0 t1` grouped per pair."""
    spans: list[list[tuple[tuple[int, int], tuple[int, int]]]] = [
        [] for _ in range(n_pairs)
    ]
    for number, line in _lines(path):
        cols = line.split("\t")
        if len(cols) != 5:
            raise SchemaViolation("expected pair_index, s0, s1, t0, t1", line=number)
        try:
            index, s0, s1, t0, t1 = (int(c) for c in cols)
        except ValueError as exc:
            raise SchemaViolation(f"bad integer: {exc}", line=number) from exc
        if not 0 <= index < n_pairs:
            raise SchemaViolation(f"pair index {index} out of range", line=number)
        spans[index].append(((s0, s1), (t0, t1)))
    return spans


def load_model_json(path: str | Path) -> FilterModel:
    with open(path, encoding="utf-8") as handle:
        record = json.load(handle)
    return FilterModel(
        weights=[float(w) for w in record["weights"]],
        bias=float(record["bias"]),
        feature_names=tuple(record["feature_names"]),
    )


def write_model_json(path: str | Path, model: FilterModel) -> None:
    record = {
        "feature_names": list(model.feature_names),
        "weights": model.weights,
        "bias": model.bias,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(record, handle, ensure_ascii=False, sort_keys=True, indent=2)
        handle.write("\n")
