"""End-to-end recipes wiring the modules into reproducible batch runs.

Each recipe is a pure function of (input files, config, seed): outputs and
the run manifest are byte-identical across repeated runs and across worker
counts. The manifest records the config hash, input hashes, parameters,
stage counts, and output hashes.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence

from . import __version__
from . import formats
from .active import select_uncertain_spans
from .config import PipelineConfig
from .corpus import Document, Genre, surfaces
from .errors import ConfigError, LowresKitError
from .gazetteer import (
    Gazetteer,
    mark_unknown_capitalized,
    normalize_gazetteer,
    propagate_documents,
    propagate_edit_distance,
    propagate_gazetteer,
    spans_of,
)
from .lexicon import Lexicon
from .linking import KbEntry, LinkResult, Mention, cluster_nil, link_mention, prune_kb
from .parallel import (
    SentencePair,
    augment_with_entities,
    dnt_tag,
    filter_parallel,
    make_noisy_training,
    pair_features,
    realign_document,
    select_ni_phrases,
    train_filter,
)
from .relevance import (
    GenreRatio,
    HeuristicWeights,
    build_df_table,
    rank_by_relevance,
    score_sentence_heuristic,
    select_with_genre_ratio,
)
from .sf import (
    KeywordEntry,
    LocationMention,
    SentencePrediction,
    SituationFrame,
    assign_locations,
    candidate_keywords,
    expand_keywords,
    filter_by_affinity,
    filter_mean_std,
    filter_topk_per_doc,
    finalize_frames,
    tag_sentences,
)

__all__ = [
    "RECIPES",
    "StageError",
    "run_recipe",
    "workers_from_env",
    "corpus_sentences",
    "build_gazetteer",
    "tag_corpus",
    "link_corpus",
    "load_labeled_corpus",
    "build_sf_frames",
    "select_spans_from_file",
    "location_mentions_from_edl",
]

RECIPES: tuple[str, ...] = ("ner-data", "edl", "mt-data", "sf")


class StageError(LowresKitError):
    """A recipe stage failed; the message names the stage."""


@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except (StageError, ConfigError):
        raise
    except Exception as exc:
        raise StageError(f"stage {name}: {exc}") from exc


def workers_from_env() -> int:
    """Parallelism cap from LOWRES_THREADS, defaulting to 1."""
    raw = os.environ.get("LOWRES_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


class _Manifest:
    def __init__(self, recipe: str, config: PipelineConfig):
        self.record: dict[str, Any] = {
            "recipe": recipe,
            "version": __version__,
            "config_sha256": hashlib.sha256(config.source_bytes).hexdigest(),
            "inputs": {},
            "params": {},
            "counts": {},
            "outputs": {},
        }

    def input(self, key: str, path: Path | None) -> None:
        if path is not None:
            self.record["inputs"][key] = {
                "path": str(path),
                "sha256": _sha256_file(path),
            }

    def param(self, key: str, value: Any) -> None:
        self.record["params"][key] = value

    def count(self, key: str, value: int) -> None:
        self.record["counts"][key] = value

    def output(self, path: Path) -> None:
        self.record["outputs"][path.name] = _sha256_file(path)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.record, handle, ensure_ascii=False, sort_keys=True, indent=2)
            handle.write("\n")
        return path


def corpus_sentences(
    documents: Sequence[Document],
) -> list[tuple[str, int, Genre, list[str]]]:
    """Flatten documents to (doc_id, seg_id, genre, tokens) rows."""
    sentences = []
    for document in documents:
        for seg_id, tokens in enumerate(document.tokenized()):
            sentences.append((document.doc_id, seg_id, document.genre, surfaces(tokens)))
    return sentences


def _out_dir(config: PipelineConfig, section: str) -> Path:
    out_dir = config.path(section, "out_dir")
    if out_dir is None:
        raise ConfigError(f"missing field {section}.out_dir")
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _genre_ratio(section_data: Mapping[str, Any]) -> GenreRatio | None:
    raw = section_data.get("ratio")
    if raw is None:
        return None
    return GenreRatio({Genre.parse(k): float(v) for k, v in raw.items()})


def run_recipe(name: str, config: PipelineConfig, workers: int | None = None) -> Path:
    """Run one recipe; returns the manifest path."""
    if workers is None:
        workers = workers_from_env()
    if name == "ner-data":
        return _run_ner_data(config, workers)
    if name == "edl":
        return _run_edl(config, workers)
    if name == "mt-data":
        return _run_mt_data(config, workers)
    if name == "sf":
        return _run_sf(config, workers)
    raise ConfigError(f"unknown recipe {name!r}; have {RECIPES}")


# ---------------------------------------------------------------------------
# Reusable stage cores (shared by recipes and the standalone CLI commands)


def build_gazetteer(
    rows: Sequence[tuple[str, str, str | None]],
    negatives: Sequence[str],
    vocabulary: Sequence[str] | None = None,
    min_edit_dist: int = 0,
) -> tuple[Gazetteer, int]:
    """Normalized gazetteer, optionally grown by near-miss vocabulary words.

    Returns the gazetteer and the number of edit-distance additions.
    """
    gazetteer = normalize_gazetteer(rows, negatives)
    added = 0
    if min_edit_dist and vocabulary is not None:
        additions = propagate_edit_distance(
            sorted(set(vocabulary)), gazetteer, min_edit_dist
        )
        gazetteer = gazetteer.extended(additions)
        added = len(additions)
    return gazetteer, added


def tag_corpus(
    sentences: Sequence[tuple[str, Sequence[str]]],
    gazetteer: Gazetteer,
    window: int = 5,
    doc_propagate: bool = True,
    mark_unknown: bool = False,
) -> list[tuple[Sequence[str], list[str]]]:
    """Tag (doc_id, tokens) rows; output stays parallel to the input order."""
    tagged: list[tuple[Sequence[str], list[str]]] = [
        (tokens, propagate_gazetteer(tokens, gazetteer, window))
        for _, tokens in sentences
    ]
    if doc_propagate:
        grouped: dict[str, list[int]] = {}
        for i, (doc_id, _) in enumerate(sentences):
            grouped.setdefault(doc_id, []).append(i)
        corpus = [[tagged[i] for i in indices] for indices in grouped.values()]
        propagated = propagate_documents(corpus)
        for doc_sentences, indices in zip(propagated, grouped.values()):
            for (tokens, tags), i in zip(doc_sentences, indices):
                tagged[i] = (tokens, tags)
    if mark_unknown:
        tagged = [
            (tokens, mark_unknown_capitalized(tags, tokens, gazetteer.negatives))
            for tokens, tags in tagged
        ]
    return tagged


def link_corpus(
    documents: Sequence[Document],
    gazetteer: Gazetteer,
    kb: Sequence[KbEntry],
    lexicons: Sequence[Lexicon],
    window: int = 5,
    threshold: float = 0.5,
    population_floor: int = 50000,
    gpe_loc_compatible: bool = True,
    incident_countries: set[str] | frozenset[str] = frozenset(),
    neighbor_countries: set[str] | frozenset[str] = frozenset(),
    k_per_token: int = 3,
    cap: int = 64,
) -> tuple[list[LinkResult], int]:
    """Tag, link, and NIL-cluster a corpus.

    Returns the clustered results and the pruned-KB size.
    """
    mentions: list[Mention] = []
    for doc_id, seg_id, _, tokens in corpus_sentences(documents):
        tags = propagate_gazetteer(tokens, gazetteer, window)
        for start, end, entity_type in spans_of(tags):
            mentions.append(
                Mention(
                    doc_id=doc_id,
                    seg_id=seg_id,
                    span=(start, end),
                    surface=" ".join(tokens[start:end]),
                    entity_type=entity_type,
                )
            )
    pruned = prune_kb(
        kb, set(incident_countries), set(neighbor_countries), population_floor
    )
    results = [
        link_mention(
            mention,
            pruned,
            lexicons,
            threshold=threshold,
            gpe_loc_compatible=gpe_loc_compatible,
            k_per_token=k_per_token,
            cap=cap,
        )
        for mention in mentions
    ]
    return cluster_nil(results), len(pruned)


def load_labeled_corpus(path: str | Path) -> dict[str, list[list[str]]]:
    """Keyword-training corpus: JSONL documents carrying an sf_type field."""
    labeled: dict[str, list[list[str]]] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            document = Document(
                doc_id=str(record.get("doc_id", "")),
                genre=Genre.OTHER,
                segments=[str(s) for s in record["segments"]],
            )
            tokens = [
                t.surface.lower()
                for sentence in document.tokenized()
                for t in sentence
            ]
            labeled.setdefault(str(record["sf_type"]), []).append(tokens)
    return labeled


def build_sf_frames(
    documents: Sequence[Document],
    keywords: Sequence[KeywordEntry],
    lemmas: Mapping[str, str] | None = None,
    top_t: int = 2,
    lambda_: float = -1.5,
    topk_cap: int = 3,
    location_mentions: Sequence[LocationMention] = (),
    location_window: float = 1,
    urgency: Mapping[tuple[str, str], bool] | None = None,
) -> tuple[list[SituationFrame], list[SentencePrediction]]:
    """Keyword-tag a corpus and reduce predictions to situation frames.

    Returns the frames and the post-filter sentence predictions.
    """
    sentence_counts = {d.doc_id: len(d.segments) for d in documents}
    corpus = [
        (doc_id, seg_id, tokens)
        for doc_id, seg_id, _, tokens in corpus_sentences(documents)
    ]
    predictions = tag_sentences(corpus, keywords, lemmas, top_t)
    if predictions:
        predictions = filter_mean_std(predictions, lambda_)
        predictions = filter_topk_per_doc(predictions, topk_cap, sentence_counts)
    placed = assign_locations(predictions, location_mentions, location_window)
    return finalize_frames(placed, urgency), predictions


def select_spans_from_file(
    marginals_path: str | Path,
    budget: int,
    max_span_len: int = 5,
    max_per_sentence: int = 1,
):
    sentences = formats.load_marginals_jsonl(marginals_path)
    return select_uncertain_spans(sentences, budget, max_span_len, max_per_sentence)


# ---------------------------------------------------------------------------
# ner-data: select -> propagate -> edit-propagate -> doc-propagate -> CoNLL


def _run_ner_data(config: PipelineConfig, workers: int) -> Path:
    section = "ner_data"
    config.require(section, ["corpus", "gazetteer", "out_dir"], ["corpus", "gazetteer", "negatives", "terms"])
    out_dir = _out_dir(config, section)
    manifest = _Manifest("ner-data", config)
    for key in ("corpus", "gazetteer", "negatives", "terms"):
        manifest.input(key, config.path(section, key))

    with _stage("load"):
        documents = formats.load_corpus_jsonl(config.path(section, "corpus"))
        sentences = corpus_sentences(documents)
        gazetteer_rows = formats.load_gazetteer_tsv(config.path(section, "gazetteer"))
        negatives_path = config.path(section, "negatives")
        negatives = formats.load_wordlist(negatives_path) if negatives_path else []

    budget = int(config.get(section, "budget", 0))
    manifest.param("budget", budget)
    with _stage("select"):
        if budget:
            table = build_df_table([tokens for _, _, _, tokens in sentences])
            terms_path = config.path(section, "terms")
            if terms_path:
                terms = formats.load_terms_tsv(terms_path)
                scores = dict(
                    rank_by_relevance(
                        [tokens for _, _, _, tokens in sentences], terms, table, workers
                    )
                )
            else:
                weights = HeuristicWeights(1.0, 0.0, 0.0, 0.0)
                scores = {
                    i: score_sentence_heuristic(tokens, table, weights=weights)
                    for i, (_, _, _, tokens) in enumerate(sentences)
                }
            ratio = _genre_ratio(config.section(section))
            scored = [
                (i, genre, scores[i]) for i, (_, _, genre, _) in enumerate(sentences)
            ]
            if ratio is None:
                ordered = sorted(scored, key=lambda item: (-item[2], item[0]))
                selected = sorted(i for i, _, _ in ordered[:budget])
            else:
                selected = sorted(select_with_genre_ratio(scored, ratio, budget))
            sentences = [sentences[i] for i in selected]
    manifest.count("sentences", len(sentences))

    window = int(config.get(section, "window"))
    edit_propagate = bool(config.section(section).get("edit_propagate", True))
    min_edit_dist = int(config.get(section, "min_edit_dist")) if edit_propagate else 0
    doc_propagate = bool(config.section(section).get("doc_propagate", True))
    mark_unknown = bool(config.section(section).get("mark_unknown", False))
    manifest.param("window", window)
    manifest.param("min_edit_dist", min_edit_dist)
    manifest.param("doc_propagate", doc_propagate)
    manifest.param("mark_unknown", mark_unknown)

    with _stage("gazetteer"):
        vocabulary = [t for _, _, _, tokens in sentences for t in tokens]
        gazetteer, added = build_gazetteer(
            gazetteer_rows, negatives, vocabulary, min_edit_dist
        )
        manifest.count("edit_distance_entries", added)
    manifest.count("gazetteer_entries", len(gazetteer.entries))

    with _stage("propagate"):
        tagged = tag_corpus(
            [(doc_id, tokens) for doc_id, _, _, tokens in sentences],
            gazetteer,
            window,
            doc_propagate,
            mark_unknown,
        )

    manifest.count("entities", sum(len(spans_of(tags)) for _, tags in tagged))
    with _stage("write"):
        out_path = out_dir / "tagged.conll"
        formats.write_conll(out_path, tagged)
        manifest.output(out_path)
    return manifest.write(out_dir)


# ---------------------------------------------------------------------------
# edl: tag -> prune -> link -> cluster -> EDL TSV


def _run_edl(config: PipelineConfig, workers: int) -> Path:
    del workers
    section = "edl"
    config.require(
        section,
        ["corpus", "gazetteer", "kb", "out_dir"],
        ["corpus", "gazetteer", "kb", "negatives", "lexicon"],
    )
    out_dir = _out_dir(config, section)
    manifest = _Manifest("edl", config)
    for key in ("corpus", "gazetteer", "kb", "negatives"):
        manifest.input(key, config.path(section, key))
    for i, path in enumerate(config.paths(section, "lexicon")):
        manifest.input(f"lexicon.{i}", path)

    with _stage("load"):
        documents = formats.load_corpus_jsonl(config.path(section, "corpus"))
        gazetteer_rows = formats.load_gazetteer_tsv(config.path(section, "gazetteer"))
        negatives_path = config.path(section, "negatives")
        negatives = formats.load_wordlist(negatives_path) if negatives_path else []
        gazetteer, _ = build_gazetteer(gazetteer_rows, negatives)
        kb = formats.load_kb_tsv(config.path(section, "kb"))
        lexicons = [formats.load_lexicon_tsv(p) for p in config.paths(section, "lexicon")]

    window = int(config.get(section, "window"))
    threshold = float(config.get(section, "link_threshold"))
    floor = int(config.get(section, "population_floor"))
    compatible = bool(config.section(section).get("gpe_loc_compatible", True))
    incident = set(config.section(section).get("incident_countries", []))
    neighbors = set(config.section(section).get("neighbor_countries", []))
    k_per_token = int(config.get(section, "k_per_token"))
    cap = int(config.get(section, "candidate_cap"))
    for key, value in (
        ("window", window),
        ("link_threshold", threshold),
        ("population_floor", floor),
        ("gpe_loc_compatible", compatible),
        ("incident_countries", sorted(incident)),
        ("neighbor_countries", sorted(neighbors)),
    ):
        manifest.param(key, value)

    with _stage("link"):
        results, pruned_size = link_corpus(
            documents,
            gazetteer,
            kb,
            lexicons,
            window=window,
            threshold=threshold,
            population_floor=floor,
            gpe_loc_compatible=compatible,
            incident_countries=incident,
            neighbor_countries=neighbors,
            k_per_token=k_per_token,
            cap=cap,
        )
    manifest.count("mentions", len(results))
    manifest.count("kb_entries", len(kb))
    manifest.count("kb_pruned", pruned_size)
    manifest.count("linked", sum(1 for r in results if r.method != "nil"))
    manifest.count("nil", sum(1 for r in results if r.method == "nil"))

    with _stage("write"):
        out_path = out_dir / "edl.tsv"
        formats.write_edl_tsv(out_path, results)
        manifest.output(out_path)
    return manifest.write(out_dir)


# ---------------------------------------------------------------------------
# mt-data: realign -> filter -> dnt -> augment -> ni-phrases


def _run_mt_data(config: PipelineConfig, workers: int) -> Path:
    del workers
    section = "mt_data"
    config.require(
        section,
        ["src_corpus", "tgt_corpus", "out_dir"],
        [
            "src_corpus",
            "tgt_corpus",
            "lexicon",
            "mono_corpus",
            "entity_lexicon",
            "entity_spans",
        ],
    )
    out_dir = _out_dir(config, section)
    manifest = _Manifest("mt-data", config)
    for key in ("src_corpus", "tgt_corpus", "lexicon", "mono_corpus", "entity_lexicon", "entity_spans"):
        manifest.input(key, config.path(section, key))

    swap_rate = float(config.get(section, "swap_rate"))
    threshold = float(config.get(section, "threshold"))
    seed = int(config.get(section, "seed"))
    epochs = int(config.get(section, "epochs"))
    lr = float(config.get(section, "lr"))
    l2 = float(config.get(section, "l2"))
    for key, value in (
        ("swap_rate", swap_rate),
        ("threshold", threshold),
        ("seed", seed),
        ("epochs", epochs),
        ("lr", lr),
        ("l2", l2),
    ):
        manifest.param(key, value)

    with _stage("load"):
        src_docs = formats.load_corpus_jsonl(config.path(section, "src_corpus"))
        tgt_docs = {d.doc_id: d for d in formats.load_corpus_jsonl(config.path(section, "tgt_corpus"))}
        lexicon_path = config.path(section, "lexicon")
        lexicon = formats.load_lexicon_tsv(lexicon_path) if lexicon_path else Lexicon()

    with _stage("realign"):
        pairs: list[SentencePair] = []
        for src_doc in src_docs:
            tgt_doc = tgt_docs.get(src_doc.doc_id)
            if tgt_doc is None or not src_doc.segments or not tgt_doc.segments:
                continue
            alignment = realign_document(src_doc.segments, tgt_doc.segments)
            src_tokens = [surfaces(t) for t in src_doc.tokenized()]
            tgt_tokens = [surfaces(t) for t in tgt_doc.tokenized()]
            for (s0, s1), (t0, t1) in alignment:
                if s0 == s1 or t0 == t1:
                    continue
                src = [t for i in range(s0, s1) for t in src_tokens[i]]
                tgt = [t for i in range(t0, t1) for t in tgt_tokens[i]]
                if src and tgt:
                    pairs.append(SentencePair.of(src, tgt, src_doc.doc_id, len(pairs)))
    manifest.count("pairs", len(pairs))

    with _stage("filter"):
        labeled = make_noisy_training(pairs, swap_rate, seed)
        features = [(pair_features(pair, lexicon), label) for pair, label in labeled]
        model = train_filter(features, l2=l2, epochs=epochs, lr=lr)
        kept, removed = filter_parallel(pairs, model, lexicon, threshold)
        model_path = out_dir / "model.json"
        formats.write_model_json(model_path, model)
        kept_path = out_dir / "kept.tsv"
        removed_path = out_dir / "removed.tsv"
        formats.write_parallel_tsv(kept_path, kept)
        formats.write_parallel_tsv(removed_path, removed)
        for path in (model_path, kept_path, removed_path):
            manifest.output(path)
    manifest.count("kept", len(kept))
    manifest.count("removed", len(removed))

    with _stage("dnt"):
        masked_path = out_dir / "masked_src.tsv"
        slots_path = out_dir / "dnt_slots.jsonl"
        with open(masked_path, "w", encoding="utf-8") as masked_handle, open(
            slots_path, "w", encoding="utf-8"
        ) as slots_handle:
            for pair in kept:
                mask = dnt_tag(pair.src)
                masked_handle.write(" ".join(mask.masked) + "\t" + " ".join(pair.tgt) + "\n")
                slots_handle.write(
                    json.dumps(mask.slots, ensure_ascii=False, sort_keys=True) + "\n"
                )
        manifest.output(masked_path)
        manifest.output(slots_path)

    entity_lexicon_path = config.path(section, "entity_lexicon")
    spans_path = config.path(section, "entity_spans")
    if entity_lexicon_path and spans_path:
        with _stage("augment"):
            entity_lexicon = formats.load_lexicon_tsv(entity_lexicon_path)
            spans = formats.load_pair_spans_tsv(spans_path, len(kept))
            n_copies = int(config.get(section, "n_copies"))
            manifest.param("n_copies", n_copies)
            augmented = augment_with_entities(kept, spans, entity_lexicon, n_copies, seed)
            augmented_path = out_dir / "augmented.tsv"
            formats.write_parallel_tsv(augmented_path, augmented)
            manifest.output(augmented_path)
            manifest.count("augmented", len(augmented))

    mono_path = config.path(section, "mono_corpus")
    if mono_path:
        with _stage("ni-phrases"):
            mono_docs = formats.load_corpus_jsonl(mono_path)
            mono = [tokens for _, _, _, tokens in corpus_sentences(mono_docs)]
            bilingual = [list(pair.src) for pair in kept]
            n_max = int(config.get(section, "ni_ngram_max"))
            top_n = int(config.get(section, "ni_top_n"))
            phrases = select_ni_phrases(mono, bilingual, n_max, top_n)
            phrases_path = out_dir / "ni_phrases.tsv"
            with open(phrases_path, "w", encoding="utf-8") as handle:
                for phrase, frequency in phrases:
                    handle.write(" ".join(phrase) + "\t" + str(frequency) + "\n")
            manifest.output(phrases_path)
            manifest.count("ni_phrases", len(phrases))

    return manifest.write(out_dir)


# ---------------------------------------------------------------------------
# sf: build-keywords -> tag -> filter -> locations -> frames JSONL


def location_mentions_from_edl(path: Path) -> list[LocationMention]:
    mentions = []
    for row in formats.read_edl_tsv(path):
        if row["entity_type"] in ("GPE", "LOC"):
            mentions.append(
                LocationMention(row["doc_id"], row["seg_id"], row["start"], row["link_id"])
            )
    return mentions


def _run_sf(config: PipelineConfig, workers: int) -> Path:
    del workers
    section = "sf"
    config.require(
        section,
        ["corpus", "out_dir"],
        ["corpus", "keywords", "labeled_corpus", "neighbors", "affinity", "lemmas", "edl", "urgency"],
    )
    out_dir = _out_dir(config, section)
    manifest = _Manifest("sf", config)
    for key in ("corpus", "keywords", "labeled_corpus", "neighbors", "affinity", "lemmas", "edl", "urgency"):
        manifest.input(key, config.path(section, key))

    th1 = float(config.get(section, "th1"))
    lambda_ = float(config.get(section, "lambda"))
    topk_cap = int(config.get(section, "topk_cap"))
    top_t = int(config.get(section, "top_t"))
    raw_window = config.section(section).get("location_window", 1)
    location_window = math.inf if raw_window in ("inf", -1) else float(raw_window)
    for key, value in (
        ("th1", th1),
        ("lambda", lambda_),
        ("topk_cap", topk_cap),
        ("top_t", top_t),
        ("location_window", str(raw_window)),
    ):
        manifest.param(key, value)

    keywords_path = config.path(section, "keywords")
    if keywords_path:
        with _stage("load-keywords"):
            keywords = formats.load_keywords_tsv(keywords_path)
    else:
        labeled_path = config.path(section, "labeled_corpus")
        affinity_path = config.path(section, "affinity")
        if labeled_path is None or affinity_path is None:
            raise ConfigError(
                "sf recipe needs either sf.keywords or both sf.labeled_corpus and sf.affinity"
            )
        with _stage("build-keywords"):
            labeled = load_labeled_corpus(labeled_path)
            candidates = candidate_keywords(
                labeled, int(config.get(section, "keyword_top_n"))
            )
            neighbors_path = config.path(section, "neighbors")
            neighbors = (
                formats.load_neighbors_tsv(neighbors_path) if neighbors_path else {}
            )
            expanded = expand_keywords(
                candidates,
                neighbors,
                max_neighbors=int(config.get(section, "max_neighbors")),
                min_cos=float(config.get(section, "neighbor_cos")),
            )
            affinity = formats.load_affinity_tsv(affinity_path)
            keywords = filter_by_affinity(expanded, affinity, th1)
            keywords_out = out_dir / "keywords.tsv"
            formats.write_keywords_tsv(keywords_out, keywords)
            manifest.output(keywords_out)
    manifest.count("keywords", len(keywords))

    with _stage("frames"):
        documents = formats.load_corpus_jsonl(config.path(section, "corpus"))
        lemmas_path = config.path(section, "lemmas")
        lemmas = formats.load_lemmas_tsv(lemmas_path) if lemmas_path else None
        edl_path = config.path(section, "edl")
        location_mentions = location_mentions_from_edl(edl_path) if edl_path else []
        urgency_path = config.path(section, "urgency")
        urgency = formats.load_urgency_tsv(urgency_path) if urgency_path else None
        frames, predictions = build_sf_frames(
            documents,
            keywords,
            lemmas=lemmas,
            top_t=top_t,
            lambda_=lambda_,
            topk_cap=topk_cap,
            location_mentions=location_mentions,
            location_window=location_window,
            urgency=urgency,
        )
        frames_path = out_dir / "frames.jsonl"
        formats.write_frames_jsonl(frames_path, frames)
        manifest.output(frames_path)
    manifest.count("predictions", len(predictions))
    manifest.count("frames", len(frames))
    return manifest.write(out_dir)
