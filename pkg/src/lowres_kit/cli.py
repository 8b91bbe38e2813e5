"""Command-line entry points.

Every subcommand reads and writes files; stdout carries short log lines
only. Exit codes: 0 success, 1 validation problems (usage, config, input
schemas), 2 runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, formats, recipes
from .config import load_config
from .corpus import Genre
from .errors import ConfigError, InvalidRange, LowresKitError, SchemaViolation
from .lexicon import Lexicon
from .parallel import (
    DntMask,
    augment_with_entities,
    dnt_restore,
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
from .translit import BUILTIN_TABLES, RuleTable, builtin_table, g2p_backoff, load_rule_table, reromanize
from .validate import SCHEMAS, validate_file

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with status 1, not 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_ratio(text: str) -> GenreRatio:
    parts = {}
    for piece in text.split(","):
        if "=" not in piece:
            raise ConfigError(f"bad ratio piece {piece!r}, expected GENRE=FRACTION")
        name, _, value = piece.partition("=")
        try:
            parts[Genre.parse(name.strip())] = float(value)
        except ValueError as exc:
            raise ConfigError(f"bad ratio piece {piece!r}: {exc}") from exc
    return GenreRatio(parts)


def _read_lines(path: str) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_select(args: argparse.Namespace) -> int:
    documents = formats.load_corpus_jsonl(args.corpus)
    sentences = recipes.corpus_sentences(documents)
    tokens_only = [tokens for _, _, _, tokens in sentences]
    table = build_df_table(tokens_only)
    if args.terms:
        terms = formats.load_terms_tsv(args.terms)
        ranked = rank_by_relevance(tokens_only, terms, table, args.workers)
    else:
        weights = HeuristicWeights(1.0, 0.0, 0.0, 0.0)
        scores = [
            (i, score_sentence_heuristic(tokens, table, weights=weights))
            for i, tokens in enumerate(tokens_only)
        ]
        ranked = sorted(scores, key=lambda pair: (-pair[1], pair[0]))
    if args.budget is not None:
        if args.ratio:
            scores = dict(ranked)
            scored = [
                (i, genre, scores[i]) for i, (_, _, genre, _) in enumerate(sentences)
            ]
            chosen = select_with_genre_ratio(scored, _parse_ratio(args.ratio), args.budget)
            score_of = dict(ranked)
            rows = [(i, score_of[i]) for i in chosen]
        else:
            rows = ranked[: args.budget]
    else:
        rows = ranked
    with open(args.out, "w", encoding="utf-8") as handle:
        for index, score in rows:
            doc_id, seg_id, _, _ = sentences[index]
            handle.write(f"{doc_id}\t{seg_id}\t{score!r}\n")
    print(f"selected {len(rows)} of {len(sentences)} sentences -> {args.out}")
    return 0


def _cmd_filter_parallel(args: argparse.Namespace) -> int:
    pairs = formats.load_parallel_tsv(args.pairs)
    lexicon = formats.load_lexicon_tsv(args.lexicon) if args.lexicon else Lexicon()
    if args.model:
        model = formats.load_model_json(args.model)
    else:
        labeled = make_noisy_training(pairs, args.swap_rate, args.seed)
        features = [(pair_features(pair, lexicon), label) for pair, label in labeled]
        model = train_filter(features, l2=args.l2, epochs=args.epochs, lr=args.lr)
        if args.save_model:
            formats.write_model_json(args.save_model, model)
    kept, removed = filter_parallel(pairs, model, lexicon, args.threshold)
    formats.write_parallel_tsv(args.out_kept, kept)
    formats.write_parallel_tsv(args.out_removed, removed)
    print(f"kept {len(kept)}, removed {len(removed)} of {len(pairs)} pairs")
    return 0


def _cmd_realign(args: argparse.Namespace) -> int:
    src = _read_lines(args.src)
    tgt = _read_lines(args.tgt)
    alignment = realign_document(src, tgt, args.penalty_gap, args.penalty_merge)
    with open(args.out, "w", encoding="utf-8") as handle:
        for (s0, s1), (t0, t1) in alignment:
            handle.write(" ".join(src[s0:s1]) + "\t" + " ".join(tgt[t0:t1]) + "\n")
    print(f"aligned {len(src)}x{len(tgt)} segments into {len(alignment)} units")
    return 0


def _cmd_augment_entities(args: argparse.Namespace) -> int:
    pairs = formats.load_parallel_tsv(args.pairs)
    spans = formats.load_pair_spans_tsv(args.spans, len(pairs))
    entity_lexicon = formats.load_lexicon_tsv(args.entity_lexicon)
    augmented = augment_with_entities(pairs, spans, entity_lexicon, args.n_copies, args.seed)
    formats.write_parallel_tsv(args.out, augmented)
    print(f"wrote {len(augmented)} pairs ({len(pairs)} originals) -> {args.out}")
    return 0


def _cmd_dnt(args: argparse.Namespace) -> int:
    if args.mode == "tag":
        masks = [dnt_tag(line.split()) for line in _read_lines(args.infile)]
        with open(args.masked, "w", encoding="utf-8") as handle:
            for mask in masks:
                handle.write(" ".join(mask.masked) + "\n")
        with open(args.slots, "w", encoding="utf-8") as handle:
            for mask in masks:
                handle.write(json.dumps(mask.slots, ensure_ascii=False, sort_keys=True) + "\n")
        print(f"masked {len(masks)} sentences")
        return 0
    translated = _read_lines(args.infile)
    slot_rows = [json.loads(line) for line in _read_lines(args.slots) if line]
    if len(slot_rows) != len(translated):
        raise SchemaViolation(
            f"{len(translated)} sentences but {len(slot_rows)} slot rows"
        )
    with open(args.out, "w", encoding="utf-8") as handle:
        for line, slots in zip(translated, slot_rows):
            mask = DntMask(masked=(), slots={str(k): str(v) for k, v in slots.items()})
            handle.write(" ".join(dnt_restore(line.split(), mask)) + "\n")
    print(f"restored {len(translated)} sentences -> {args.out}")
    return 0


def _cmd_ni_phrases(args: argparse.Namespace) -> int:
    mono_docs = formats.load_corpus_jsonl(args.mono)
    mono = [tokens for _, _, _, tokens in recipes.corpus_sentences(mono_docs)]
    bilingual = [list(pair.src) for pair in formats.load_parallel_tsv(args.bilingual)]
    phrases = select_ni_phrases(mono, bilingual, args.n_max, args.top_n)
    with open(args.out, "w", encoding="utf-8") as handle:
        for phrase, frequency in phrases:
            handle.write(" ".join(phrase) + "\t" + str(frequency) + "\n")
    print(f"wrote {len(phrases)} phrases -> {args.out}")
    return 0


def _cmd_tag(args: argparse.Namespace) -> int:
    documents = formats.load_corpus_jsonl(args.corpus)
    sentences = recipes.corpus_sentences(documents)
    rows = formats.load_gazetteer_tsv(args.gazetteer)
    negatives = formats.load_wordlist(args.negatives) if args.negatives else []
    vocabulary = [t for _, _, _, tokens in sentences for t in tokens]
    gazetteer, _ = recipes.build_gazetteer(
        rows, negatives, vocabulary, args.min_edit_dist
    )
    tagged = recipes.tag_corpus(
        [(doc_id, tokens) for doc_id, _, _, tokens in sentences],
        gazetteer,
        args.window,
        not args.no_doc_propagate,
        args.mark_unknown,
    )
    formats.write_conll(args.out, tagged)
    print(f"tagged {len(tagged)} sentences -> {args.out}")
    return 0


def _cmd_link(args: argparse.Namespace) -> int:
    documents = formats.load_corpus_jsonl(args.corpus)
    rows = formats.load_gazetteer_tsv(args.gazetteer)
    negatives = formats.load_wordlist(args.negatives) if args.negatives else []
    gazetteer, _ = recipes.build_gazetteer(rows, negatives)
    kb = formats.load_kb_tsv(args.kb)
    lexicons = [formats.load_lexicon_tsv(p) for p in args.lexicon]
    results, pruned_size = recipes.link_corpus(
        documents,
        gazetteer,
        kb,
        lexicons,
        window=args.window,
        threshold=args.threshold,
        population_floor=args.population_floor,
        incident_countries=set(args.incident_country),
        neighbor_countries=set(args.neighbor_country),
    )
    formats.write_edl_tsv(args.out, results)
    linked = sum(1 for r in results if r.method != "nil")
    print(
        f"linked {linked} of {len(results)} mentions"
        f" against {pruned_size} KB entries -> {args.out}"
    )
    return 0


def _cmd_sf(args: argparse.Namespace) -> int:
    from .sf import candidate_keywords, expand_keywords, filter_by_affinity

    if args.mode == "build-keywords":
        labeled = recipes.load_labeled_corpus(args.labeled)
        candidates = candidate_keywords(labeled, args.top_n)
        neighbors = formats.load_neighbors_tsv(args.neighbors) if args.neighbors else {}
        expanded = expand_keywords(candidates, neighbors, args.max_neighbors, args.min_cos)
        affinity = formats.load_affinity_tsv(args.affinity)
        keywords = filter_by_affinity(expanded, affinity, args.th1)
        formats.write_keywords_tsv(args.out, keywords)
        print(f"wrote {len(keywords)} keywords -> {args.out}")
        return 0
    documents = formats.load_corpus_jsonl(args.corpus)
    keywords = formats.load_keywords_tsv(args.keywords)
    lemmas = formats.load_lemmas_tsv(args.lemmas) if args.lemmas else None
    mentions = []
    if args.edl:
        mentions = recipes.location_mentions_from_edl(Path(args.edl))
    urgency = formats.load_urgency_tsv(args.urgency) if args.urgency else None
    frames, _ = recipes.build_sf_frames(
        documents,
        keywords,
        lemmas=lemmas,
        top_t=args.top_t,
        lambda_=getattr(args, "lambda"),
        topk_cap=args.cap,
        location_mentions=mentions,
        location_window=args.location_window,
        urgency=urgency,
    )
    formats.write_frames_jsonl(args.out, frames)
    print(f"wrote {len(frames)} frames -> {args.out}")
    return 0


def _cmd_al(args: argparse.Namespace) -> int:
    spans = recipes.select_spans_from_file(
        args.marginals, args.budget, args.max_span_len, args.max_per_sentence
    )
    formats.write_spans_tsv(args.out, spans)
    print(f"selected {len(spans)} spans -> {args.out}")
    return 0


def _resolve_table(name: str) -> RuleTable:
    if name in BUILTIN_TABLES:
        return builtin_table(name)
    path = Path(name)
    if not path.exists():
        raise ConfigError(f"{name!r} is neither a builtin table nor a file")
    return load_rule_table(
        path.read_text(encoding="utf-8").splitlines(), path.stem
    )


def _cmd_ipa(args: argparse.Namespace) -> int:
    chain = [_resolve_table(name.strip()) for name in args.chain.split(",") if name.strip()]
    if not chain:
        raise ConfigError("--chain must name at least one table")
    roman = builtin_table("roman") if args.roman else None
    lines = _read_lines(args.infile)
    with open(args.out, "w", encoding="utf-8") as handle:
        for line in lines:
            ipa = g2p_backoff(line, chain)
            row = [line, ipa]
            if roman is not None:
                row.append(reromanize(ipa, roman))
            handle.write("\t".join(row) + "\n")
    print(f"converted {len(lines)} lines -> {args.out}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    manifest_path = recipes.run_recipe(args.recipe, config)
    print(f"manifest: {manifest_path}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    violations = validate_file(args.path, args.schema)
    for line, message in violations:
        print(f"line {line}: {message}")
    if violations:
        print(f"{len(violations)} violation(s) in {args.path}")
        return 1
    print(f"{args.path}: OK")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lowres-kit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = commands.add_parser("select", help="rank and select in-domain sentences")
    p.add_argument("--corpus", required=True)
    p.add_argument("--terms", help="relevant-term TSV; omitted = TF-IDF heuristic")
    p.add_argument("--budget", type=int)
    p.add_argument("--ratio", help="genre quotas, e.g. NW=0.5,SN=0.3,WL=0.2")
    p.add_argument("--workers", type=int, default=recipes.workers_from_env())
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select)

    p = commands.add_parser("filter-parallel", help="remove misaligned sentence pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--model", help="trained model JSON; omitted = train on the fly")
    p.add_argument("--save-model")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--swap-rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--out-kept", required=True)
    p.add_argument("--out-removed", required=True)
    p.set_defaults(func=_cmd_filter_parallel)

    p = commands.add_parser("realign", help="re-align document segments")
    p.add_argument("--src", required=True, help="source segments, one per line")
    p.add_argument("--tgt", required=True, help="target segments, one per line")
    p.add_argument("--penalty-gap", type=float, default=4.0)
    p.add_argument("--penalty-merge", type=float, default=1.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_realign)

    p = commands.add_parser("augment-entities", help="entity-swap augmentation copies")
    p.add_argument("--pairs", required=True)
    p.add_argument("--spans", required=True, help="pair_index s0 s1 t0 t1 rows")
    p.add_argument("--entity-lexicon", required=True)
    p.add_argument("--n-copies", type=int, default=1)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_augment_entities)

    p = commands.add_parser("dnt", help="mask or restore do-not-translate tokens")
    modes = p.add_subparsers(dest="mode", required=True, metavar="MODE")
    m = modes.add_parser("tag", help="replace DNT tokens with placeholders")
    m.add_argument("--in", dest="infile", required=True, help="one sentence per line")
    m.add_argument("--masked", required=True)
    m.add_argument("--slots", required=True)
    m.set_defaults(func=_cmd_dnt)
    m = modes.add_parser("restore", help="substitute original tokens back")
    m.add_argument("--in", dest="infile", required=True)
    m.add_argument("--slots", required=True)
    m.add_argument("--out", required=True)
    m.set_defaults(func=_cmd_dnt)

    p = commands.add_parser("ni-phrases", help="frequent untranslated phrases")
    p.add_argument("--mono", required=True, help="monolingual corpus JSONL")
    p.add_argument("--bilingual", required=True, help="parallel TSV")
    p.add_argument("--n-max", type=int, default=4)
    p.add_argument("--top-n", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ni_phrases)

    p = commands.add_parser("tag", help="gazetteer NER tagging to CoNLL")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gazetteer", required=True)
    p.add_argument("--negatives")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--min-edit-dist", type=int, default=0)
    p.add_argument("--no-doc-propagate", action="store_true")
    p.add_argument("--mark-unknown", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_tag)

    p = commands.add_parser("link", help="tag mentions and link them to the KB")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gazetteer", required=True)
    p.add_argument("--negatives")
    p.add_argument("--kb", required=True)
    p.add_argument("--lexicon", action="append", default=[])
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--population-floor", type=int, default=50000)
    p.add_argument("--incident-country", action="append", default=[])
    p.add_argument("--neighbor-country", action="append", default=[])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_link)

    p = commands.add_parser("sf", help="situation-frame keywords and tagging")
    modes = p.add_subparsers(dest="mode", required=True, metavar="MODE")
    m = modes.add_parser("build-keywords", help="keyword lists from labeled docs")
    m.add_argument("--labeled", required=True, help="JSONL docs with sf_type")
    m.add_argument("--neighbors")
    m.add_argument("--affinity", required=True)
    m.add_argument("--top-n", type=int, default=100)
    m.add_argument("--max-neighbors", type=int, default=30)
    m.add_argument("--min-cos", type=float, default=0.70)
    m.add_argument("--th1", type=float, default=0.8)
    m.add_argument("--out", required=True)
    m.set_defaults(func=_cmd_sf)
    m = modes.add_parser("tag", help="detect frames in a corpus")
    m.add_argument("--corpus", required=True)
    m.add_argument("--keywords", required=True)
    m.add_argument("--lemmas")
    m.add_argument("--edl", help="EDL TSV supplying GPE/LOC locations")
    m.add_argument("--urgency")
    m.add_argument("--top-t", type=int, default=2)
    m.add_argument("--lambda", type=float, default=-1.5)
    m.add_argument("--cap", type=int, default=3)
    m.add_argument("--location-window", type=float, default=1)
    m.add_argument("--out", required=True)
    m.set_defaults(func=_cmd_sf)

    p = commands.add_parser("al", help="uncertainty span selection for annotation")
    p.add_argument("--marginals", required=True, help="per-token marginals JSONL")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--max-span-len", type=int, default=5)
    p.add_argument("--max-per-sentence", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_al)

    p = commands.add_parser("ipa", help="rule-table transliteration with backoff")
    p.add_argument("--in", dest="infile", required=True, help="one token per line")
    p.add_argument(
        "--chain",
        required=True,
        help="comma-separated tables, builtin names or CSV paths",
    )
    p.add_argument("--roman", action="store_true", help="add an ASCII column")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ipa)

    p = commands.add_parser("run", help="run a full recipe from a TOML config")
    p.add_argument("recipe", choices=recipes.RECIPES)
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    p = commands.add_parser("validate", help="schema-check an output file")
    p.add_argument("path")
    p.add_argument("--schema", required=True, choices=SCHEMAS)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, SchemaViolation, InvalidRange, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (LowresKitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
