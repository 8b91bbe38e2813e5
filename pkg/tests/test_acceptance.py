"""Acceptance suite: one test per numbered criterion, each with an
independently coded oracle. Every test prints a single PASS line; a failed
assertion is the FAIL line via pytest's own report.

Criterion 6 note: the exhaustive sweep covers every pair of strings over
{a,b,c} whose combined length is at most 8 (83,653 pairs); the full
both-sides-length-8 cross product (96.8M pairs) is sampled instead, with
10,000 seeded draws. See the repository notes for the reasoning.
"""

import functools
import hashlib
import inspect
import itertools
import json
import math
import random
import time
from pathlib import Path

import pytest

from lowres_kit import formats
from lowres_kit.active import select_uncertain_spans, span_entropy, token_entropy
from lowres_kit.config import load_config
from lowres_kit.corpus import GENRE_ORDER, Genre
from lowres_kit.gazetteer import (
    CapStats,
    Gazetteer,
    normalize_gazetteer,
    propagate_documents,
    propagate_edit_distance,
    propagate_gazetteer,
)
from lowres_kit.lexicon import Lexicon
from lowres_kit.linking import KbEntry, Mention, link_mention, prune_kb
from lowres_kit.parallel import (
    SentencePair,
    filter_parallel,
    logloss_and_gradient,
    make_noisy_training,
    pair_features,
    train_filter,
)
from lowres_kit.recipes import run_recipe
from lowres_kit.relevance import (
    GenreRatio,
    build_df_table,
    rank_by_relevance,
    select_with_genre_ratio,
)
from lowres_kit.textnorm import levenshtein
from lowres_kit.translit import RuleTable, builtin_table, g2p_apply, g2p_backoff


def _report(number: int, label: str) -> None:
    print(f"criterion {number:02d} PASS: {label}")


# ---------------------------------------------------------------------------
# 1. TF-IDF oracle equivalence


def _dense_rank(corpus, terms):
    """Dense dict-based TF-IDF cosine ranking, written independently."""
    df: dict[str, int] = {}
    for tokens in corpus:
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    query: dict[str, float] = {}
    for term, freq in terms:
        if term in df:
            query[term] = query.get(term, 0.0) + freq / df[term]
    qnorm = math.sqrt(sum(v * v for v in query.values()))
    scores = []
    for index, tokens in enumerate(corpus):
        vec: dict[str, float] = {}
        for token in tokens:
            vec[token] = vec.get(token, 0.0) + 1.0
        for term in vec:
            vec[term] /= df[term]
        vnorm = math.sqrt(sum(v * v for v in vec.values()))
        dot = sum(vec[t] * query[t] for t in vec if t in query)
        score = 0.0 if qnorm == 0.0 or vnorm == 0.0 else dot / (vnorm * qnorm)
        scores.append((index, score))
    scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return scores


def test_criterion_01_tfidf_matches_dense_oracle():
    rng = random.Random(118001)
    started = time.perf_counter()
    for _ in range(200):
        vocab = [f"w{i}" for i in range(rng.randint(5, 30))]
        corpus = [
            [vocab[rng.randrange(len(vocab))] for _ in range(rng.randint(1, 12))]
            for _ in range(rng.randint(1, 100))
        ]
        terms = []
        for i in range(rng.randint(1, 50)):
            word = vocab[rng.randrange(len(vocab))] if rng.random() < 0.8 else f"oov{i}"
            terms.append((word, float(rng.randint(1, 3))))
        table = build_df_table(corpus)
        got = rank_by_relevance(corpus, terms, table, workers=1)
        want = _dense_rank(corpus, terms)
        assert [i for i, _ in got] == [i for i, _ in want]
        for (_, a), (_, b) in zip(got, want):
            assert abs(a - b) < 1e-12
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"oracle sweep took {elapsed:.2f}s"
    _report(1, f"200 corpora match the dense oracle in {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# 2. Throughput


def test_criterion_02_throughput_100k_sentences():
    rng = random.Random(118002)
    vocab = [f"w{i}" for i in range(5000)]
    corpus = []
    for _ in range(100_000):
        length = rng.randint(10, 20)
        corpus.append(
            [
                vocab[rng.randrange(5000)] if rng.random() < 0.7 else vocab[rng.randrange(200)]
                for _ in range(length)
            ]
        )
    terms = [(vocab[rng.randrange(300)], float(rng.randint(1, 5))) for _ in range(50)]

    started = time.perf_counter()
    table = build_df_table(corpus)
    serial = rank_by_relevance(corpus, terms, table, workers=1)
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"single-threaded ranking took {elapsed:.2f}s"

    serial_bytes = repr(serial).encode()
    for workers in (4, 8):
        parallel = rank_by_relevance(corpus, terms, table, workers=workers)
        assert repr(parallel).encode() == serial_bytes
    _report(2, f"100k sentences ranked in {elapsed:.2f}s; 4/8-worker output byte-identical")


# ---------------------------------------------------------------------------
# 3. Parallel filter efficacy and gradient correctness


def _substitution_pairs(seed: int, count: int, vocab) -> list[SentencePair]:
    rng = random.Random(seed)
    pairs = []
    for index in range(count):
        src = [vocab[rng.randrange(len(vocab))] for _ in range(rng.randint(5, 14))]
        pairs.append(SentencePair.of(src, ["t" + w for w in src], "SYN", index))
    return pairs


def test_criterion_03_filter_efficacy_and_gradient():
    vocab = [f"s{i}" for i in range(200)]
    lexicon = Lexicon.from_pairs([(w, "t" + w, 1.0) for w in vocab], "il", "en")

    noisy_train = make_noisy_training(_substitution_pairs(118031, 1000, vocab), 0.1, seed=11)
    labeled = [(pair_features(pair, lexicon), label) for pair, label in noisy_train]
    model = train_filter(labeled)

    noisy_eval = make_noisy_training(_substitution_pairs(118032, 1000, vocab), 0.1, seed=22)
    label_of = {pair.index: label for pair, label in noisy_eval}
    kept, removed = filter_parallel([p for p, _ in noisy_eval], model, lexicon, threshold=0.5)
    n_swapped = sum(1 for _, label in noisy_eval if label == 0)
    n_clean = len(noisy_eval) - n_swapped
    removed_swapped = sum(1 for p in removed if label_of[p.index] == 0)
    removed_clean = sum(1 for p in removed if label_of[p.index] == 1)
    assert n_swapped == 200
    assert removed_swapped / n_swapped >= 0.80
    assert removed_clean / n_clean <= 0.10
    assert len(kept) + len(removed) == 1000

    rng = random.Random(118033)
    short = [f"s{i}" for i in range(50)]
    short_lex = Lexicon.from_pairs([(w, "t" + w, 1.0) for w in short], "il", "en")

    def random_pair(index):
        src = [short[rng.randrange(50)] for _ in range(rng.randint(2, 9))]
        if rng.random() < 0.5:
            tgt = ["t" + w for w in src]
        else:
            tgt = [short[rng.randrange(50)] for _ in range(rng.randint(2, 9))]
        return SentencePair.of(src, tgt, "D", index)

    h = 1e-6
    worst = 0.0
    for _ in range(100):
        batch = [(pair_features(random_pair(i), short_lex), rng.randint(0, 1)) for i in range(rng.randint(2, 8))]
        if {label for _, label in batch} != {0, 1}:
            batch[0] = (batch[0][0], 0)
            batch[1] = (batch[1][0], 1)
        weights = [rng.uniform(-2, 2) for _ in range(5)]
        bias = rng.uniform(-2, 2)
        l2 = rng.choice([0.0, 1e-4, 1e-2])
        _, grad_w, grad_b = logloss_and_gradient(weights, bias, batch, l2)
        for k in range(5):
            up = list(weights)
            up[k] += h
            down = list(weights)
            down[k] -= h
            fd = (
                logloss_and_gradient(up, bias, batch, l2)[0]
                - logloss_and_gradient(down, bias, batch, l2)[0]
            ) / (2 * h)
            worst = max(worst, abs(grad_w[k] - fd) / max(abs(grad_w[k]), abs(fd), 1.0))
        fd_b = (
            logloss_and_gradient(weights, bias + h, batch, l2)[0]
            - logloss_and_gradient(weights, bias - h, batch, l2)[0]
        ) / (2 * h)
        worst = max(worst, abs(grad_b - fd_b) / max(abs(grad_b), abs(fd_b), 1.0))
    assert worst <= 1e-5, f"worst relative gradient error {worst:.2e}"
    _report(
        3,
        f"removed {removed_swapped}/{n_swapped} swapped, {removed_clean}/{n_clean} clean; "
        f"gradient error {worst:.1e}",
    )


# ---------------------------------------------------------------------------
# 4. Label propagation oracle


def _oracle_propagate(tokens, gaz: Gazetteer, window: int = 5) -> list[str]:
    """Cursor-driven greedy matcher written against the tagging contract."""
    tags = ["O"] * len(tokens)
    position = 0
    while position < len(tokens):
        matched = None
        for width in range(min(window, len(tokens) - position), 0, -1):
            span = tokens[position : position + width]
            if width == 1 and gaz.is_negative(span[0]):
                continue
            hit = gaz.lookup(span)
            if hit is not None:
                matched = (width, hit[0])
                break
        if matched is None:
            position += 1
            continue
        width, entity_type = matched
        tags[position] = f"B-{entity_type}"
        for offset in range(1, width):
            tags[position + offset] = f"I-{entity_type}"
        position += width
    return tags


def _bio_valid(tags) -> bool:
    previous = "O"
    for tag in tags:
        if tag == "O":
            previous = tag
            continue
        prefix, _, label = tag.partition("-")
        if prefix not in ("B", "I") or not label:
            return False
        if prefix == "I":
            if previous == "O":
                return False
            _, _, prev_label = previous.partition("-")
            if prev_label != label:
                return False
        previous = tag
    return True


def test_criterion_04_propagation_matches_bruteforce():
    rng = random.Random(118004)
    pool = [
        "kigali", "huye", "gatsibo", "lake", "kivu", "nyanza", "rugezi",
        "akagera", "ariko", "kandi", "umudugudu", "isoko", "amazi", "abantu",
    ]
    types = ["PER", "GPE", "LOC", "ORG"]
    for _ in range(500):
        rows = []
        for _ in range(rng.randint(1, 20)):
            width = rng.randint(1, 3)
            words = [pool[rng.randrange(len(pool))] for _ in range(width)]
            surface = " ".join(w.capitalize() if rng.random() < 0.5 else w for w in words)
            rows.append((surface, types[rng.randrange(4)], None))
        negatives = [pool[rng.randrange(len(pool))] for _ in range(rng.randint(0, 3))]
        gaz = normalize_gazetteer(rows, negatives)

        tokens = []
        for _ in range(rng.randint(1, 12)):
            word = pool[rng.randrange(len(pool))]
            style = rng.randrange(5)
            if style == 0:
                word = word.capitalize()
            elif style == 1:
                word = "#" + word
            elif style == 2:
                word = word + "."
            tokens.append(word)

        got = propagate_gazetteer(tokens, gaz)
        assert got == _oracle_propagate(tokens, gaz)
        assert _bio_valid(got)

    for _ in range(50):
        rows = [
            (" ".join(pool[rng.randrange(len(pool))] for _ in range(rng.randint(1, 2))),
             types[rng.randrange(4)], None)
            for _ in range(rng.randint(1, 8))
        ]
        gaz = normalize_gazetteer(rows, [])
        corpus = []
        for _ in range(rng.randint(1, 4)):
            doc = []
            for _ in range(rng.randint(1, 5)):
                tokens = [pool[rng.randrange(len(pool))] for _ in range(rng.randint(1, 10))]
                doc.append((tokens, propagate_gazetteer(tokens, gaz)))
            corpus.append(doc)
        once = propagate_documents(corpus)
        twice = propagate_documents(once)
        assert twice == once
        for doc in once:
            for _, tags in doc:
                assert _bio_valid(tags)
    _report(4, "500 instances match the brute-force matcher; doc propagation idempotent")


# ---------------------------------------------------------------------------
# 5. Capitalization formula


def test_criterion_05_capitalization_table():
    table = [
        (0, 1, 0.25),
        (0, 2, 0.16666666666666666),
        (1, 2, 0.5),
        (2, 2, 0.8333333333333334),
        (1, 1, 0.75),
        (3, 4, 0.7),
        (0, 10, 0.045454545454545456),
        (5, 9, 0.55),
        (7, 7, 0.9375),
        (2, 5, 0.4166666666666667),
        (4, 10, 0.4090909090909091),
        (9, 10, 0.8636363636363636),
        (10, 100, 0.10396039603960396),
        (99, 100, 0.9851485148514851),
        (50, 100, 0.5),
        (6, 8, 0.7222222222222222),
        (3, 3, 0.875),
        (0, 50, 0.00980392156862745),
        (12, 24, 0.5),
        (8, 15, 0.53125),
    ]
    assert len(table) == 20
    for capitalized, total, expected in table:
        stats = CapStats({"w": (capitalized, total)})
        ratio = stats.ratio("w")
        assert ratio == pytest.approx(expected, abs=1e-15)
        assert 0.0 < ratio < 1.0
    _report(5, "all 20 hand-computed (c+0.5)/(n+1) ratios reproduced")


# ---------------------------------------------------------------------------
# 6. Edit-distance propagation


@functools.cache
def _lev_oracle(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        _lev_oracle(a[1:], b[1:]) + (a[0] != b[0]),
        _lev_oracle(a[1:], b) + 1,
        _lev_oracle(a, b[1:]) + 1,
    )


def test_criterion_06_levenshtein_oracle_and_default():
    alphabet = "abc"
    by_length = [[""]]
    for length in range(1, 9):
        by_length.append(["".join(t) for t in itertools.product(alphabet, repeat=length)])

    checked = 0
    for len_a in range(9):
        for len_b in range(9 - len_a):
            for a in by_length[len_a]:
                for b in by_length[len_b]:
                    assert levenshtein(a, b) == _lev_oracle(a, b)
                    checked += 1
    assert checked == 83653

    rng = random.Random(118006)
    for _ in range(10_000):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        assert levenshtein(a, b) == _lev_oracle(a, b)

    signature = inspect.signature(propagate_edit_distance)
    assert signature.parameters["min_edit_dist"].default == 2
    gaz = normalize_gazetteer([("kigali", "GPE", None)], [])
    additions = propagate_edit_distance(["kigari", "kigaro", "kigali"], gaz)
    assert "kigari" in additions  # distance 1 < 2
    assert "kigaro" not in additions  # distance 2, excluded by the strict bound
    assert "kigali" not in additions  # already a key
    _report(6, f"{checked} exhaustive + 10k sampled pairs match; default strict <2 honored")


# ---------------------------------------------------------------------------
# 7. Linking oracle and KB pruning


def _oracle_jaccard(a: str, b: str) -> float:
    set_a, set_b = set(a.lower().split()), set(b.lower().split())
    if not set_a and not set_b:
        return 1.0
    if not set_a or not set_b:
        return 0.0
    return len(set_a & set_b) / len(set_a | set_b)


def _oracle_candidates(tokens, lexicons, k_per_token=3, cap=64):
    if not tokens:
        return []
    per_token = []
    for token in tokens:
        options = []
        for lexicon in lexicons:
            for target, _ in lexicon.translations(token)[:k_per_token]:
                if target not in options:
                    options.append(target)
        if token not in options:
            options.append(token)
        per_token.append(options)
    out = []
    for combo in itertools.product(*per_token):
        joined = " ".join(combo)
        if joined not in out:
            out.append(joined)
            if len(out) >= cap:
                break
    return out


def _oracle_link(mention, kb_pruned, lexicons, threshold=0.5):
    compatible = {"GPE", "LOC"} if mention.entity_type in ("GPE", "LOC") else {mention.entity_type}
    candidates = _oracle_candidates(mention.surface.split(), lexicons)
    rows = []
    for entry in kb_pruned:
        if entry.entity_type not in compatible:
            continue
        best = 0.0
        for name in entry.all_names():
            for candidate in candidates:
                value = _oracle_jaccard(candidate, name)
                if value > best:
                    best = value
        rows.append((best, -entry.population, entry.kb_id))
    if not rows:
        return None, 0.0
    rows.sort(key=lambda row: (-row[0], row[1], row[2]))
    best, _, kb_id = rows[0]
    if best < threshold or best <= 0.0:
        return None, best
    return kb_id, best


def test_criterion_07_linking_oracle_and_pruning(fixtures_dir):
    kb = formats.load_kb_tsv(fixtures_dir / "kb.tsv")
    assert len(kb) == 50
    pruned = prune_kb(kb, {"RW"}, {"BI", "UG", "CD", "TZ"}, 50000)
    lexicons = [
        formats.load_lexicon_tsv(fixtures_dir / "lexicon.tsv", "il", "en"),
        formats.load_lexicon_tsv(fixtures_dir / "entity_lexicon.tsv", "il", "en"),
    ]

    names = [(name, entry.entity_type) for entry in kb for name in entry.all_names()]
    rng = random.Random(118007)
    for _ in range(200):
        name, entity_type = names[rng.randrange(len(names))]
        mode = rng.randrange(5)
        if mode == 0:
            surface = name.lower()
        elif mode == 1:
            surface = "#" + name.replace(" ", "").lower()
        elif mode == 2:
            surface = name + " ."
        elif mode == 3:
            words = name.split()
            surface = " ".join(words[: max(1, len(words) - 1)])
        else:
            surface = name
        mention = Mention("D", 0, (0, len(surface.split())), surface, entity_type)
        got = link_mention(mention, pruned, lexicons)
        want_id, want_score = _oracle_link(mention, pruned, lexicons)
        assert got.kb_id == want_id
        assert abs(got.score - want_score) < 1e-12
        if got.kb_id is None:
            assert got.method == "nil"

    ids = {entry.kb_id for entry in pruned}
    assert "G0021" in ids  # out-of-region, population 50001
    assert "G0022" not in ids  # out-of-region, population 49999
    assert "G0035" not in ids  # out-of-region, population 49999
    no_region = {entry.kb_id for entry in prune_kb(kb, set(), set(), 50000)}
    assert "G0021" in no_region
    assert all(entry.kb_id in no_region for entry in kb if entry.entity_type in ("PER", "ORG"))
    _report(7, "200 mentions match brute-force max-Jaccard; population floor strict")


# ---------------------------------------------------------------------------
# 8. SF pipeline on the bundled fixture


def test_criterion_08_sf_fixture_pipeline(fixtures_dir, tmp_path, write_config):
    out_dir = tmp_path / "sf"
    config = load_config(
        write_config(
            f"""
[sf]
corpus = "{fixtures_dir / 'sf_corpus.jsonl'}"
keywords = "{fixtures_dir / 'sf_keywords.tsv'}"
urgency = "{fixtures_dir / 'urgency.tsv'}"
out_dir = "{out_dir}"
th1 = 0.8
lambda = -1.5
topk_cap = 3
"""
        )
    )
    run_recipe("sf", config)
    first = (out_dir / "frames.jsonl").read_bytes()
    manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["params"]["th1"] == 0.8
    assert manifest["params"]["lambda"] == -1.5
    assert manifest["params"]["topk_cap"] == 3

    frames = [json.loads(line) for line in first.decode("utf-8").splitlines()]
    assert frames

    documents = {d.doc_id: d for d in formats.load_corpus_jsonl(fixtures_dir / "sf_corpus.jsonl")}
    keywords = formats.load_keywords_tsv(fixtures_dir / "sf_keywords.tsv")
    forms_by_type: dict[str, set[str]] = {}
    for entry in keywords:
        forms_by_type.setdefault(entry.sf_type, set()).add(entry.keyword.lower())

    types_per_doc: dict[str, set[str]] = {}
    for frame in frames:
        assert frame["status"] == "current"
        assert frame["resolution"] == "insufficient"
        document = documents[frame["doc_id"]]
        sentence = document.tokenized()[frame["justification_seg"]]
        lowered = {token.surface.lower() for token in sentence}
        assert lowered & forms_by_type[frame["type"]], (
            f"justification segment of {frame['doc_id']}/{frame['type']} "
            "contains no keyword of that type"
        )
        types_per_doc.setdefault(frame["doc_id"], set()).add(frame["type"])
    for doc_id, types in types_per_doc.items():
        limit = min(3, len(documents[doc_id].segments))
        assert len(types) <= limit, f"{doc_id} carries {len(types)} types, cap {limit}"

    run_recipe("sf", config)
    assert (out_dir / "frames.jsonl").read_bytes() == first
    _report(8, f"{len(frames)} frames: justified, capped, constant-valued, rerun-identical")


# ---------------------------------------------------------------------------
# 9. Genre-ratio selection


def test_criterion_09_largest_remainder_quotas():
    rng = random.Random(118009)
    for _ in range(50):
        genre_count = rng.randint(1, 4)
        genres = list(GENRE_ORDER[:genre_count])
        weights = [rng.randint(1, 10) for _ in genres]
        total = sum(weights)
        shares = {genre: weight / total for genre, weight in zip(genres, weights)}
        budget = rng.randint(1, 40)

        scored = []
        for genre in genres:
            for _ in range(budget + 5):
                scored.append((f"{genre.value}-{len(scored)}", genre, rng.random()))

        floors = {genre: int(math.floor(budget * share)) for genre, share in shares.items()}
        leftover = budget - sum(floors.values())
        order = sorted(
            genres,
            key=lambda genre: (
                -(budget * shares[genre] - floors[genre]),
                GENRE_ORDER.index(genre),
            ),
        )
        quotas = dict(floors)
        for genre in order[:leftover]:
            quotas[genre] += 1

        chosen = select_with_genre_ratio(scored, GenreRatio(shares), budget)
        assert len(chosen) == budget
        genre_of = {ref: genre for ref, genre, _ in scored}
        counts: dict[Genre, int] = {}
        for ref in chosen:
            counts[genre_of[ref]] = counts.get(genre_of[ref], 0) + 1
        for genre in genres:
            assert counts.get(genre, 0) == quotas[genre], (
                f"{genre}: got {counts.get(genre, 0)}, quota {quotas[genre]}"
            )
    _report(9, "50 random (ratio, budget) settings match largest-remainder quotas")


# ---------------------------------------------------------------------------
# 10. G2P backoff


def test_criterion_10_g2p_backoff_properties():
    latin = builtin_table("latin")
    sinhala = builtin_table("sinhala")
    rng = random.Random(118010)
    letters = "abcdefghijklmnoprstuvwyz"
    for _ in range(1000):
        token = "".join(rng.choice(letters) for _ in range(rng.randint(1, 10)))
        assert g2p_backoff(token, [latin]) == g2p_apply(token, latin)[0]

    assert g2p_backoff("කිch", [sinhala, latin]) == "kitʃ"
    assert g2p_backoff("chකි", [sinhala, latin]) == "tʃki"
    assert g2p_backoff("කිch", [latin, sinhala]) == "kitʃ"

    forward = RuleTable(
        "bijective",
        (
            ("a", "α"), ("b", "β"), ("c", "γ"), ("d", "δ"), ("e", "ε"),
            ("f", "ζ"), ("g", "η"), ("h", "θ"), ("i", "ι"), ("j", "κ"),
        ),
    )
    inverse = RuleTable("bijective-inv", tuple((rhs, lhs) for lhs, rhs in forward.rules))
    for _ in range(500):
        token = "".join(rng.choice("abcdefghij") for _ in range(rng.randint(1, 12)))
        ipa = g2p_apply(token, forward)[0]
        assert g2p_apply(ipa, inverse)[0] == token
        assert g2p_apply(g2p_apply(ipa, inverse)[0], forward)[0] == ipa
    _report(10, "chain==direct on 1000 tokens; mixed-script routing; bijective round trip")


# ---------------------------------------------------------------------------
# 11. Span entropy


def test_criterion_11_entropy_and_budgets():
    for n_tags in (2, 3, 4, 7):
        for length in range(1, 7):
            marginals = [{f"t{k}": 1.0 / n_tags for k in range(n_tags)}] * length
            assert span_entropy(marginals, 0, length) == pytest.approx(
                length * math.log(n_tags), abs=1e-9
            )
            if length >= 2:
                assert span_entropy(marginals, 1, length) == pytest.approx(
                    (length - 1) * math.log(n_tags), abs=1e-9
                )

    rng = random.Random(118011)
    for _ in range(100):
        corpus = []
        span_pool = {}
        max_span_len = rng.randint(1, 5)
        cap = rng.randint(1, 3)
        for s in range(rng.randint(1, 6)):
            length = rng.randint(1, 8)
            n_tags = rng.randint(2, 5)
            marginals = []
            for _ in range(length):
                raw = [rng.random() + 1e-6 for _ in range(n_tags)]
                total = sum(raw)
                marginals.append({f"t{k}": v / total for k, v in enumerate(raw)})
            key = ("D", s)
            corpus.append((key[0], key[1], marginals))
            n_spans = sum(min(max_span_len, length - i) for i in range(length))
            span_pool[key] = min(cap, n_spans)
        budget = rng.randint(0, 15)

        selected = select_uncertain_spans(corpus, budget, max_span_len, cap)
        assert len(selected) == min(budget, sum(span_pool.values()))
        per_sentence: dict[tuple, int] = {}
        for candidate in selected:
            assert 1 <= candidate.end - candidate.start <= max_span_len
            assert candidate.entropy >= 0.0
            key = (candidate.doc_id, candidate.seg_id)
            per_sentence[key] = per_sentence.get(key, 0) + 1
        for key, count in per_sentence.items():
            assert count <= cap
    _report(11, "uniform marginals exact to 1e-9; budget and caps hold on 100 instances")


# ---------------------------------------------------------------------------
# 12. End-to-end determinism


def _pipeline_config_text(fixtures_dir, out_root: Path) -> str:
    fx = fixtures_dir
    return f"""
[ner_data]
corpus = "{fx / 'sf_corpus.jsonl'}"
gazetteer = "{fx / 'gazetteer.tsv'}"
negatives = "{fx / 'negatives.txt'}"
terms = "{fx / 'terms.tsv'}"
budget = 30
out_dir = "{out_root / 'ner'}"

[ner_data.ratio]
NW = 0.5
SN = 0.3
WL = 0.2

[edl]
corpus = "{fx / 'sf_corpus.jsonl'}"
gazetteer = "{fx / 'gazetteer.tsv'}"
negatives = "{fx / 'negatives.txt'}"
kb = "{fx / 'kb.tsv'}"
lexicon = "{fx / 'lexicon.tsv'}"
incident_countries = ["RW"]
neighbor_countries = ["BI", "UG", "CD", "TZ"]
out_dir = "{out_root / 'edl'}"

[mt_data]
src_corpus = "{fx / 'mt_src.jsonl'}"
tgt_corpus = "{fx / 'mt_tgt.jsonl'}"
lexicon = "{fx / 'mt_lexicon.tsv'}"
mono_corpus = "{fx / 'mono_corpus.jsonl'}"
out_dir = "{out_root / 'mt'}"

[sf]
corpus = "{fx / 'sf_corpus.jsonl'}"
keywords = "{fx / 'sf_keywords.tsv'}"
urgency = "{fx / 'urgency.tsv'}"
edl = "{out_root / 'edl' / 'edl.tsv'}"
out_dir = "{out_root / 'sf'}"
"""


def test_criterion_12_recipe_determinism(fixtures_dir, tmp_path, write_config):
    config = load_config(write_config(_pipeline_config_text(fixtures_dir, tmp_path)))
    recipe_order = ("ner-data", "edl", "mt-data", "sf")

    def run_all(workers: int) -> dict[str, str]:
        digests: dict[str, str] = {}
        for name in recipe_order:
            manifest_path = run_recipe(name, config, workers=workers)
            for path in sorted(manifest_path.parent.iterdir()):
                digests[f"{path.parent.name}/{path.name}"] = hashlib.sha256(
                    path.read_bytes()
                ).hexdigest()
        return digests

    baseline = run_all(workers=2)
    assert len(baseline) >= 8
    for _ in range(2):
        assert run_all(workers=2) == baseline
    for workers in (1, 4, 8):
        assert run_all(workers=workers) == baseline
    _report(12, f"{len(baseline)} output files byte-identical over 3 runs and workers 1/4/8")
