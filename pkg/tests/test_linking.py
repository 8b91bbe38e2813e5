from __future__ import annotations

import pytest

from lowres_kit.lexicon import Lexicon
from lowres_kit.linking import (
    KbEntry,
    LinkResult,
    Mention,
    candidate_translations,
    cluster_nil,
    jaccard_similarity,
    link_mention,
    prune_kb,
)


def entry(kb_id, etype, name, alternates=(), country="RW", population=0):
    return KbEntry(
        kb_id=kb_id,
        entity_type=etype,
        name=name,
        ascii_name=name,
        alternate_names=tuple(alternates),
        country_code=country,
        population=population,
    )


def mention(surface, etype="GPE"):
    return Mention("D1", 0, (0, len(surface.split())), surface, etype)


KB = [
    entry("G0001", "GPE", "Kigali", alternates=("Kigari",), population=1132686),
    entry("G0002", "GPE", "Butare", alternates=("Huye",), population=89600),
    entry("L0001", "LOC", "Lake Kivu", alternates=("Kivu",)),
    entry("P0001", "PER", "Paul Kagame", alternates=("Kagame",)),
    entry("O0001", "ORG", "Minema"),
]


# --- KB pruning -------------------------------------------------------------


def test_prune_keeps_per_org_always():
    kb = [
        entry("P1", "PER", "Someone", country="ZZ"),
        entry("O1", "ORG", "Somewhere Inc", country="ZZ"),
    ]
    assert prune_kb(kb, {"RW"}, set()) == kb


def test_prune_gpe_by_region_or_population():
    kb = [
        entry("G1", "GPE", "InRegion", country="RW", population=10),
        entry("G2", "GPE", "Neighbor", country="UG", population=10),
        entry("G3", "GPE", "BigCity", country="ZZ", population=50001),
        entry("G4", "GPE", "SmallFar", country="ZZ", population=50000),
    ]
    kept = prune_kb(kb, {"RW"}, {"UG"}, population_floor=50000)
    assert [e.kb_id for e in kept] == ["G1", "G2", "G3"]


def test_prune_floor_is_strict():
    kb = [entry("G1", "GPE", "Border", country="ZZ", population=50000)]
    assert prune_kb(kb, set(), set(), population_floor=50000) == []
    assert prune_kb(kb, set(), set(), population_floor=49999) == kb


def test_prune_loc_same_rule():
    kb = [entry("L1", "LOC", "Far Lake", country="ZZ", population=0)]
    assert prune_kb(kb, {"RW"}, set()) == []


# --- candidate translations ----------------------------------------------------


def test_candidates_pool_lexicons_in_priority_order():
    lex1 = Lexicon.from_pairs([("kigari", "kigali", 1.0)])
    lex2 = Lexicon.from_pairs([("kigari", "capital", 0.5)])
    out = candidate_translations(["kigari"], [lex1, lex2])
    assert out == ["kigali", "capital", "kigari"]


def test_candidates_keep_self_last():
    out = candidate_translations(["unknown"], [Lexicon()])
    assert out == ["unknown"]


def test_candidates_k_per_token_limits_each_lexicon():
    lex = Lexicon.from_pairs(
        [("w", "a", 0.9), ("w", "b", 0.8), ("w", "c", 0.7), ("w", "d", 0.6)]
    )
    out = candidate_translations(["w"], [lex], k_per_token=2)
    assert out == ["a", "b", "w"]


def test_candidates_cartesian_capped():
    lex = Lexicon.from_pairs(
        [(f"w{i}", f"t{i}a", 1.0) for i in range(3)]
        + [(f"w{i}", f"t{i}b", 0.5) for i in range(3)]
    )
    out = candidate_translations(["w0", "w1", "w2"], [lex], cap=4)
    assert len(out) == 4
    assert out[0] == "t0a t1a t2a"


def test_candidates_empty_surface():
    assert candidate_translations([], [Lexicon()]) == []


# --- jaccard --------------------------------------------------------------------


def test_jaccard_identical():
    assert jaccard_similarity("lake kivu", "Lake Kivu") == 1.0


def test_jaccard_partial():
    assert jaccard_similarity("lake kivu", "kivu") == pytest.approx(0.5)


def test_jaccard_disjoint():
    assert jaccard_similarity("a b", "c d") == 0.0


def test_jaccard_empty_conventions():
    assert jaccard_similarity("", "") == 1.0
    assert jaccard_similarity("a", "") == 0.0


# --- linking ---------------------------------------------------------------------


def test_link_exact_name_match():
    result = link_mention(mention("Kigali"), KB, [])
    assert result.kb_id == "G0001"
    assert result.score == 1.0
    assert result.method == "exact"


def test_link_through_lexicon():
    lex = Lexicon.from_pairs([("umurwa", "kigali", 1.0)])
    result = link_mention(mention("umurwa"), KB, [lex])
    assert result.kb_id == "G0001"
    assert result.method == "exact"


def test_link_via_alternate_name():
    result = link_mention(mention("Huye"), KB, [])
    assert result.kb_id == "G0002"


def test_link_below_threshold_is_nil():
    result = link_mention(mention("nowhere"), KB, [])
    assert result.kb_id is None
    assert result.method == "nil"


def test_link_partial_score_passes_lower_threshold():
    result = link_mention(mention("Kivu"), KB, [], threshold=0.5)
    assert result.kb_id == "L0001"
    assert result.score == 1.0  # alternate "Kivu" matches exactly


def test_link_type_compatibility_strict():
    # GPE mention cannot land on a LOC entry when compatibility is off
    result = link_mention(
        mention("Kivu", etype="GPE"), KB, [], gpe_loc_compatible=False
    )
    assert result.method == "nil"


def test_link_gpe_loc_interchangeable_by_default():
    result = link_mention(mention("Kivu", etype="GPE"), KB, [])
    assert result.kb_id == "L0001"


def test_link_per_never_matches_gpe():
    kb = [entry("G1", "GPE", "Jordan")]
    result = link_mention(mention("Jordan", etype="PER"), kb, [])
    assert result.method == "nil"


def test_link_tie_prefers_larger_population():
    kb = [
        entry("G9", "GPE", "Twin", population=100),
        entry("G1", "GPE", "Twin", population=5000),
    ]
    result = link_mention(mention("Twin"), kb, [])
    assert result.kb_id == "G1"


def test_link_tie_then_lexicographic_id():
    kb = [
        entry("G9", "GPE", "Twin", population=100),
        entry("G1", "GPE", "Twin", population=100),
    ]
    result = link_mention(mention("Twin"), kb, [])
    assert result.kb_id == "G1"


def test_link_nil_margin_mode():
    kb = [
        entry("G1", "GPE", "Alpha Beta", population=10),
        entry("G2", "GPE", "Alpha Gamma", population=10),
    ]
    # both score 0.5 against "Alpha"; margin 0 keeps the best, margin .2 NILs
    close = link_mention(mention("Alpha"), kb, [], nil_margin=0.2)
    assert close.method == "nil"
    kept = link_mention(mention("Alpha Beta"), kb, [], nil_margin=0.2)
    assert kept.kb_id == "G1"


def test_link_empty_kb_is_nil():
    result = link_mention(mention("Kigali"), [], [])
    assert result.method == "nil"
    assert result.score == 0.0


# --- NIL clustering ----------------------------------------------------------------


def test_cluster_nil_groups_by_normalized_surface():
    results = [
        LinkResult(mention("Gatsibo"), None, 0.0, "nil"),
        LinkResult(mention("#gatsibo"), None, 0.0, "nil"),
        LinkResult(mention("Rukara"), None, 0.0, "nil"),
        LinkResult(mention("gatsibo"), None, 0.0, "nil"),
    ]
    out = cluster_nil(results)
    assert out[0].nil_cluster == "NIL0001"
    assert out[1].nil_cluster == "NIL0001"
    assert out[2].nil_cluster == "NIL0002"
    assert out[3].nil_cluster == "NIL0001"


def test_cluster_nil_leaves_linked_untouched():
    linked = LinkResult(mention("Kigali"), "G0001", 1.0, "exact")
    out = cluster_nil([linked])
    assert out == [linked]


def test_link_id_property():
    nil = LinkResult(mention("x"), None, 0.0, "nil", nil_cluster="NIL0007")
    assert nil.link_id == "NIL0007"
    linked = LinkResult(mention("Kigali"), "G0001", 1.0, "exact")
    assert linked.link_id == "G0001"


def test_kb_entry_validation():
    with pytest.raises(ValueError):
        KbEntry("X1", "CITY", "Bad Type")
    with pytest.raises(ValueError):
        KbEntry("X1", "GPE", "Neg", population=-5)
