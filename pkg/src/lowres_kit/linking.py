"""Entity linking against a GeoNames-style knowledge base.

Mentions are translated word by word through prioritized lexicons, the
translation candidates are scored by token-set Jaccard against every
compatible KB entry's names, and mentions without a good match fall into
surface-form NIL clusters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .gazetteer import ENTITY_TYPES
from .lexicon import Lexicon
from .textnorm import strip_specials

__all__ = [
    "KbEntry",
    "Mention",
    "LinkResult",
    "prune_kb",
    "candidate_translations",
    "jaccard_similarity",
    "link_mention",
    "cluster_nil",
]


@dataclass(frozen=True)
class KbEntry:
    kb_id: str
    entity_type: str
    name: str
    ascii_name: str = ""
    alternate_names: tuple[str, ...] = ()
    country_code: str = ""
    population: int = 0

    def __post_init__(self) -> None:
        if self.entity_type not in ENTITY_TYPES:
            raise ValueError(f"invalid entity type {self.entity_type!r}")
        if self.population < 0:
            raise ValueError(f"negative population for {self.kb_id}")

    def all_names(self) -> list[str]:
        names: list[str] = []
        for name in (self.name, self.ascii_name, *self.alternate_names):
            if name and name not in names:
                names.append(name)
        return names


@dataclass(frozen=True)
class Mention:
    doc_id: str
    seg_id: int
    span: tuple[int, int]
    surface: str
    entity_type: str


@dataclass(frozen=True)
class LinkResult:
    mention: Mention
    kb_id: str | None
    score: float
    method: str  # "exact", "translation", or "nil"
    nil_cluster: str | None = None

    @property
    def link_id(self) -> str:
        """kb_id for linked mentions, NIL cluster id otherwise."""
        if self.kb_id is not None:
            return self.kb_id
        return self.nil_cluster or "NIL"


def prune_kb(
    kb: Iterable[KbEntry],
    incident_countries: set[str],
    neighbor_countries: set[str],
    population_floor: int = 50000,
) -> list[KbEntry]:
    """Keep PER/ORG always; GPE/LOC only when in-region or populous.

    A GPE or LOC entry survives iff its country is the incident country or
    a neighbor, or its population strictly exceeds population_floor.
    """
    region = set(incident_countries) | set(neighbor_countries)
    return [
        entry
        for entry in kb
        if entry.entity_type in ("PER", "ORG")
        or entry.country_code in region
        or entry.population > population_floor
    ]


def candidate_translations(
    surface_tokens: Sequence[str],
    lexicons: Sequence[Lexicon],
    k_per_token: int = 3,
    cap: int = 64,
) -> list[str]:
    """Word-by-word translation candidates for a mention surface.

    Per token, the top-k targets of each lexicon are pooled in lexicon
    priority order, with the original token appended last. Candidates are
    the cartesian products joined by spaces, kept in priority order and
    capped at `cap`.
    """
    if not surface_tokens:
        return []
    per_token: list[list[str]] = []
    for token in surface_tokens:
        options: list[str] = []
        for lexicon in lexicons:
            for target, _ in lexicon.translations(token)[:k_per_token]:
                if target not in options:
                    options.append(target)
        if token not in options:
            options.append(token)
        per_token.append(options)
    candidates: list[str] = []
    for combo in itertools.product(*per_token):
        candidate = " ".join(combo)
        if candidate not in candidates:
            candidates.append(candidate)
            if len(candidates) >= cap:
                break
    return candidates


def jaccard_similarity(a: str, b: str) -> float:
    """Jaccard over lowercased whitespace-token sets."""
    set_a = set(a.lower().split())
    set_b = set(b.lower().split())
    if not set_a and not set_b:
        return 1.0
    if not set_a or not set_b:
        return 0.0
    return len(set_a & set_b) / len(set_a | set_b)


def _compatible_types(mention_type: str, gpe_loc_compatible: bool) -> set[str]:
    if gpe_loc_compatible and mention_type in ("GPE", "LOC"):
        return {"GPE", "LOC"}
    return {mention_type}


def link_mention(
    mention: Mention,
    kb_pruned: Sequence[KbEntry],
    lexicons: Sequence[Lexicon],
    threshold: float = 0.5,
    gpe_loc_compatible: bool = True,
    nil_margin: float | None = None,
    k_per_token: int = 3,
    cap: int = 64,
) -> LinkResult:
    """Best-Jaccard link for one mention, or NIL.

    Every candidate translation is scored against every name of every
    type-compatible entry; the best entry wins, ties broken by larger
    population then lexicographic kb_id. The default NIL rule is
    best score < threshold; with nil_margin set, the margin between the two
    best entries decides instead.
    """
    compatible = _compatible_types(mention.entity_type, gpe_loc_compatible)
    candidates = candidate_translations(
        mention.surface.split(), lexicons, k_per_token=k_per_token, cap=cap
    )
    scored: list[tuple[float, int, str, KbEntry]] = []
    for entry in kb_pruned:
        if entry.entity_type not in compatible:
            continue
        score = 0.0
        for name in entry.all_names():
            for candidate in candidates:
                value = jaccard_similarity(candidate, name)
                if value > score:
                    score = value
        scored.append((score, -entry.population, entry.kb_id, entry))

    if not scored:
        return LinkResult(mention, None, 0.0, "nil")
    scored.sort(key=lambda item: (-item[0], item[1], item[2]))
    best_score, _, _, best_entry = scored[0]
    second_score = scored[1][0] if len(scored) > 1 else 0.0

    if nil_margin is not None:
        is_nil = (best_score - second_score) < nil_margin
    else:
        is_nil = best_score < threshold
    if is_nil or best_score <= 0.0:
        return LinkResult(mention, None, best_score, "nil")
    method = "exact" if best_score == 1.0 else "translation"
    return LinkResult(mention, best_entry.kb_id, best_score, method)


def _nil_surface_key(surface: str) -> str:
    return strip_specials(surface.lower())


def cluster_nil(results: Sequence[LinkResult]) -> list[LinkResult]:
    """Assign NILxxxx cluster ids by normalized surface, first-seen order."""
    clusters: dict[str, str] = {}
    out: list[LinkResult] = []
    for result in results:
        if result.method != "nil":
            out.append(result)
            continue
        key = _nil_surface_key(result.mention.surface)
        cluster = clusters.get(key)
        if cluster is None:
            cluster = f"NIL{len(clusters) + 1:04d}"
            clusters[key] = cluster
        out.append(replace(result, nil_cluster=cluster))
    return out
