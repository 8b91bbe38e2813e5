"""Bilingual lexicons: ordered translation lists with weights."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

__all__ = ["Lexicon"]


@dataclass
class Lexicon:
    """source word -> ordered (target word, weight) list.

    Entry order is meaningful: the first target is the preferred
    translation. Loaders preserve input order; pivoting re-sorts by weight.
    """

    entries: dict[str, list[tuple[str, float]]] = field(default_factory=dict)
    source_lang: str = ""
    target_lang: str = ""

    @classmethod
    def from_pairs(
        cls,
        pairs: Iterable[tuple[str, str, float]],
        source_lang: str = "",
        target_lang: str = "",
    ) -> "Lexicon":
        """Build a lexicon, merging duplicate (src, tgt) rows by summing weights."""
        entries: dict[str, dict[str, float]] = {}
        for src, tgt, weight in pairs:
            if weight < 0:
                raise ValueError(f"negative lexicon weight for {src!r} -> {tgt!r}")
            targets = entries.setdefault(src, {})
            targets[tgt] = targets.get(tgt, 0.0) + weight
        return cls(
            entries={src: list(targets.items()) for src, targets in entries.items()},
            source_lang=source_lang,
            target_lang=target_lang,
        )

    def translations(self, word: str) -> list[tuple[str, float]]:
        return self.entries.get(word, [])

    def top(self, word: str) -> str | None:
        targets = self.entries.get(word)
        return targets[0][0] if targets else None

    def invert(self) -> "Lexicon":
        inverted: dict[str, dict[str, float]] = {}
        for src, targets in self.entries.items():
            for tgt, weight in targets:
                sources = inverted.setdefault(tgt, {})
                sources[src] = max(sources.get(src, 0.0), weight)
        return Lexicon(
            entries={t: list(s.items()) for t, s in inverted.items()},
            source_lang=self.target_lang,
            target_lang=self.source_lang,
        )

    def __len__(self) -> int:
        return len(self.entries)
