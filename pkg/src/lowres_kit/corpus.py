"""Corpus model: documents, genres, tokenization, n-gram extraction.

Offsets are code-point based and every token satisfies
``token.surface == text[token.start:token.end]``, so downstream span
annotations can always be mapped back onto the raw segment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .textnorm import nfc

__all__ = [
    "Genre",
    "GENRE_ORDER",
    "Document",
    "Token",
    "tokenize",
    "surfaces",
    "extract_ngrams",
]


class Genre(str, Enum):
    NW = "NW"
    SN = "SN"
    WL = "WL"
    OTHER = "OTHER"

    @classmethod
    def parse(cls, value: str) -> "Genre":
        """Map a raw genre string to a known genre, defaulting to OTHER."""
        try:
            return cls(value.strip().upper())
        except ValueError:
            return cls.OTHER


# Canonical order used wherever per-genre ties must break deterministically.
GENRE_ORDER: tuple[Genre, ...] = (Genre.NW, Genre.SN, Genre.WL, Genre.OTHER)


@dataclass
class Document:
    doc_id: str
    genre: Genre
    segments: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.segments = [nfc(s) for s in self.segments]

    def tokenized(self) -> list[list["Token"]]:
        return [tokenize(segment) for segment in self.segments]


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int

    @property
    def is_capitalized(self) -> bool:
        return bool(self.surface) and self.surface[0].isupper()


# Specials are matched in a single pre-pass; alternation order (URL, email,
# mention, hashtag) resolves overlaps at the same start position.
_SPECIAL = re.compile(
    r"[A-Za-z][A-Za-z0-9+.\-]*://\S+"
    r"|www\.\S+"
    r"|[\w.+\-]+@[\w\-]+(?:\.[\w\-]+)+"
    r"|@\w+"
    r"|#\w+"
)


def tokenize(text: str) -> list[Token]:
    """Split a segment into tokens.

    URLs, e-mail addresses, @-mentions and #-hashtags survive as single
    tokens; outside of those, maximal alphanumeric runs become tokens and
    any other non-space character becomes a token of its own.
    """
    tokens: list[Token] = []
    pos = 0
    for match in _SPECIAL.finditer(text):
        _scan_plain(text, pos, match.start(), tokens)
        tokens.append(Token(match.group(), match.start(), match.end()))
        pos = match.end()
    _scan_plain(text, pos, len(text), tokens)
    return tokens


def _scan_plain(text: str, start: int, end: int, out: list[Token]) -> None:
    i = start
    while i < end:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isalnum():
            j = i + 1
            while j < end and text[j].isalnum():
                j += 1
            out.append(Token(text[i:j], i, j))
            i = j
        else:
            out.append(Token(ch, i, i + 1))
            i += 1


def surfaces(tokens: Iterable[Token]) -> list[str]:
    return [t.surface for t in tokens]


def extract_ngrams(
    tokens: Sequence[str], n_max: int
) -> Iterator[tuple[tuple[str, ...], int]]:
    """Yield all n-grams up to length n_max as (ngram, start_index).

    Order is by start position, then by length, so output is deterministic
    for any input sequence.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    length = len(tokens)
    for start in range(length):
        top = min(n_max, length - start)
        for n in range(1, top + 1):
            yield tuple(tokens[start : start + n]), start
