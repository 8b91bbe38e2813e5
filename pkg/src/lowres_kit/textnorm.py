"""Text normalization helpers and edit distance.

Normalization here is deliberately conservative: case folding is applied
only to Latin-script material because the incident languages we target are
either Latin-script (where capitalization carries signal handled elsewhere)
or caseless scripts that must pass through untouched.
"""

from __future__ import annotations

import functools
import unicodedata

__all__ = [
    "nfc",
    "fold_token",
    "strip_specials",
    "normalize_token",
    "levenshtein",
]


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@functools.lru_cache(maxsize=4096)
def _is_latin(ch: str) -> bool:
    if "A" <= ch <= "Z" or "a" <= ch <= "z":
        return True
    if ord(ch) < 128:
        return False
    return unicodedata.name(ch, "").startswith("LATIN")


def fold_token(token: str) -> str:
    """Lowercase a token if it contains Latin script; leave it alone otherwise."""
    if any(_is_latin(ch) for ch in token):
        return token.lower()
    return token


def strip_specials(token: str) -> str:
    """Drop punctuation code points (covers '#', '@', quotes, dashes, ...)."""
    return "".join(ch for ch in token if not unicodedata.category(ch).startswith("P"))


def normalize_token(token: str) -> str:
    """Punctuation-stripped, Latin-folded form used for fuzzy surface keys."""
    return fold_token(strip_specials(token))


def levenshtein(a: str, b: str, *, limit: int | None = None) -> int:
    """Unit-cost edit distance between two strings.

    With `limit`, returns early with any value > limit once the distance
    provably exceeds it; callers comparing against a bound can then prune
    long candidates cheaply.
    """
    if a == b:
        return 0
    if limit is not None and abs(len(a) - len(b)) > limit:
        return limit + 1
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        best = i
        for j, cb in enumerate(b, start=1):
            cost = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            )
            current.append(cost)
            if cost < best:
                best = cost
        if limit is not None and best > limit:
            return best
        previous = current
    return previous[-1]
