"""Rule-table grapheme-to-phoneme conversion with backoff chains.

Tables are plain CSV data (lhs,rhs per row). Conversion is greedy
longest-match; characters no table covers pass through verbatim. A backoff
chain retries the characters one table left unconsumed with the next table,
which handles mixed-script tokens.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

__all__ = [
    "RuleTable",
    "load_rule_table",
    "builtin_table",
    "BUILTIN_TABLES",
    "g2p_apply",
    "g2p_backoff",
    "reromanize",
]


@dataclass(frozen=True)
class RuleTable:
    table_id: str
    rules: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        mapping: dict[str, str] = {}
        for lhs, rhs in self.rules:
            if not lhs:
                raise ValueError(f"empty rule left-hand side in table {self.table_id}")
            # First occurrence wins: longest-match-first, then file order.
            mapping.setdefault(lhs, rhs)
        object.__setattr__(self, "_mapping", mapping)
        object.__setattr__(self, "_max_len", max((len(l) for l in mapping), default=0))

    def match(self, text: str, pos: int) -> tuple[int, str] | None:
        """Longest rule matching text at pos, as (length, rhs)."""
        top = min(self._max_len, len(text) - pos)
        for length in range(top, 0, -1):
            rhs = self._mapping.get(text[pos : pos + length])
            if rhs is not None:
                return length, rhs
        return None


def load_rule_table(rows: Iterable[str], table_id: str) -> RuleTable:
    """Parse lhs,rhs CSV rows (in application order) into a table."""
    rules: list[tuple[str, str]] = []
    for row in csv.reader(rows):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise ValueError(f"table {table_id}: expected 2 columns, got {row!r}")
        rules.append((row[0], row[1]))
    return RuleTable(table_id, tuple(rules))


BUILTIN_TABLES: tuple[str, ...] = ("latin", "sinhala", "roman")


def builtin_table(name: str) -> RuleTable:
    """One of the bundled tables: latin/sinhala (to IPA), roman (IPA to ASCII)."""
    if name not in BUILTIN_TABLES:
        raise ValueError(f"unknown builtin table {name!r}; have {BUILTIN_TABLES}")
    text = resources.files("lowres_kit.data").joinpath(f"{name}.csv").read_text("utf-8")
    return load_rule_table(text.splitlines(), name)


def _pieces(token: str, table: RuleTable) -> list[tuple[int, int, str, bool]]:
    """Greedy scan into (start, end, output, consumed) pieces."""
    pieces: list[tuple[int, int, str, bool]] = []
    pos = 0
    while pos < len(token):
        hit = table.match(token, pos)
        if hit is None:
            pieces.append((pos, pos + 1, token[pos], False))
            pos += 1
        else:
            length, rhs = hit
            pieces.append((pos, pos + length, rhs, True))
            pos += length
    return pieces


def g2p_apply(token: str, table: RuleTable) -> tuple[str, list[bool]]:
    """Convert one token; the mask marks which input characters a rule consumed."""
    consumed = [False] * len(token)
    out: list[str] = []
    for start, end, text, used in _pieces(token, table):
        out.append(text)
        if used:
            for i in range(start, end):
                consumed[i] = True
    return "".join(out), consumed


def g2p_backoff(token: str, chain: Sequence[RuleTable]) -> str:
    """Convert with a table chain; unconsumed runs retry with later tables."""
    if not chain:
        raise ValueError("backoff chain must contain at least one table")
    return _convert(token, list(chain))


def _convert(segment: str, tables: list[RuleTable]) -> str:
    if not tables:
        return segment
    head, rest = tables[0], tables[1:]
    out: list[str] = []
    run_start: int | None = None
    for start, end, text, used in _pieces(segment, head):
        if used:
            if run_start is not None:
                out.append(_convert(segment[run_start:start], rest))
                run_start = None
            out.append(text)
        else:
            if run_start is None:
                run_start = start
    if run_start is not None:
        out.append(_convert(segment[run_start:], rest))
    return "".join(out)


def reromanize(ipa: str, roman_table: RuleTable) -> str:
    """Map an IPA string to its ASCII romanization; unmapped characters pass."""
    return g2p_apply(ipa, roman_table)[0]
