"""Schema validation for output files (CoNLL, EDL TSV, frames JSONL)."""

from __future__ import annotations

import json
import re
from pathlib import Path

from .gazetteer import ENTITY_TYPES
from .sf import SF_TYPES

__all__ = ["SCHEMAS", "validate_file"]

SCHEMAS: tuple[str, ...] = ("conll", "edl-tsv", "frames-jsonl")

_VALID_TAGS = {"O", "UNK"} | {
    f"{prefix}-{t}" for prefix in ("B", "I") for t in ENTITY_TYPES
}
_NIL_PATTERN = re.compile(r"NIL\d+$")
_SPAN_PATTERN = re.compile(r"(\d+):(\d+)-(\d+)$")

Violation = tuple[int, str]


def validate_file(path: str | Path, schema: str) -> list[Violation]:
    """All (line, message) violations; empty list means the file is valid."""
    if schema == "conll":
        return _validate_conll(path)
    if schema == "edl-tsv":
        return _validate_edl(path)
    if schema == "frames-jsonl":
        return _validate_frames(path)
    raise ValueError(f"unknown schema {schema!r}; have {SCHEMAS}")


def _validate_conll(path: str | Path) -> list[Violation]:
    violations: list[Violation] = []
    previous = "O"
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                previous = "O"
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                violations.append((number, f"expected 2 columns, got {len(cols)}"))
                previous = "O"
                continue
            tag = cols[1]
            if tag not in _VALID_TAGS:
                violations.append((number, f"invalid tag {tag!r}"))
                previous = "O"
                continue
            if tag.startswith("I-") and previous not in (f"B-{tag[2:]}", tag):
                violations.append((number, f"{tag} does not continue a span"))
            previous = tag
    return violations


def _validate_edl(path: str | Path) -> list[Violation]:
    violations: list[Violation] = []
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 7:
                violations.append((number, f"expected 7 columns, got {len(cols)}"))
                continue
            _, _, surface, span, link_id, entity_type, confidence = cols
            if not surface:
                violations.append((number, "empty surface"))
            match = _SPAN_PATTERN.fullmatch(span)
            if not match:
                violations.append((number, f"bad span {span!r}"))
            elif int(match.group(2)) >= int(match.group(3)):
                violations.append((number, f"empty span {span!r}"))
            if not link_id:
                violations.append((number, "empty kb/NIL id"))
            if entity_type not in ENTITY_TYPES:
                violations.append((number, f"invalid entity type {entity_type!r}"))
            try:
                value = float(confidence)
            except ValueError:
                violations.append((number, f"bad confidence {confidence!r}"))
            else:
                if not 0.0 <= value <= 1.0:
                    violations.append((number, f"confidence {value} outside [0, 1]"))
    return violations


_FRAME_REQUIRED = (
    "doc_id",
    "type",
    "place_kb_id",
    "justification_seg",
    "status",
    "resolution",
)


def _validate_frames(path: str | Path) -> list[Violation]:
    violations: list[Violation] = []
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                violations.append((number, f"invalid JSON: {exc}"))
                continue
            if not isinstance(record, dict):
                violations.append((number, "frame must be a JSON object"))
                continue
            for fieldname in _FRAME_REQUIRED:
                if fieldname not in record:
                    violations.append((number, f"missing field {fieldname!r}"))
            if "type" in record and record["type"] not in SF_TYPES:
                violations.append((number, f"invalid SF type {record['type']!r}"))
            if record.get("status", "current") != "current":
                violations.append((number, f"status must be 'current', got {record['status']!r}"))
            if record.get("resolution", "insufficient") != "insufficient":
                violations.append(
                    (number, f"resolution must be 'insufficient', got {record['resolution']!r}")
                )
            if "justification_seg" in record and not isinstance(
                record["justification_seg"], int
            ):
                violations.append((number, "justification_seg must be an integer"))
            if "urgency" in record and not isinstance(record["urgency"], bool):
                violations.append((number, "urgency must be a boolean"))
    return violations
