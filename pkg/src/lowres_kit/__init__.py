"""Deterministic text-processing toolkit for low-resource incident languages.

Data selection, parallel-corpus cleaning, gazetteer NER, entity linking,
situation-frame detection, uncertainty-based span selection, and rule-table
transliteration, plus file-based recipes tying them together.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateLabels,
    EmptyClass,
    EmptyCorpus,
    EmptyEntityLexicon,
    InsufficientCandidates,
    InvalidRange,
    LowresKitError,
    MissingPlaceholderWarning,
    SchemaViolation,
    TooFewPairs,
)

__all__ = [
    "__version__",
    "LowresKitError",
    "ConfigError",
    "DegenerateLabels",
    "EmptyClass",
    "EmptyCorpus",
    "EmptyEntityLexicon",
    "InsufficientCandidates",
    "InvalidRange",
    "MissingPlaceholderWarning",
    "SchemaViolation",
    "TooFewPairs",
]
