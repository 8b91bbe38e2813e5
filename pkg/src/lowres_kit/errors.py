"""Exception types shared across the toolkit.

Every error raised on a contract violation derives from LowresKitError so
callers (and the CLI) can distinguish tool failures from genuine bugs.
"""

from __future__ import annotations


class LowresKitError(Exception):
    """Base class for all toolkit errors."""


class EmptyCorpus(LowresKitError):
    """A corpus-level operation received zero sentences."""


class InsufficientCandidates(LowresKitError):
    """A selection budget exceeds the number of available candidates."""


class TooFewPairs(LowresKitError):
    """Noise injection needs at least two sentence pairs."""


class DegenerateLabels(LowresKitError):
    """Classifier training data contains a single class only."""


class EmptyEntityLexicon(LowresKitError):
    """Entity augmentation requires a non-empty entity lexicon."""


class EmptyClass(LowresKitError):
    """A labelled keyword corpus has a class with no documents."""


class InvalidRange(LowresKitError):
    """A span range falls outside its sentence."""


class ConfigError(LowresKitError):
    """A pipeline configuration is missing fields or out of range."""


class SchemaViolation(LowresKitError):
    """An output file violates its declared schema."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
        self.message = message


class MissingPlaceholderWarning(UserWarning):
    """A translated sentence lost a do-not-translate placeholder."""
