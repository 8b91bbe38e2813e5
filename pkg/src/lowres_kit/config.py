"""Pipeline configuration: TOML loading, defaults, and validation.

One TOML file drives every recipe; each recipe reads its own section
(ner_data, edl, mt_data, sf). Relative paths resolve against the config
file's directory. Tunables fall back to fixed defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigError

__all__ = ["DEFAULTS", "PipelineConfig", "load_config"]

DEFAULTS: dict[str, Any] = {
    "swap_rate": 0.1,
    "threshold": 0.5,
    "min_edit_dist": 2,
    "population_floor": 50000,
    "th1": 0.8,
    "neighbor_cos": 0.70,
    "lambda": -1.5,
    "topk_cap": 3,
    "window": 5,
    "negative_top_k": 1500,
    "max_edit": 1,
    "link_threshold": 0.5,
    "top_m": 5,
    "top_t": 2,
    "max_span_len": 5,
    "max_per_sentence": 1,
    "location_window": 1,
    "kb_ngram_max": 4,
    "ni_ngram_max": 4,
    "ni_top_n": 100,
    "keyword_top_n": 100,
    "max_neighbors": 30,
    "seed": 13,
    "epochs": 200,
    "lr": 0.5,
    "l2": 1e-4,
    "n_copies": 1,
    "k_per_token": 3,
    "candidate_cap": 64,
    "n_buckets": 10,
}

# Closed ranges for tunables that have hard bounds; None means unbounded.
_RANGES: dict[str, tuple[float | None, float | None]] = {
    "swap_rate": (0.0, 0.5),
    "threshold": (0.0, 1.0),
    "link_threshold": (0.0, 1.0),
    "th1": (-1.0, 1.0),
    "neighbor_cos": (-1.0, 1.0),
    "min_edit_dist": (1, None),
    "window": (1, None),
    "population_floor": (0, None),
    "topk_cap": (1, None),
    "top_t": (1, None),
    "top_m": (1, None),
    "max_span_len": (1, None),
    "max_per_sentence": (1, None),
    "location_window": (0, None),
    "epochs": (1, None),
    "lr": (0.0, None),
    "l2": (0.0, None),
    "n_copies": (0, None),
    "max_edit": (0, None),
    "kb_ngram_max": (1, None),
    "ni_ngram_max": (1, None),
    "k_per_token": (1, None),
    "candidate_cap": (1, None),
    "n_buckets": (2, None),
}


@dataclass
class PipelineConfig:
    sections: dict[str, dict[str, Any]]
    base_dir: Path = field(default_factory=Path.cwd)
    source_bytes: bytes = b""

    def section(self, name: str) -> dict[str, Any]:
        return self.sections.get(name, {})

    def get(self, section: str, key: str, default: Any = None) -> Any:
        value = self.section(section).get(key)
        if value is None:
            value = DEFAULTS.get(key, default) if default is None else default
        if key in _RANGES and value is not None:
            low, high = _RANGES[key]
            if (low is not None and value < low) or (high is not None and value > high):
                raise ConfigError(
                    f"{section}.{key} = {value!r} outside allowed range"
                    f" [{low}, {'∞' if high is None else high}]"
                )
        return value

    def path(self, section: str, key: str) -> Path | None:
        value = self.section(section).get(key)
        if value is None:
            return None
        return self.base_dir / str(value)

    def paths(self, section: str, key: str) -> list[Path]:
        value = self.section(section).get(key, [])
        if isinstance(value, str):
            value = [value]
        return [self.base_dir / str(v) for v in value]

    def require(self, section: str, keys: list[str], path_keys: list[str]) -> None:
        """Raise ConfigError naming every missing field or absent input file."""
        problems: list[str] = []
        present = self.section(section)
        if not present:
            problems.append(f"missing config section [{section}]")
        for key in keys:
            if key not in present:
                problems.append(f"missing field {section}.{key}")
        for key in path_keys:
            if key not in present:
                continue
            raw = present[key]
            candidates = raw if isinstance(raw, list) else [raw]
            for value in candidates:
                resolved = self.base_dir / str(value)
                if not resolved.exists():
                    problems.append(f"{section}.{key}: no such file {resolved}")
        if problems:
            raise ConfigError("; ".join(problems))


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        sections = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc
    for name, section in sections.items():
        if not isinstance(section, dict):
            raise ConfigError(f"top-level key {name!r} must be a section table")
    return PipelineConfig(
        sections=sections, base_dir=path.resolve().parent, source_bytes=raw
    )
