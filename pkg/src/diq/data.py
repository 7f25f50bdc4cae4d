"""Domain types and JSONL I/O for datasets, difficulty/influence score tables.

File formats are newline-delimited JSON, UTF-8, one record per line:

* dataset file:  {"id": str, "query": str, "answer": str, ...extra}
* score file:    {"id": str, "knowledge": int, "reasoning": int,
                  "overall": int, "influence": float}

Unknown extra fields on dataset records are preserved on round-trip but
otherwise ignored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

__all__ = [
    "SchemaError",
    "Sample",
    "Dataset",
    "DifficultyScores",
    "ScoredSample",
    "ScoreTable",
    "ValidationReport",
    "load_dataset",
    "write_dataset",
    "load_scores",
    "write_scores",
    "validate_scores",
]

LIKERT_FIELDS = ("knowledge", "reasoning", "overall")
DATASET_FIELDS = ("id", "query", "answer")


class SchemaError(ValueError):
    """Malformed or invariant-violating record in an input file."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Sample:
    """One instruction-following instance."""

    id: str
    query: str
    answer: str
    extra: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.id:
            raise SchemaError("sample id must be a non-empty string")
        if not self.query:
            raise SchemaError(f"sample {self.id!r}: empty query")
        if not self.answer:
            raise SchemaError(f"sample {self.id!r}: empty answer")

    def to_record(self) -> dict:
        rec = dict(self.extra)
        rec.update(id=self.id, query=self.query, answer=self.answer)
        return rec


class Dataset:
    """Ordered collection of samples with unique ids."""

    def __init__(self, samples: Iterable[Sample]):
        self.samples = list(samples)
        seen = set()
        for s in self.samples:
            if s.id in seen:
                raise SchemaError(f"duplicate sample id {s.id!r}")
            seen.add(s.id)
        self._by_id = {s.id: s for s in self.samples}

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def __eq__(self, other):
        return isinstance(other, Dataset) and self.samples == other.samples

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.samples]

    def by_id(self, sample_id: str) -> Sample:
        return self._by_id[sample_id]

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._by_id


def _check_likert(name: str, value) -> int:
    # bool is an int subclass; floats are rejected rather than rounded so
    # upstream pipeline mismatches surface immediately.
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{name} must be an integer, got {value!r}")
    if not 1 <= value <= 5:
        raise SchemaError(f"{name}={value} outside Likert range [1, 5]")
    return value


@dataclass(frozen=True)
class DifficultyScores:
    """Likert 1-5 ratings along the three difficulty dimensions."""

    knowledge: int
    reasoning: int
    overall: int

    def __post_init__(self):
        for name in LIKERT_FIELDS:
            _check_likert(name, getattr(self, name))

    def get(self, dimension: str) -> int:
        if dimension not in LIKERT_FIELDS:
            raise ValueError(f"unknown difficulty dimension {dimension!r}")
        return getattr(self, dimension)


@dataclass(frozen=True)
class ScoredSample:
    """Difficulty and influence attached to one sample id."""

    sample_id: str
    difficulty: DifficultyScores
    influence: float

    def __post_init__(self):
        influence = float(self.influence)
        if not math.isfinite(influence):
            raise SchemaError(
                f"sample {self.sample_id!r}: influence must be finite, "
                f"got {self.influence!r}"
            )
        object.__setattr__(self, "influence", influence)


class ScoreTable:
    """Map of sample id to scored entry, plus free-text provenance."""

    def __init__(self, entries: Iterable[ScoredSample], provenance: str = ""):
        self.entries: dict[str, ScoredSample] = {}
        for e in entries:
            if e.sample_id in self.entries:
                raise SchemaError(f"duplicate score id {e.sample_id!r}")
            self.entries[e.sample_id] = e
        self.provenance = provenance

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self.entries

    def __getitem__(self, sample_id: str) -> ScoredSample:
        return self.entries[sample_id]


@dataclass
class ValidationReport:
    """Coverage check of a score table against a dataset."""

    missing: list[str]
    orphans: list[str]
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not (self.missing or self.orphans or self.violations)


def _iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON ({exc.msg})", lineno) from exc
            if not isinstance(obj, dict):
                raise SchemaError("record is not a JSON object", lineno)
            yield lineno, obj


def load_dataset(path) -> Dataset:
    """Read a JSONL dataset file, preserving record order."""
    samples = []
    seen: dict[str, int] = {}
    for lineno, obj in _iter_jsonl(path):
        for name in DATASET_FIELDS:
            if name not in obj:
                raise SchemaError(f"missing field {name!r}", lineno)
            if not isinstance(obj[name], str):
                raise SchemaError(f"field {name!r} must be a string", lineno)
        if obj["id"] in seen:
            raise SchemaError(
                f"duplicate id {obj['id']!r} (first seen on line {seen[obj['id']]})",
                lineno,
            )
        seen[obj["id"]] = lineno
        extra = {k: v for k, v in obj.items() if k not in DATASET_FIELDS}
        try:
            samples.append(
                Sample(id=obj["id"], query=obj["query"], answer=obj["answer"], extra=extra)
            )
        except SchemaError as exc:
            raise SchemaError(str(exc), lineno) from exc
    return Dataset(samples)


def write_dataset(dataset: Iterable[Sample], path) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        for s in dataset:
            f.write(json.dumps(s.to_record(), sort_keys=True) + "\n")


def load_scores(path, provenance: str = "") -> ScoreTable:
    """Read a JSONL score file into a validated ScoreTable."""
    entries = []
    seen: dict[str, int] = {}
    for lineno, obj in _iter_jsonl(path):
        for name in ("id", *LIKERT_FIELDS, "influence"):
            if name not in obj:
                raise SchemaError(f"missing field {name!r}", lineno)
        if obj["id"] in seen:
            raise SchemaError(f"duplicate id {obj['id']!r}", lineno)
        seen[obj["id"]] = lineno
        try:
            difficulty = DifficultyScores(
                *(obj[name] for name in LIKERT_FIELDS)
            )
            influence = obj["influence"]
            if not isinstance(influence, (int, float)) or isinstance(influence, bool):
                raise SchemaError("influence must be a number")
            entries.append(ScoredSample(obj["id"], difficulty, float(influence)))
        except SchemaError as exc:
            raise SchemaError(str(exc), lineno) from exc
    return ScoreTable(entries, provenance=provenance or str(path))


def write_scores(table: ScoreTable, path) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        for entry in table.entries.values():
            rec = {
                "id": entry.sample_id,
                "knowledge": entry.difficulty.knowledge,
                "reasoning": entry.difficulty.reasoning,
                "overall": entry.difficulty.overall,
                "influence": entry.influence,
            }
            f.write(json.dumps(rec) + "\n")


def validate_scores(table: ScoreTable, dataset: Dataset) -> ValidationReport:
    """Report missing ids, orphan ids, and per-field violations.

    The report is ``ok`` iff the table covers the dataset exactly.
    Field-level invariants are enforced at construction time, so
    ``violations`` only flags dangling references discovered at join time.
    """
    dataset_ids = set(dataset.ids)
    table_ids = set(table.entries)
    missing = sorted(dataset_ids - table_ids)
    orphans = sorted(table_ids - dataset_ids)
    return ValidationReport(missing=missing, orphans=orphans, violations=[])
