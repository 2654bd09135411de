"""Core data model: feature vectors, matrices, language metadata, datasets.

Feature values live in float64 arrays where ``NaN`` encodes a missing cell
(the ``--`` marker in the text formats).  All containers are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterator, Mapping, Optional

import numpy as np

from .errors import (
    AsymmetricReferenceError,
    DuplicateLanguageError,
    MissingAggregateError,
    MissingReferenceError,
    SchemaMismatchError,
    UnknownLanguageError,
    ValueOutOfRangeError,
)

MISSING_MARKER = "--"

TYPOLOGICAL_CLASSES = ("syntax", "phonology", "inventory")
FEATURE_CLASSES = TYPOLOGICAL_CLASSES + ("family", "geography")
AGGREGATIONS = ("union", "average", "knn")

# Bucket used by coverage reports for languages without a family path.
UNKNOWN_FAMILY = "isolate/unknown"


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=np.float64, order="C", copy=True)
    out.setflags(write=False)
    return out


def _vector_values(v) -> np.ndarray:
    if isinstance(v, FeatureVector):
        return v.values
    return np.asarray(v, dtype=np.float64)


def is_empty_vector(v) -> bool:
    """True iff every entry of the vector is missing."""
    return bool(np.isnan(_vector_values(v)).all())


def nonmissing_count(v) -> int:
    """Number of present (non-missing) entries."""
    values = _vector_values(v)
    return int(values.size - np.isnan(values).sum())


@dataclass(frozen=True)
class FeatureVector:
    """One language's values for one feature class, aligned to a schema."""

    language: str
    feature_class: str
    values: np.ndarray

    def __post_init__(self):
        values = _freeze(np.atleast_1d(self.values))
        if values.ndim != 1 or values.size == 0:
            raise ValueOutOfRangeError(
                f"feature vector for {self.language!r} must be 1-D and non-empty"
            )
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def is_empty(self) -> bool:
        return is_empty_vector(self.values)

    def nonmissing_count(self) -> int:
        return nonmissing_count(self.values)


def _check_binary(values: np.ndarray, what: str) -> None:
    present = values[~np.isnan(values)]
    if present.size and not np.isin(present, (0.0, 1.0)).all():
        bad = present[~np.isin(present, (0.0, 1.0))][0]
        raise SchemaMismatchError(f"{what} must hold binary cells, found {bad!r}")


def _check_unit_interval(values: np.ndarray, what: str) -> None:
    present = values[~np.isnan(values)]
    if present.size and ((present < 0.0) | (present > 1.0)).any():
        bad = present[(present < 0.0) | (present > 1.0)][0]
        raise ValueOutOfRangeError(f"{what} cell {bad!r} outside [0, 1]")


@dataclass(frozen=True)
class FeatureMatrix:
    """Languages x features grid for one feature class.

    Rows are stored sorted by language code; the schema keeps the column
    order it was built with.
    """

    feature_class: str
    schema: tuple[str, ...]
    codes: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        schema = tuple(self.schema)
        if not schema:
            raise SchemaMismatchError("matrix schema must name at least one feature")
        if len(set(schema)) != len(schema):
            raise SchemaMismatchError("matrix schema contains duplicate feature names")
        codes = tuple(self.codes)
        if len(set(codes)) != len(codes):
            dupes = sorted({c for c in codes if codes.count(c) > 1})
            raise DuplicateLanguageError(f"duplicate language codes: {dupes}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(codes), len(schema)):
            raise SchemaMismatchError(
                f"matrix shape {values.shape} does not match "
                f"{len(codes)} languages x {len(schema)} features"
            )
        order = sorted(range(len(codes)), key=lambda i: codes[i])
        codes = tuple(codes[i] for i in order)
        values = _freeze(values[order])
        self._check_values(values)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "values", values)

    def _check_values(self, values: np.ndarray) -> None:
        _check_unit_interval(values, f"{self.feature_class} matrix")

    @cached_property
    def _row_index(self) -> dict[str, int]:
        return {code: i for i, code in enumerate(self.codes)}

    @cached_property
    def empty_mask(self) -> np.ndarray:
        """Per-row flag: True where every cell is missing."""
        mask = np.isnan(self.values).all(axis=1)
        mask.setflags(write=False)
        return mask

    @property
    def n_languages(self) -> int:
        return len(self.codes)

    @property
    def n_features(self) -> int:
        return len(self.schema)

    def __contains__(self, code: str) -> bool:
        return code in self._row_index

    def index(self, code: str) -> int:
        try:
            return self._row_index[code]
        except KeyError:
            raise UnknownLanguageError(
                f"language {code!r} not in {self.feature_class} matrix"
            ) from None

    def row(self, code: str) -> np.ndarray:
        return self.values[self.index(code)]

    def vector(self, code: str) -> FeatureVector:
        return FeatureVector(code, self.feature_class, self.row(code))

    def vectors(self) -> Iterator[FeatureVector]:
        for code in self.codes:
            yield self.vector(code)


@dataclass(frozen=True)
class SourceMatrix(FeatureMatrix):
    """Per-source matrix; all present cells are binary."""

    source_id: str = ""

    def _check_values(self, values: np.ndarray) -> None:
        _check_binary(values, f"source matrix {self.source_id!r}")


@dataclass(frozen=True)
class AggregatedMatrix(FeatureMatrix):
    """Matrix produced by one of the aggregation methods."""

    aggregation: str = "union"

    def _check_values(self, values: np.ndarray) -> None:
        if self.aggregation not in AGGREGATIONS:
            raise SchemaMismatchError(f"unknown aggregation {self.aggregation!r}")
        if self.aggregation == "average":
            _check_unit_interval(values, "average matrix")
        else:
            _check_binary(values, f"{self.aggregation} matrix")
        if self.aggregation == "knn" and np.isnan(values).any():
            raise SchemaMismatchError("knn matrix must not contain missing cells")


@dataclass(frozen=True)
class LanguageMeta:
    """Identity, phylogeny and location facts for one language."""

    code: str
    name: str = ""
    family_path: tuple[str, ...] = ()
    macroarea: Optional[str] = None
    latitude: Optional[float] = None
    longitude: Optional[float] = None
    speaker_rank: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "family_path", tuple(self.family_path))
        if self.speaker_rank is not None and self.speaker_rank < 1:
            raise ValueOutOfRangeError(
                f"speaker_rank for {self.code!r} must be positive"
            )

    @property
    def family(self) -> str:
        """Top-level family bucket used by coverage reports."""
        return self.family_path[0] if self.family_path else UNKNOWN_FAMILY


@dataclass(frozen=True)
class ReferenceStore:
    """Symmetric store of pre-computed pair distances for one feature class.

    Absent pairs are ``NaN`` in the dense backing matrix.
    """

    feature_class: str
    codes: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        codes = tuple(self.codes)
        if len(set(codes)) != len(codes):
            raise DuplicateLanguageError("duplicate codes in reference store")
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.shape != (len(codes), len(codes)):
            raise SchemaMismatchError("reference matrix must be square over codes")
        order = sorted(range(len(codes)), key=lambda i: codes[i])
        codes = tuple(codes[i] for i in order)
        matrix = _freeze(matrix[np.ix_(order, order)])
        present = matrix[~np.isnan(matrix)]
        if present.size and ((present < 0.0) | (present > 1.0)).any():
            bad = present[(present < 0.0) | (present > 1.0)][0]
            raise ValueOutOfRangeError(f"reference distance {bad!r} outside [0, 1]")
        asym = np.nanmax(np.abs(matrix - matrix.T), initial=0.0)
        if asym > 1e-9 or (np.isnan(matrix) != np.isnan(matrix.T)).any():
            raise AsymmetricReferenceError(
                f"reference matrix is asymmetric (max deviation {asym:g})"
            )
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "matrix", matrix)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {code: i for i, code in enumerate(self.codes)}

    def __contains__(self, code: str) -> bool:
        return code in self._index

    def lookup(self, a: str, b: str) -> Optional[float]:
        """Stored distance for the unordered pair, or None when absent."""
        ia, ib = self._index.get(a), self._index.get(b)
        if ia is None or ib is None:
            return None
        value = self.matrix[ia, ib]
        return None if np.isnan(value) else float(value)

    def pairs(self) -> Iterator[tuple[str, str, float]]:
        """All stored unordered pairs (including self-pairs), sorted."""
        rows, cols = np.triu_indices(len(self.codes))
        for i, j in zip(rows, cols):
            value = self.matrix[i, j]
            if not np.isnan(value):
                yield self.codes[i], self.codes[j], float(value)

    @property
    def n_pairs(self) -> int:
        rows, cols = np.triu_indices(len(self.codes))
        return int((~np.isnan(self.matrix[rows, cols])).sum())


@dataclass(frozen=True)
class Dataset:
    """Immutable bundle of everything a run operates on."""

    languages: Mapping[str, LanguageMeta] = field(default_factory=dict)
    sources: tuple[SourceMatrix, ...] = ()
    aggregates: Mapping[tuple[str, str], AggregatedMatrix] = field(default_factory=dict)
    references: Mapping[str, ReferenceStore] = field(default_factory=dict)

    def __post_init__(self):
        languages = MappingProxyType(dict(self.languages))
        sources = tuple(self.sources)
        aggregates = MappingProxyType(dict(self.aggregates))
        references = MappingProxyType(dict(self.references))
        for matrix in list(sources) + list(aggregates.values()):
            for code in matrix.codes:
                if code not in languages:
                    raise UnknownLanguageError(
                        f"language {code!r} in a matrix has no metadata entry"
                    )
        by_class: dict[str, tuple[str, ...]] = {}
        for matrix in list(sources) + list(aggregates.values()):
            seen = by_class.setdefault(matrix.feature_class, matrix.schema)
            if tuple(matrix.schema) != tuple(seen):
                raise SchemaMismatchError(
                    f"matrices for {matrix.feature_class!r} do not share one schema"
                )
        object.__setattr__(self, "languages", languages)
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "aggregates", aggregates)
        object.__setattr__(self, "references", references)

    def aggregate(self, feature_class: str, aggregation: str) -> AggregatedMatrix:
        try:
            return self.aggregates[(feature_class, aggregation)]
        except KeyError:
            raise MissingAggregateError(
                f"no {aggregation} aggregate for {feature_class!r}"
            ) from None

    def reference(self, feature_class: str) -> ReferenceStore:
        try:
            return self.references[feature_class]
        except KeyError:
            raise MissingReferenceError(
                f"no reference distances for {feature_class!r}"
            ) from None

    def sources_for(self, feature_class: str) -> tuple[SourceMatrix, ...]:
        return tuple(m for m in self.sources if m.feature_class == feature_class)

    def with_aggregates(self, new: Mapping[tuple[str, str], AggregatedMatrix]) -> "Dataset":
        """Copy of the dataset with extra aggregated matrices merged in."""
        merged = dict(self.aggregates)
        merged.update(new)
        return Dataset(self.languages, self.sources, merged, self.references)

    def with_references(self, new: Mapping[str, ReferenceStore]) -> "Dataset":
        merged = dict(self.references)
        merged.update(new)
        return Dataset(self.languages, self.sources, self.aggregates, merged)
