"""Combining per-source binary matrices into one matrix per feature class.

Three recipes:

* union    - a feature is 1 if any source says 1, 0 if at least one source
  reports it and none say 1, missing otherwise.
* average  - mean over the sources that report the feature; stays missing
  only when no source reports it.
* knn      - starts from the union and fills each remaining gap by majority
  vote among the k nearest languages that do report the feature, nearness
  being a weighted blend of genetic, geographic and featural distance.

Sources with different column sets are first aligned onto the union schema
(column order is first appearance across sources).
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Mapping, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .distance import PairwiseLanguageDistance
from .errors import (
    InsufficientNeighborsError,
    LanguageSetMismatchError,
    MissingAggregateError,
    MissingMetaError,
    SchemaMismatchError,
)
from .model import AggregatedMatrix, Dataset, LanguageMeta, SourceMatrix
from .validation import check_aggregation, check_sources, check_weights

EARTH_RADIUS_KM = 6371.0088
#: Half the Earth's circumference at the mean radius: the largest possible
#: great-circle separation, used to normalize geographic distance onto [0, 1].
MAX_EARTH_KM = math.pi * EARTH_RADIUS_KM


def align_sources(sources: Sequence[SourceMatrix]) -> tuple[SourceMatrix, ...]:
    """Expand each source onto the union schema of all of them.

    Columns a source lacks are filled with missing values. Column order is
    first appearance across the sources in the given order.
    """
    sources = check_sources(sources)
    schema: list[str] = []
    seen: set[str] = set()
    for src in sources:
        for name in src.schema:
            if name not in seen:
                seen.add(name)
                schema.append(name)
    target = tuple(schema)
    aligned = []
    for src in sources:
        if src.schema == target:
            aligned.append(src)
            continue
        values = np.full((src.n_languages, len(target)), np.nan)
        for col, name in enumerate(src.schema):
            values[:, target.index(name)] = src.values[:, col]
        aligned.append(replace(src, schema=target, values=values))
    return tuple(aligned)


def stack_sources(
    sources: Sequence[SourceMatrix],
) -> tuple[tuple[str, ...], tuple[str, ...], np.ndarray]:
    """Aligned sources as one (n_sources, n_languages, n_features) cube.

    Languages are the sorted union of all source codes; a source that does
    not cover a language contributes a fully missing layer row.
    """
    aligned = align_sources(sources)
    codes = tuple(sorted({c for src in aligned for c in src.codes}))
    schema = aligned[0].schema
    cube = np.full((len(aligned), len(codes), len(schema)), np.nan)
    index = {code: i for i, code in enumerate(codes)}
    for layer, src in enumerate(aligned):
        rows = [index[c] for c in src.codes]
        cube[layer, rows, :] = src.values
    return schema, codes, cube


def aggregate_union(sources: Sequence[SourceMatrix]) -> AggregatedMatrix:
    """Any source saying 1 wins; reported-but-never-1 becomes 0."""
    schema, codes, cube = stack_sources(sources)
    any_one = (cube == 1.0).any(axis=0)
    any_present = (~np.isnan(cube)).any(axis=0)
    values = np.where(any_one, 1.0, np.where(any_present, 0.0, np.nan))
    return AggregatedMatrix(
        feature_class=sources[0].feature_class,
        schema=schema, codes=codes, values=values, aggregation="union",
    )


def aggregate_average(sources: Sequence[SourceMatrix]) -> AggregatedMatrix:
    """Mean over reporting sources; missing only where nobody reports."""
    schema, codes, cube = stack_sources(sources)
    present = ~np.isnan(cube)
    sums = np.where(present, cube, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore"):
        values = sums / present.sum(axis=0)
    return AggregatedMatrix(
        feature_class=sources[0].feature_class,
        schema=schema, codes=codes, values=values, aggregation="average",
    )


def genetic_distance(a: LanguageMeta, b: LanguageMeta) -> float:
    """1 minus the shared family-path prefix fraction.

    An empty path (unknown lineage) matches nothing, so the distance to
    anything, including another unknown, is 1.
    """
    pa, pb = a.family_path, b.family_path
    longest = max(len(pa), len(pb))
    if longest == 0:
        return 1.0
    shared = 0
    for x, y in zip(pa, pb):
        if x != y:
            break
        shared += 1
    return 1.0 - shared / longest


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in kilometres on the mean-radius sphere."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def geographic_distance(a: LanguageMeta, b: LanguageMeta) -> float:
    """Haversine distance scaled onto [0, 1]; missing coordinates give 1."""
    if a.latitude is None or a.longitude is None:
        return 1.0
    if b.latitude is None or b.longitude is None:
        return 1.0
    return haversine_km(a.latitude, a.longitude, b.latitude, b.longitude) / MAX_EARTH_KM


def _blended_distances(
    union: AggregatedMatrix,
    metadata: Mapping[str, LanguageMeta],
    weights: tuple[float, float, float],
) -> np.ndarray:
    """Square matrix of weighted genetic + geographic + featural distance."""
    codes = union.codes
    metas = []
    for code in codes:
        meta = metadata.get(code)
        if meta is None:
            raise MissingMetaError(
                f"no metadata for language {code!r}; neighbour aggregation "
                "needs lineage and coordinates for every language"
            )
        metas.append(meta)
    n = len(codes)
    w_gen, w_geo, w_feat = weights
    blend = np.zeros((n, n))
    if w_feat > 0.0:
        engine = PairwiseLanguageDistance(
            metric="angular", regularized=True, policy="paper"
        ).fit(union)
        blend += w_feat * engine.transform()
    for i in range(n):
        for j in range(i + 1, n):
            d = (w_gen * genetic_distance(metas[i], metas[j])
                 + w_geo * geographic_distance(metas[i], metas[j]))
            blend[i, j] += d
            blend[j, i] += d
    return blend


def aggregate_knn(
    sources: Sequence[SourceMatrix],
    metadata: Mapping[str, LanguageMeta],
    *,
    k: int = 10,
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3),
    tie_value: float = 1.0,
) -> AggregatedMatrix:
    """Union aggregation with every remaining gap voted in by neighbours.

    For a missing cell (language, feature) the candidates are all other
    languages whose union value for that feature is present. The k nearest
    by the blended distance vote with their values; the majority wins, an
    exact tie or an empty candidate set yields ``tie_value``. Ties in the
    distance ranking are broken by language position so the outcome never
    depends on iteration order.
    """
    weights = check_weights(weights)
    if k < 1:
        raise InsufficientNeighborsError(f"k must be at least 1, got {k}")
    union = aggregate_union(sources)
    n = union.n_languages
    if n < 2:
        raise InsufficientNeighborsError(
            f"neighbour voting needs at least 2 languages, got {n}"
        )
    blend = _blended_distances(union, metadata, weights)
    values = union.values.copy()
    present = ~np.isnan(union.values)
    for i in range(n):
        gaps = np.flatnonzero(~present[i])
        if gaps.size == 0:
            continue
        order = np.lexsort((np.arange(n), blend[i]))
        order = order[order != i]
        for f in gaps:
            candidates = order[present[order, f]]
            if candidates.size == 0:
                values[i, f] = tie_value
                continue
            votes = values[candidates[:k], f]
            mean = votes.mean()
            if mean > 0.5:
                values[i, f] = 1.0
            elif mean < 0.5:
                values[i, f] = 0.0
            else:
                values[i, f] = tie_value
    return AggregatedMatrix(
        feature_class=union.feature_class,
        schema=union.schema, codes=union.codes, values=values,
        aggregation="knn",
    )


def union_average_equality(
    union: AggregatedMatrix, average: AggregatedMatrix
) -> float:
    """Percentage of languages whose union and average rows agree cell-wise.

    Missing cells count as agreeing only with missing cells.
    """
    if union.codes != average.codes:
        raise LanguageSetMismatchError(
            "union and average matrices cover different languages"
        )
    if union.schema != average.schema:
        raise SchemaMismatchError(
            "union and average matrices have different schemas"
        )
    same = (union.values == average.values) | (
        np.isnan(union.values) & np.isnan(average.values)
    )
    return 100.0 * float(same.all(axis=1).mean())


def ensure_aggregate(
    dataset: Dataset,
    feature_class: str,
    aggregation: str,
    *,
    k: int = 10,
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3),
    tie_value: float = 1.0,
) -> AggregatedMatrix:
    """The stored aggregate when present, otherwise one computed from the
    dataset's sources for that class."""
    check_aggregation(aggregation)
    try:
        return dataset.aggregate(feature_class, aggregation)
    except MissingAggregateError:
        sources = dataset.sources_for(feature_class)
        if not sources:
            raise MissingAggregateError(
                f"no stored {feature_class}/{aggregation} aggregate and no "
                f"{feature_class} sources to compute one from"
            ) from None
    if aggregation == "union":
        return aggregate_union(sources)
    if aggregation == "average":
        return aggregate_average(sources)
    return aggregate_knn(
        sources, dataset.languages, k=k, weights=weights, tie_value=tie_value
    )


class _SourceAggregator(BaseEstimator):
    """Shared estimator plumbing for the aggregation recipes.

    TransformerMixin is left out on purpose: its transform wrapper insists
    on a positional X, while these transformers return an AggregatedMatrix
    (not an array) and default to the fitted sources.
    """

    def fit(self, X: Sequence[SourceMatrix], y=None):
        self.sources_ = check_sources(X)
        return self

    def fit_transform(self, X: Sequence[SourceMatrix], y=None, **fit_params):
        return self.fit(X, y, **fit_params).transform()

    def _fitted_sources(self, X) -> tuple[SourceMatrix, ...]:
        if X is not None:
            return check_sources(X)
        if not hasattr(self, "sources_"):
            raise NotFittedError("fit on a list of source matrices first")
        return self.sources_


class UnionAggregator(_SourceAggregator):
    """Estimator form of :func:`aggregate_union`."""

    def transform(self, X: Optional[Sequence[SourceMatrix]] = None) -> AggregatedMatrix:
        return aggregate_union(self._fitted_sources(X))


class AverageAggregator(_SourceAggregator):
    """Estimator form of :func:`aggregate_average`."""

    def transform(self, X: Optional[Sequence[SourceMatrix]] = None) -> AggregatedMatrix:
        return aggregate_average(self._fitted_sources(X))


class KnnAggregator(_SourceAggregator):
    """Estimator form of :func:`aggregate_knn`.

    The voting knobs (k, the three blend weights, the tie value) are
    constructor parameters so they surface through ``get_params`` and can
    be grid-searched or cloned like any estimator configuration.
    """

    def __init__(self, k: int = 10, w_genetic: float = 1 / 3,
                 w_geographic: float = 1 / 3, w_featural: float = 1 / 3,
                 tie_value: float = 1.0):
        self.k = k
        self.w_genetic = w_genetic
        self.w_geographic = w_geographic
        self.w_featural = w_featural
        self.tie_value = tie_value

    def fit(self, X: Sequence[SourceMatrix], y=None, *,
            metadata: Optional[Mapping[str, LanguageMeta]] = None):
        super().fit(X)
        self.metadata_ = dict(metadata or {})
        return self

    def transform(self, X: Optional[Sequence[SourceMatrix]] = None) -> AggregatedMatrix:
        sources = self._fitted_sources(X)
        return aggregate_knn(
            sources, getattr(self, "metadata_", {}),
            k=self.k,
            weights=(self.w_genetic, self.w_geographic, self.w_featural),
            tie_value=self.tie_value,
        )
