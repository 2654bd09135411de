"""lang2vec-style queries over a typodist dataset directory.

A session wraps one loaded dataset plus default aggregation and
missing-value policy. Distance names use the familiar adjectives
(``syntactic``, ``phonological``, ``inventory``) with optional
underscore-separated modifiers overriding the defaults per query::

    session = typoquery.open("path/to/dataset")
    typoquery.query_distance(session, "syntactic", "eng", "deu")
    typoquery.query_distance(session, "phonological_average_cosine", "eng", "deu")
    typoquery.query_distance(session, "syntactic_nan", "xx1", "xx2")  # may be NaN

Every value is produced by the typodist engine itself, so a binding query
and the CLI agree bit for bit. Sessions never write to the dataset
directory and any number of them may coexist.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from typodist.aggregate import ensure_aggregate
from typodist.distance import PairwiseLanguageDistance
from typodist.errors import (
    CorruptDataError,
    NotFoundError,
    TypodistError,
    UnknownMetricError,
)
from typodist.io import load_dataset
from typodist.model import AGGREGATIONS, Dataset
from typodist.validation import (
    METRICS,
    POLICIES,
    check_aggregation,
    check_policy,
)

__version__ = "0.1.0"

__all__ = [
    "BoundSession",
    "DISTANCE_NAMES",
    "open",
    "open_dataset",
    "languages",
    "query_distance",
    "query_vector",
]

DISTANCE_NAMES: Mapping[str, str] = {
    "syntactic": "syntax",
    "phonological": "phonology",
    "inventory": "inventory",
}


@dataclass(frozen=True)
class QuerySpec:
    """Fully resolved form of one distance name."""

    feature_class: str
    aggregation: str
    metric: str
    policy: str
    regularized: bool


@dataclass(frozen=True)
class BoundSession:
    """One opened dataset plus the defaults queries fall back to.

    Read-only: queries never touch the dataset directory again after
    open(). The engine cache makes repeated queries against the same
    configuration cheap and is safe for concurrent readers.
    """

    dataset: Dataset
    aggregation: str = "union"
    policy: str = "paper"
    regularized: bool = True
    _engines: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock,
                                  repr=False, compare=False)

    def _engine(self, spec: QuerySpec) -> PairwiseLanguageDistance:
        key = (spec.feature_class, spec.aggregation, spec.metric,
               spec.policy, spec.regularized)
        with self._lock:
            engine = self._engines.get(key)
            if engine is None:
                matrix = ensure_aggregate(self.dataset, spec.feature_class,
                                          spec.aggregation)
                engine = PairwiseLanguageDistance(
                    metric=spec.metric, regularized=spec.regularized,
                    policy=spec.policy,
                ).fit(matrix)
                self._engines[key] = engine
            return engine

    def distance(self, metric_name: str, lang_a: str, lang_b: str) -> float:
        return query_distance(self, metric_name, lang_a, lang_b)

    def vector(self, metric_name: str, lang: str) -> tuple[float, ...]:
        return query_vector(self, metric_name, lang)


def open(dataset_dir, *, aggregation: str = "union", policy: str = "paper",
         regularized: bool = True) -> BoundSession:
    """Open a dataset directory written by the typodist CLI.

    Raises NotFoundError when the directory is missing or holds no dataset
    artifacts, CorruptDataError when a file exists but cannot be parsed.
    """
    check_aggregation(aggregation)
    check_policy(policy)
    root = Path(dataset_dir)
    try:
        dataset, _ = load_dataset(root)
    except (NotFoundError, CorruptDataError):
        raise
    except TypodistError as exc:
        raise CorruptDataError(f"cannot load {root}: {exc}") from exc
    if not dataset.sources and not dataset.aggregates:
        raise NotFoundError(f"no dataset artifacts under {root}")
    return BoundSession(dataset=dataset, aggregation=aggregation,
                        policy=policy, regularized=regularized)


# keep a non-shadowing spelling available for callers that use
# ``from typoquery import ...``
open_dataset = open


def parse_metric_name(session: BoundSession, name: str) -> QuerySpec:
    """Resolve a distance name plus modifiers against session defaults.

    The first token picks the feature class; later tokens may override the
    aggregation (union/average/knn), the metric (cosine/angular), the
    missing-value policy (paper/zeros/nan) or the angular regularization
    (regularized/unregularized). Anything else is an unknown metric.
    """
    tokens = name.split("_")
    feature_class = DISTANCE_NAMES.get(tokens[0])
    if feature_class is None:
        raise UnknownMetricError(
            f"unknown distance name {tokens[0]!r}; expected one of "
            f"{sorted(DISTANCE_NAMES)}"
        )
    aggregation = session.aggregation
    metric = "angular"
    policy = session.policy
    regularized = session.regularized
    for token in tokens[1:]:
        if token in AGGREGATIONS:
            aggregation = token
        elif token in METRICS:
            metric = token
        elif token in POLICIES:
            policy = token
        elif token == "regularized":
            regularized = True
        elif token == "unregularized":
            regularized = False
        else:
            raise UnknownMetricError(
                f"unknown modifier {token!r} in distance name {name!r}"
            )
    return QuerySpec(feature_class, aggregation, metric, policy, regularized)


def query_distance(session: BoundSession, metric_name: str,
                   lang_a: str, lang_b: str) -> float:
    """Distance between two languages; NaN when the configuration says an
    empty pair has no meaningful distance."""
    spec = parse_metric_name(session, metric_name)
    return session._engine(spec).pair(lang_a, lang_b).value


def query_vector(session: BoundSession, metric_name: str,
                 lang: str) -> tuple[float, ...]:
    """The aggregated feature vector a distance name would compare,
    missing cells included as NaN."""
    spec = parse_metric_name(session, metric_name)
    matrix = ensure_aggregate(session.dataset, spec.feature_class,
                              spec.aggregation)
    return tuple(float(v) for v in matrix.row(lang))


def languages(session: BoundSession) -> tuple[str, ...]:
    """Codes of every language the session knows about."""
    return tuple(sorted(session.dataset.languages))
