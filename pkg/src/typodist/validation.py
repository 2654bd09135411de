"""Input validation helpers shared by estimators, loaders and the CLI."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import (
    LanguageSetMismatchError,
    SchemaMismatchError,
    UnknownMetricError,
    ValueOutOfRangeError,
)
from .model import AGGREGATIONS, FeatureMatrix, SourceMatrix

METRICS = ("cosine", "angular")
POLICIES = ("paper", "zeros", "nan")
SCOPES = ("all_pairs", "nonempty_pairs")


def check_matrix(X) -> FeatureMatrix:
    if not isinstance(X, FeatureMatrix):
        raise SchemaMismatchError(
            f"expected a feature matrix, got {type(X).__name__}"
        )
    return X


def check_sources(X) -> tuple[SourceMatrix, ...]:
    """Validate a non-empty sequence of source matrices of one feature class."""
    if isinstance(X, SourceMatrix):
        X = (X,)
    sources = tuple(X)
    if not sources:
        raise SchemaMismatchError("need at least one source matrix")
    for m in sources:
        if not isinstance(m, SourceMatrix):
            raise SchemaMismatchError(
                f"expected source matrices, got {type(m).__name__}"
            )
    classes = {m.feature_class for m in sources}
    if len(classes) != 1:
        raise SchemaMismatchError(
            f"sources mix feature classes: {sorted(classes)}"
        )
    return sources


def check_same_languages(a: FeatureMatrix, b: FeatureMatrix) -> None:
    if a.codes != b.codes:
        only_a = set(a.codes) - set(b.codes)
        only_b = set(b.codes) - set(a.codes)
        raise LanguageSetMismatchError(
            f"language sets differ (only left: {sorted(only_a)[:5]}, "
            f"only right: {sorted(only_b)[:5]})"
        )


def check_choice(value: str, allowed: Sequence[str], what: str) -> str:
    if value not in allowed:
        raise UnknownMetricError(f"{what} must be one of {list(allowed)}, got {value!r}")
    return value


def check_metric(metric: str) -> str:
    return check_choice(metric, METRICS, "metric")


def check_policy(policy: str) -> str:
    return check_choice(policy, POLICIES, "missing-value policy")


def check_aggregation(aggregation: str) -> str:
    return check_choice(aggregation, AGGREGATIONS, "aggregation")


def check_scope(scope: str) -> str:
    # accept the short CLI spellings as well
    aliases = {"all": "all_pairs", "nonempty": "nonempty_pairs"}
    scope = aliases.get(scope, scope)
    return check_choice(scope, SCOPES, "scope")


def check_dense_pair(u, v) -> tuple[np.ndarray, np.ndarray]:
    """Validate two dense vectors for the distance kernels."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or v.ndim != 1:
        raise ValueOutOfRangeError("dense vectors must be 1-D")
    if u.size == 0 or u.size != v.size:
        raise ValueOutOfRangeError(
            f"dense vectors must be non-empty and equal length, got {u.size} and {v.size}"
        )
    if np.isnan(u).any() or np.isnan(v).any() or np.isinf(u).any() or np.isinf(v).any():
        raise ValueOutOfRangeError("dense vectors must be finite")
    return u, v


def check_weights(weights) -> tuple[float, float, float]:
    """Normalise a (genetic, geographic, featural) weight triple."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (3,):
        raise ValueOutOfRangeError("weights must be three numbers")
    if (w < 0).any() or not np.isfinite(w).all():
        raise ValueOutOfRangeError("weights must be finite and non-negative")
    total = float(w.sum())
    if total <= 0:
        raise ValueOutOfRangeError("weights must not all be zero")
    w = w / total
    return (float(w[0]), float(w[1]), float(w[2]))
