"""Missing-value imputation policies, distance metrics, and the all-pairs engine.

Metrics operate on dense non-negative vectors produced by imputation:

* cosine distance: ``1 - u.v / (|u||v|)``
* angular distance: ``arccos(u.v / (|u||v|)) / pi``, doubled when regularized
  so that non-negative vectors span [0, 1]

Imputation policies:

* ``paper``  - a fully missing vector becomes all ones; partial gaps become
  zeros. This is the convention URIEL's shipped distances follow.
* ``zeros``  - every missing cell becomes zero.
* ``nan``    - pairs involving a fully missing vector get a NaN distance;
  partial gaps become zeros.

The engine computes in fixed 1024-row blocks so results are bit-identical
for any worker count, and pair queries replay the block that contains the
pair, so single-pair lookups match bulk output exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import UnknownLanguageError
from .model import Dataset, FeatureMatrix
from .validation import check_dense_pair, check_matrix, check_metric, check_policy

BLOCK_ROWS = 1024


def impute_vector(values, policy: str = "paper") -> Optional[np.ndarray]:
    """Dense vector for one feature vector, or None when the nan policy
    declares the vector not meaningful (fully missing)."""
    check_policy(policy)
    values = np.asarray(getattr(values, "values", values), dtype=np.float64)
    missing = np.isnan(values)
    if policy == "nan" and missing.all():
        return None
    if policy == "paper" and missing.all():
        return np.ones_like(values)
    out = values.copy()
    out[missing] = 0.0
    return out


def impute_matrix(values: np.ndarray, policy: str = "paper") -> tuple[np.ndarray, np.ndarray]:
    """Matrix-level imputation. Returns (dense, empty_row_mask)."""
    check_policy(policy)
    values = np.asarray(values, dtype=np.float64)
    missing = np.isnan(values)
    empty = missing.all(axis=1)
    dense = values.copy()
    dense[missing] = 0.0
    if policy == "paper":
        dense[empty] = 1.0
    return dense, empty


def cosine_similarity(u, v) -> float:
    """Cosine similarity with explicit zero-norm rules: two zero vectors
    count as identical (1), one zero vector as maximally dissimilar (0)."""
    u, v = check_dense_pair(u, v)
    if np.array_equal(u, v):
        return 1.0
    nu = math.sqrt(float(np.dot(u, u)))
    nv = math.sqrt(float(np.dot(v, v)))
    if nu == 0.0 and nv == 0.0:
        return 1.0
    if nu == 0.0 or nv == 0.0:
        return 0.0
    s = float(np.dot(u, v)) / (nu * nv)
    return min(1.0, max(-1.0, s))


def cosine_distance(u, v) -> float:
    return 1.0 - cosine_similarity(u, v)


def angular_distance(u, v, regularized: bool = True) -> float:
    d = math.acos(cosine_similarity(u, v)) / math.pi
    return 2.0 * d if regularized else d


@dataclass(frozen=True)
class DistanceRecord:
    """One computed pair distance plus its meaningfulness flag."""

    lang_a: str
    lang_b: str
    feature_class: str
    aggregation: str
    metric: str
    value: float
    meaningful: bool


def _row_groups(dense: np.ndarray) -> np.ndarray:
    """Integer id per row such that equal rows share an id; equal-row pairs
    get distance exactly 0 regardless of rounding in the dot products."""
    ids: dict[bytes, int] = {}
    groups = np.empty(dense.shape[0], dtype=np.int64)
    for i in range(dense.shape[0]):
        key = dense[i].tobytes()
        groups[i] = ids.setdefault(key, len(ids))
    return groups


def _block_values(
    dense: np.ndarray,
    norms: np.ndarray,
    empty: np.ndarray,
    groups: np.ndarray,
    metric: str,
    regularized: bool,
    policy: str,
    start: int,
    stop: int,
) -> np.ndarray:
    """Distances for rows [start, stop) against all rows."""
    U = dense[start:stop]
    G = U @ dense.T
    zero = norms == 0.0
    zb = zero[start:stop]
    with np.errstate(divide="ignore", invalid="ignore"):
        S = G / np.outer(norms[start:stop], norms)
    S[np.logical_and.outer(zb, zero)] = 1.0
    S[np.logical_xor.outer(zb, zero)] = 0.0
    np.clip(S, -1.0, 1.0, out=S)
    if metric == "cosine":
        D = 1.0 - S
    else:
        D = np.arccos(S) / math.pi
        if regularized:
            D *= 2.0
    D[np.equal.outer(groups[start:stop], groups)] = 0.0
    if policy == "nan":
        D[np.logical_or.outer(empty[start:stop], empty)] = np.nan
    return D


_WORKER_STATE: Optional[tuple] = None


def _worker_init(state: tuple) -> None:
    global _WORKER_STATE
    _WORKER_STATE = state


def _worker_block(start: int) -> tuple[int, np.ndarray]:
    dense, norms, empty, groups, metric, regularized, policy = _WORKER_STATE
    stop = min(start + BLOCK_ROWS, dense.shape[0])
    return start, _block_values(
        dense, norms, empty, groups, metric, regularized, policy, start, stop
    )


class PairwiseLanguageDistance(BaseEstimator):
    """Pairwise distance engine over one aggregated matrix.

    Follows the estimator protocol: ``fit`` ingests the matrix (imputing
    per the policy), ``transform`` yields the full square distance matrix,
    and ``pair``/``iter_records`` expose per-pair access. All outputs are
    deterministic and independent of worker count.

    Parameters
    ----------
    metric : "cosine" or "angular"
    regularized : bool, doubles the angular distance onto [0, 1]
    policy : "paper", "zeros" or "nan"
    """

    def __init__(self, metric: str = "angular", regularized: bool = True,
                 policy: str = "paper"):
        self.metric = metric
        self.regularized = regularized
        self.policy = policy

    def fit(self, X: FeatureMatrix, y=None):
        X = check_matrix(X)
        check_metric(self.metric)
        check_policy(self.policy)
        dense, empty = impute_matrix(X.values, self.policy)
        self.codes_ = X.codes
        self.feature_class_ = X.feature_class
        self.aggregation_ = getattr(X, "aggregation", "union")
        self.dense_ = dense
        self.empty_ = empty
        self.norms_ = np.sqrt(np.einsum("ij,ij->i", dense, dense))
        self.groups_ = _row_groups(dense)
        self.n_ = dense.shape[0]
        self._block_cache: dict[int, np.ndarray] = {}
        return self

    def _require_fit(self) -> None:
        if not hasattr(self, "dense_"):
            raise NotFittedError("fit the engine on a feature matrix first")

    def block_starts(self) -> range:
        self._require_fit()
        return range(0, self.n_, BLOCK_ROWS)

    def block(self, start: int) -> np.ndarray:
        """Rows [start, start+BLOCK_ROWS) of the distance matrix (cached)."""
        self._require_fit()
        if start not in self._block_cache:
            stop = min(start + BLOCK_ROWS, self.n_)
            self._block_cache[start] = _block_values(
                self.dense_, self.norms_, self.empty_, self.groups_,
                self.metric, self.regularized, self.policy, start, stop,
            )
        return self._block_cache[start]

    def iter_blocks(self, workers: int = 1) -> Iterator[tuple[int, np.ndarray]]:
        """All blocks in canonical order, optionally computed in parallel.

        The block partition never depends on the worker count, so values
        are bit-identical for any ``workers``.
        """
        self._require_fit()
        starts = list(self.block_starts())
        if workers <= 1 or len(starts) <= 1:
            for start in starts:
                yield start, self.block(start)
            return
        state = (self.dense_, self.norms_, self.empty_, self.groups_,
                 self.metric, self.regularized, self.policy)
        with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init,
                                 initargs=(state,)) as pool:
            for start, values in pool.map(_worker_block, starts):
                yield start, values

    def transform(self, X: Optional[FeatureMatrix] = None) -> np.ndarray:
        """Square distance matrix over the fitted languages.

        The lower triangle is mirrored from the upper so the result is
        exactly symmetric.
        """
        self._require_fit()
        if X is not None and X.codes != self.codes_:
            raise UnknownLanguageError(
                "transform expects the fitted matrix; refit for a new one"
            )
        out = np.empty((self.n_, self.n_), dtype=np.float64)
        for start, values in self.iter_blocks():
            out[start:start + values.shape[0]] = values
        iu = np.triu_indices(self.n_, 1)
        out[(iu[1], iu[0])] = out[iu]
        return out

    def pair(self, lang_a: str, lang_b: str) -> DistanceRecord:
        """Distance for one pair, replaying the canonical block so the value
        is bit-equal to bulk output."""
        self._require_fit()
        ia = self._index(lang_a)
        ib = self._index(lang_b)
        i, j = (ia, ib) if ia <= ib else (ib, ia)
        start = (i // BLOCK_ROWS) * BLOCK_ROWS
        value = float(self.block(start)[i - start, j])
        meaningful = not (self.empty_[ia] or self.empty_[ib])
        return DistanceRecord(
            lang_a, lang_b, self.feature_class_, self.aggregation_,
            self.metric, value, bool(meaningful),
        )

    def _index(self, code: str) -> int:
        try:
            return self.codes_.index(code)
        except ValueError:
            raise UnknownLanguageError(
                f"language {code!r} not in the fitted matrix"
            ) from None

    def iter_records(self, include_self: bool = True,
                     workers: int = 1) -> Iterator[DistanceRecord]:
        """Unordered-pair records in lexicographic code order."""
        self._require_fit()
        for start, values in self.iter_blocks(workers=workers):
            for local in range(values.shape[0]):
                i = start + local
                first = i if include_self else i + 1
                empty_i = self.empty_[i]
                for j in range(first, self.n_):
                    yield DistanceRecord(
                        self.codes_[i], self.codes_[j],
                        self.feature_class_, self.aggregation_, self.metric,
                        float(values[local, j]),
                        bool(not (empty_i or self.empty_[j])),
                    )

    @property
    def stats(self) -> dict[str, int]:
        """Degenerate-input counters over unordered pairs (self included)."""
        self._require_fit()
        n = self.n_
        z = int((self.norms_ == 0.0).sum())
        e = int(self.empty_.sum())

        def pairs_with(flagged: int) -> int:
            clean = n - flagged
            return n * (n + 1) // 2 - clean * (clean + 1) // 2

        return {
            "languages": n,
            "zero_norm_pairs": pairs_with(z),
            "empty_pairs": pairs_with(e),
        }


def pair_distance(
    dataset: Dataset,
    feature_class: str,
    aggregation: str,
    metric: str,
    policy: str,
    lang_a: str,
    lang_b: str,
    regularized: bool = True,
) -> DistanceRecord:
    """Distance record for one pair from a dataset's aggregated matrix."""
    matrix = dataset.aggregate(feature_class, aggregation)
    engine = PairwiseLanguageDistance(metric=metric, regularized=regularized,
                                      policy=policy).fit(matrix)
    return engine.pair(lang_a, lang_b)


def all_pairs(
    dataset: Dataset,
    feature_class: str,
    aggregation: str,
    metric: str,
    policy: str,
    include_self: bool = True,
    regularized: bool = True,
    workers: int = 1,
) -> Iterator[DistanceRecord]:
    """Stream every unordered pair record in lexicographic code order."""
    matrix = dataset.aggregate(feature_class, aggregation)
    engine = PairwiseLanguageDistance(metric=metric, regularized=regularized,
                                      policy=policy).fit(matrix)
    return engine.iter_records(include_self=include_self, workers=workers)
