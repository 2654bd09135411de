"""Agreement between recomputed distances and a shipped reference table.

A reference value printed to ``places`` decimals is counted as matched when
the recomputed value lies within half an ulp of that printout, i.e.
``|computed - reference| <= 0.5 * 10**-places``. Totals are over ordered
pairs (the diagonal once, every off-diagonal pair in both directions), on
two scopes: every audited pair, and only pairs of languages whose feature
vector is non-empty under the audited aggregation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distance import PairwiseLanguageDistance
from .errors import EmptySubsetError
from .model import Dataset, TYPOLOGICAL_CLASSES
from .validation import METRICS, check_metric, check_policy

SAMPLE_CAP = 100
SAMPLE_SEED = 20121


def matches(computed: float, reference: float, places: int) -> bool:
    """True when computed agrees with a reference rounded to ``places``."""
    if math.isnan(computed) or math.isnan(reference):
        return math.isnan(computed) and math.isnan(reference)
    return abs(computed - reference) <= 0.5 * 10.0 ** (-places)


@dataclass(frozen=True)
class UnmatchedPair:
    lang_a: str
    lang_b: str
    computed: float
    reference: float


@dataclass(frozen=True)
class ScopeCount:
    """Ordered-pair tally for one audit scope."""

    scope: str
    total: int
    matched: int

    @property
    def percent(self) -> float:
        return 100.0 * self.matched / self.total if self.total else float("nan")


@dataclass(frozen=True)
class AuditResult:
    """Outcome of auditing one (class, aggregation, metric) combination."""

    feature_class: str
    aggregation: str
    metric: str
    regularized: bool
    policy: str
    places: int
    audited_languages: int
    all_pairs: ScopeCount
    nonempty_pairs: ScopeCount
    unmatched_samples: tuple[UnmatchedPair, ...]

    def scope(self, name: str) -> ScopeCount:
        if name in ("all", "all_pairs"):
            return self.all_pairs
        if name in ("nonempty", "nonempty_pairs"):
            return self.nonempty_pairs
        raise ValueError(f"unknown audit scope {name!r}")


def _sample_unmatched(
    codes: Sequence[str],
    computed: np.ndarray,
    reference: np.ndarray,
    bad: np.ndarray,
    cap: int,
    seed: int,
) -> tuple[UnmatchedPair, ...]:
    """Reproducible sample of mismatching unordered pairs."""
    idx = np.argwhere(bad)
    if idx.shape[0] > cap:
        rng = random.Random(seed)
        keep = sorted(rng.sample(range(idx.shape[0]), cap))
        idx = idx[keep]
    return tuple(
        UnmatchedPair(
            codes[i], codes[j],
            float(computed[i, j]), float(reference[i, j]),
        )
        for i, j in idx
    )


def audit_combination(
    dataset: Dataset,
    feature_class: str,
    aggregation: str,
    metric: str,
    *,
    regularized: bool = True,
    policy: str = "paper",
    places: int = 2,
    sample_cap: int = SAMPLE_CAP,
    seed: int = SAMPLE_SEED,
) -> AuditResult:
    """Audit one aggregation/metric combination against the reference.

    Only languages present in both the aggregate and the reference store
    are audited; reference cells that are absent (NaN) are skipped rather
    than counted as mismatches.
    """
    check_metric(metric)
    check_policy(policy)
    matrix = dataset.aggregate(feature_class, aggregation)
    store = dataset.reference(feature_class)

    shared = [c for c in matrix.codes if c in set(store.codes)]
    if not shared:
        raise EmptySubsetError(
            f"no shared languages between the {feature_class} aggregate "
            "and its reference table"
        )
    engine = PairwiseLanguageDistance(
        metric=metric, regularized=regularized, policy=policy
    ).fit(matrix)
    rows = [matrix.index(c) for c in shared]
    computed = engine.transform()[np.ix_(rows, rows)]
    ref_rows = [store.codes.index(c) for c in shared]
    reference = store.matrix[np.ix_(ref_rows, ref_rows)]

    known = ~np.isnan(reference)
    tol = 0.5 * 10.0 ** (-places)
    with np.errstate(invalid="ignore"):
        good = np.abs(computed - reference) <= tol
    good |= np.isnan(computed) & np.isnan(reference)

    def tally(mask: np.ndarray, name: str) -> ScopeCount:
        return ScopeCount(
            scope=name,
            total=int(mask.sum()),
            matched=int((mask & good).sum()),
        )

    all_count = tally(known, "all_pairs")
    nonempty = ~engine.empty_[rows]
    nonempty_mask = known & np.outer(nonempty, nonempty)
    nonempty_count = tally(nonempty_mask, "nonempty_pairs")

    bad_upper = np.triu(known & ~good)
    samples = _sample_unmatched(shared, computed, reference, bad_upper,
                                sample_cap, seed)
    return AuditResult(
        feature_class=feature_class,
        aggregation=aggregation,
        metric=metric,
        regularized=regularized,
        policy=policy,
        places=places,
        audited_languages=len(shared),
        all_pairs=all_count,
        nonempty_pairs=nonempty_count,
        unmatched_samples=samples,
    )


def audit_dataset(
    dataset: Dataset,
    *,
    feature_classes: Optional[Sequence[str]] = None,
    aggregations: Optional[Sequence[str]] = None,
    metrics: Sequence[str] = METRICS,
    regularized: bool = True,
    policy: str = "paper",
    places: int = 2,
) -> tuple[AuditResult, ...]:
    """Audit every requested combination that the dataset can support.

    Defaults audit each feature class that has a reference table, over the
    aggregations actually present for that class, with both metrics.
    """
    if feature_classes is None:
        feature_classes = [
            fc for fc in TYPOLOGICAL_CLASSES if fc in dataset.references
        ]
    results = []
    for fc in feature_classes:
        if aggregations is None:
            available = [
                agg for (cls, agg) in sorted(dataset.aggregates)
                if cls == fc
            ]
        else:
            available = list(aggregations)
        for agg in available:
            for metric in metrics:
                results.append(audit_combination(
                    dataset, fc, agg, metric,
                    regularized=regularized, policy=policy, places=places,
                ))
    return tuple(results)


def best_per_class(
    results: Sequence[AuditResult], scope: str = "all_pairs"
) -> dict[str, tuple[str, str]]:
    """(aggregation, metric) with the highest match rate per feature class."""
    best: dict[str, tuple[float, tuple[str, str]]] = {}
    for r in results:
        pct = r.scope(scope).percent
        key = (r.aggregation, r.metric)
        if math.isnan(pct):
            continue
        if r.feature_class not in best or pct > best[r.feature_class][0]:
            best[r.feature_class] = (pct, key)
    return {fc: combo for fc, (_, combo) in best.items()}
