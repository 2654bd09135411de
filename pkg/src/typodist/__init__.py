"""typodist: build, audit, and report on typological language distances.

The pipeline in one sentence: ingest per-source binary feature matrices,
aggregate them (union, average, or neighbour-voted), compute cosine or
angular distances under an explicit missing-value policy, audit the result
against shipped reference distances, and report feature coverage.
"""

from ._version import __version__
from .aggregate import (
    AverageAggregator,
    KnnAggregator,
    UnionAggregator,
    aggregate_average,
    aggregate_knn,
    aggregate_union,
    align_sources,
    ensure_aggregate,
    genetic_distance,
    geographic_distance,
    union_average_equality,
)
from .audit import (
    AuditResult,
    audit_combination,
    audit_dataset,
    best_per_class,
    matches,
)
from .coverage import (
    CoverageStats,
    FamilyCoverageRow,
    Histogram,
    coverage_stats,
    family_coverage,
    nonmissing_histogram,
    subset_coverage,
)
from .distance import (
    DistanceRecord,
    PairwiseLanguageDistance,
    all_pairs,
    angular_distance,
    cosine_distance,
    cosine_similarity,
    impute_matrix,
    impute_vector,
    pair_distance,
)
from .errors import TypodistError
from .io import IngestReport, load_dataset, load_language_list
from .model import (
    AggregatedMatrix,
    Dataset,
    FeatureMatrix,
    FeatureVector,
    LanguageMeta,
    ReferenceStore,
    SourceMatrix,
)

__all__ = [
    "__version__",
    "AggregatedMatrix",
    "AuditResult",
    "AverageAggregator",
    "CoverageStats",
    "Dataset",
    "DistanceRecord",
    "FamilyCoverageRow",
    "FeatureMatrix",
    "FeatureVector",
    "Histogram",
    "IngestReport",
    "KnnAggregator",
    "LanguageMeta",
    "PairwiseLanguageDistance",
    "ReferenceStore",
    "SourceMatrix",
    "TypodistError",
    "UnionAggregator",
    "aggregate_average",
    "aggregate_knn",
    "aggregate_union",
    "align_sources",
    "all_pairs",
    "angular_distance",
    "audit_combination",
    "audit_dataset",
    "best_per_class",
    "cosine_distance",
    "cosine_similarity",
    "coverage_stats",
    "ensure_aggregate",
    "family_coverage",
    "genetic_distance",
    "geographic_distance",
    "impute_matrix",
    "impute_vector",
    "load_dataset",
    "load_language_list",
    "matches",
    "nonmissing_histogram",
    "pair_distance",
    "subset_coverage",
    "union_average_equality",
]
