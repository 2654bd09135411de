"""Coverage analytics: how much of the feature space is actually filled.

All statistics run over the union aggregates of the three typological
classes. A language that has no row in an aggregate counts as empty for
that class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptySubsetError,
    MissingAggregateError,
    MissingMetaError,
    UnknownLanguageError,
)
from .model import Dataset, TYPOLOGICAL_CLASSES, UNKNOWN_FAMILY


@dataclass(frozen=True)
class ClassCoverage:
    feature_class: str
    total: int
    empty_count: int

    @property
    def nonempty_count(self) -> int:
        return self.total - self.empty_count

    @property
    def empty_percentage(self) -> float:
        return 100.0 * self.empty_count / self.total if self.total else 0.0


@dataclass(frozen=True)
class CoverageStats:
    """Empty-vector statistics over the typological classes."""

    total_languages: int
    per_class: tuple[ClassCoverage, ...]
    all_empty_count: int

    @property
    def any_nonempty_count(self) -> int:
        return self.total_languages - self.all_empty_count

    @property
    def all_empty_percentage(self) -> float:
        if not self.total_languages:
            return 0.0
        return 100.0 * self.all_empty_count / self.total_languages

    def for_class(self, feature_class: str) -> ClassCoverage:
        for cc in self.per_class:
            if cc.feature_class == feature_class:
                return cc
        raise KeyError(feature_class)


@dataclass(frozen=True)
class FamilyCoverageRow:
    """Non-empty counts for one top-level language family."""

    family: str
    total: int
    counts: tuple[int, ...]  # aligned to TYPOLOGICAL_CLASSES
    all_features: int  # non-empty in at least one class

    def count_for(self, feature_class: str) -> int:
        return self.counts[TYPOLOGICAL_CLASSES.index(feature_class)]


@dataclass(frozen=True)
class Histogram:
    feature_class: str
    bins: tuple[tuple[int, int], ...]  # (non-missing count, languages)
    excludes_empty: bool

    @property
    def languages(self) -> int:
        return sum(count for _, count in self.bins)


def _empty_masks(dataset: Dataset, codes: Sequence[str]) -> dict[str, np.ndarray]:
    """Per class, True where a language's union vector is empty or absent.

    A class with no union aggregate at all counts as empty for every
    language; at least one class must have one.
    """
    masks = {}
    found = False
    for fc in TYPOLOGICAL_CLASSES:
        mask = np.ones(len(codes), dtype=bool)
        if (fc, "union") in dataset.aggregates:
            found = True
            matrix = dataset.aggregate(fc, "union")
            for pos, code in enumerate(codes):
                if code in matrix:
                    mask[pos] = matrix.empty_mask[matrix.index(code)]
        masks[fc] = mask
    if not found:
        raise MissingAggregateError(
            "coverage needs a union aggregate for at least one "
            "typological feature class"
        )
    return masks


def _resolve_codes(dataset: Dataset, codes: Optional[Sequence[str]]) -> list[str]:
    if codes is None:
        return sorted(dataset.languages)
    out = []
    seen = set()
    for code in codes:
        if code not in dataset.languages:
            raise UnknownLanguageError(f"language {code!r} not in the dataset")
        if code not in seen:
            seen.add(code)
            out.append(code)
    if not out:
        raise EmptySubsetError("the language subset is empty")
    return out


def _stats_for(dataset: Dataset, codes: Sequence[str]) -> CoverageStats:
    masks = _empty_masks(dataset, codes)
    per_class = tuple(
        ClassCoverage(fc, len(codes), int(masks[fc].sum()))
        for fc in TYPOLOGICAL_CLASSES
    )
    all_empty = np.ones(len(codes), dtype=bool)
    for fc in TYPOLOGICAL_CLASSES:
        all_empty &= masks[fc]
    return CoverageStats(
        total_languages=len(codes),
        per_class=per_class,
        all_empty_count=int(all_empty.sum()),
    )


def coverage_stats(dataset: Dataset) -> CoverageStats:
    """Empty-vector statistics over every language in the dataset."""
    return _stats_for(dataset, sorted(dataset.languages))


def _family_rows(
    dataset: Dataset, codes: Sequence[str], top_n: Optional[int]
) -> list[FamilyCoverageRow]:
    if not dataset.languages:
        raise MissingMetaError("family grouping needs language metadata")
    masks = _empty_masks(dataset, codes)
    buckets: dict[str, list[int]] = {}
    for pos, code in enumerate(codes):
        buckets.setdefault(dataset.languages[code].family, []).append(pos)
    rows = []
    for family, positions in buckets.items():
        idx = np.asarray(positions)
        counts = tuple(
            int((~masks[fc][idx]).sum()) for fc in TYPOLOGICAL_CLASSES
        )
        any_nonempty = np.zeros(idx.size, dtype=bool)
        for fc in TYPOLOGICAL_CLASSES:
            any_nonempty |= ~masks[fc][idx]
        rows.append(FamilyCoverageRow(
            family=family, total=idx.size, counts=counts,
            all_features=int(any_nonempty.sum()),
        ))
    rows.sort(key=lambda r: (-r.total, r.family))
    return rows[:top_n] if top_n is not None else rows


def family_coverage(
    dataset: Dataset, top_n: Optional[int] = None
) -> list[FamilyCoverageRow]:
    """Per-family non-empty counts, largest families first."""
    return _family_rows(dataset, sorted(dataset.languages), top_n)


def subset_coverage(
    dataset: Dataset, codes: Sequence[str], top_n: Optional[int] = None
) -> tuple[CoverageStats, list[FamilyCoverageRow]]:
    """Coverage statistics restricted to an ordered language subset."""
    resolved = _resolve_codes(dataset, codes)
    return _stats_for(dataset, resolved), _family_rows(dataset, resolved, top_n)


def nonmissing_histogram(
    dataset: Dataset, feature_class: str, excludes_empty: bool = True
) -> Histogram:
    """Languages bucketed by how many features their union vector fills."""
    matrix = dataset.aggregate(feature_class, "union")
    counts = (~np.isnan(matrix.values)).sum(axis=1)
    absent = len(dataset.languages) - matrix.n_languages
    bins: dict[int, int] = {}
    for c in counts:
        bins[int(c)] = bins.get(int(c), 0) + 1
    if absent:
        bins[0] = bins.get(0, 0) + absent
    if excludes_empty:
        bins.pop(0, None)
    return Histogram(
        feature_class=feature_class,
        bins=tuple(sorted(bins.items())),
        excludes_empty=excludes_empty,
    )


def shape_notes(dataset: Dataset) -> list[str]:
    """Soft data-shape observations (returned as notes, never errors).

    Flags an inventory aggregate whose non-empty vectors are not fully
    complete, and a phonology aggregate whose non-missing counts do not
    split into a low (<=7) and a high (>=20) mode.
    """
    notes = []
    if ("inventory", "union") in dataset.aggregates:
        hist = nonmissing_histogram(dataset, "inventory")
        width = len(dataset.aggregate("inventory", "union").schema)
        partial = [c for c, _ in hist.bins if c != width]
        if partial:
            notes.append(
                "inventory: non-empty vectors are usually complete, but "
                f"counts {partial[:5]} fall short of the {width}-feature schema"
            )
    if ("phonology", "union") in dataset.aggregates:
        hist = nonmissing_histogram(dataset, "phonology")
        middle = [c for c, _ in hist.bins if 7 < c < 20]
        if middle:
            notes.append(
                "phonology: non-missing counts usually split into <=7 and "
                f">=20 modes, but {middle[:5]} sit in between"
            )
    return notes


def write_coverage_csv(stats: CoverageStats, path) -> None:
    lines = ["feature_class,total,empty,empty_pct,nonempty"]
    for cc in stats.per_class:
        lines.append(
            f"{cc.feature_class},{cc.total},{cc.empty_count},"
            f"{cc.empty_percentage:.2f},{cc.nonempty_count}"
        )
    lines.append(
        f"all,{stats.total_languages},{stats.all_empty_count},"
        f"{stats.all_empty_percentage:.2f},{stats.any_nonempty_count}"
    )
    from .io import atomic_write

    with atomic_write(path) as fh:
        fh.write("\n".join(lines) + "\n")


def write_family_csv(rows: Sequence[FamilyCoverageRow], path) -> None:
    header = "family,total," + ",".join(TYPOLOGICAL_CLASSES) + ",any_class"
    lines = [header]
    for row in rows:
        cells = ",".join(str(c) for c in row.counts)
        lines.append(f"{row.family},{row.total},{cells},{row.all_features}")
    from .io import atomic_write

    with atomic_write(path) as fh:
        fh.write("\n".join(lines) + "\n")


def _deterministic_figure():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "typodist"
    import matplotlib.pyplot as plt

    return plt


def render_family_svg(rows: Sequence[FamilyCoverageRow], path) -> None:
    """Horizontal per-family bars, one group per feature class."""
    plt = _deterministic_figure()
    names = [r.family for r in rows]
    y = np.arange(len(rows))
    height = 0.25
    fig, ax = plt.subplots(figsize=(8, max(2.0, 0.4 * len(rows))))
    for off, fc in enumerate(TYPOLOGICAL_CLASSES):
        vals = [r.count_for(fc) for r in rows]
        ax.barh(y + (off - 1) * height, vals, height=height, label=fc)
    ax.set_yticks(y)
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.set_xlabel("languages with non-empty vectors")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_histogram_svg(hist: Histogram, path) -> None:
    plt = _deterministic_figure()
    xs = [c for c, _ in hist.bins]
    ys = [n for _, n in hist.bins]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(xs, ys, width=0.8)
    ax.set_xlabel(f"non-missing {hist.feature_class} features")
    ax.set_ylabel("languages")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
