"""Loading and writing the TSV dataset formats.

All formats are UTF-8, tab-separated, LF line endings. ``--`` is the sole
missing-value marker in feature matrices. Lines starting with ``#`` are
comments and are skipped, so tool-emitted headers survive round-trips.

Dataset directory layout::

    dataset/
      languages.tsv                   code, name, family_path, macroarea, lat, lon, speaker_rank
      sources/<class>__<source>.tsv   per-source binary matrices
      aggregates/<class>_<agg>.tsv    e.g. syntax_union.tsv
      references/<class>.tsv          pre-computed distances (dense or triplet)
"""

from __future__ import annotations

import math
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import (
    AsymmetricReferenceError,
    CorruptDataError,
    DuplicateLanguageError,
    EmptyListError,
    MalformedCellError,
    MalformedRowError,
    NotFoundError,
    SchemaMismatchError,
)
from .model import (
    AGGREGATIONS,
    FEATURE_CLASSES,
    MISSING_MARKER,
    AggregatedMatrix,
    Dataset,
    FeatureMatrix,
    LanguageMeta,
    ReferenceStore,
    SourceMatrix,
)

LANGUAGES_FILE = "languages.tsv"
SOURCES_DIR = "sources"
AGGREGATES_DIR = "aggregates"
REFERENCES_DIR = "references"


@dataclass(frozen=True)
class IngestReport:
    """What a dataset load saw: file and language counts plus soft warnings."""

    files_loaded: int = 0
    languages: int = 0
    warnings: tuple[str, ...] = ()


@contextmanager
def atomic_write(path: Path | str):
    """Write to a temp file and rename into place, so readers never see
    a partially written file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _data_lines(path: Path) -> Iterable[tuple[int, str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise NotFoundError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line


def parse_cell(token: str, *, binary: bool, where: str) -> float:
    """One feature-matrix cell: 0, 1, a decimal in [0,1], or the marker."""
    if token == MISSING_MARKER:
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise MalformedCellError(f"{where}: cell {token!r} is not a value or '--'") from None
    if not math.isfinite(value) or value < 0.0 or value > 1.0:
        raise MalformedCellError(f"{where}: cell {token!r} outside [0, 1]")
    if binary and value not in (0.0, 1.0):
        raise SchemaMismatchError(
            f"{where}: decimal cell {token!r} in a binary-valued matrix"
        )
    return value


def format_cell(value: float) -> str:
    value = float(value)
    if math.isnan(value):
        return MISSING_MARKER
    if value == int(value):
        return str(int(value))
    return repr(value)


def format_distance(value: float) -> str:
    return "nan" if math.isnan(value) else repr(float(value))


def load_feature_matrix(
    path: Path | str,
    feature_class: str,
    role: str = "source",
    aggregation: Optional[str] = None,
    source_id: Optional[str] = None,
) -> FeatureMatrix:
    """Parse one matrix TSV into a SourceMatrix or AggregatedMatrix.

    ``role`` is "source" or "aggregate"; aggregate matrices carry the
    aggregation label and, for "average", may hold decimal cells.
    """
    path = Path(path)
    if role not in ("source", "aggregate"):
        raise CorruptDataError(f"unknown matrix role {role!r}")
    if role == "aggregate":
        if aggregation not in AGGREGATIONS:
            raise CorruptDataError(f"aggregate role needs an aggregation, got {aggregation!r}")
        binary = aggregation != "average"
    else:
        binary = True

    lines = iter(_data_lines(path))
    try:
        _, header = next(lines)
    except StopIteration:
        raise CorruptDataError(f"{path}: no header row") from None
    fields = header.split("\t")
    if fields[0] != "language" or len(fields) < 2:
        raise CorruptDataError(
            f"{path}: header must be 'language<TAB>feature...', got {fields[:3]}"
        )
    schema = tuple(fields[1:])

    codes: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    for lineno, line in lines:
        parts = line.split("\t")
        if len(parts) != len(schema) + 1:
            raise MalformedRowError(
                f"{path}:{lineno}: expected {len(schema) + 1} fields, got {len(parts)}"
            )
        code = parts[0]
        if code in seen:
            raise DuplicateLanguageError(f"{path}:{lineno}: duplicate language {code!r}")
        seen.add(code)
        codes.append(code)
        where = f"{path}:{lineno}"
        rows.append([parse_cell(tok, binary=binary, where=where) for tok in parts[1:]])

    values = np.array(rows, dtype=np.float64).reshape(len(codes), len(schema))
    if role == "source":
        sid = source_id if source_id is not None else path.stem
        return SourceMatrix(feature_class, schema, tuple(codes), values, source_id=sid)
    return AggregatedMatrix(feature_class, schema, tuple(codes), values, aggregation=aggregation)


def write_feature_matrix(
    matrix: FeatureMatrix, path: Path | str, header_comment: Optional[str] = None
) -> None:
    """Write a matrix TSV; ``header_comment`` is a full '#'-prefixed line."""
    with atomic_write(path) as out:
        if header_comment:
            out.write(header_comment.rstrip("\n") + "\n")
        out.write("language\t" + "\t".join(matrix.schema) + "\n")
        for i, code in enumerate(matrix.codes):
            cells = "\t".join(format_cell(v) for v in matrix.values[i])
            out.write(f"{code}\t{cells}\n")


def load_language_meta(path: Path | str) -> dict[str, LanguageMeta]:
    """Language metadata TSV; trailing columns are optional per row."""
    path = Path(path)
    lines = iter(_data_lines(path))
    try:
        _, header = next(lines)
    except StopIteration:
        raise CorruptDataError(f"{path}: empty metadata file") from None
    if header.split("\t")[0] != "code":
        raise CorruptDataError(f"{path}: metadata header must start with 'code'")

    def opt_float(token: str, what: str, lineno: int) -> Optional[float]:
        if not token:
            return None
        try:
            return float(token)
        except ValueError:
            raise MalformedRowError(f"{path}:{lineno}: bad {what} {token!r}") from None

    metas: dict[str, LanguageMeta] = {}
    for lineno, line in lines:
        parts = line.split("\t")
        parts += [""] * (7 - len(parts))
        if len(parts) > 7:
            raise MalformedRowError(f"{path}:{lineno}: too many fields")
        code, name, family, macroarea, lat, lon, rank = parts
        if not code:
            raise MalformedRowError(f"{path}:{lineno}: empty language code")
        if code in metas:
            raise DuplicateLanguageError(f"{path}:{lineno}: duplicate language {code!r}")
        family_path = tuple(p for p in family.split("/") if p) if family else ()
        rank_value: Optional[int] = None
        if rank:
            try:
                rank_value = int(rank)
            except ValueError:
                raise MalformedRowError(f"{path}:{lineno}: bad speaker_rank {rank!r}") from None
        metas[code] = LanguageMeta(
            code=code,
            name=name,
            family_path=family_path,
            macroarea=macroarea or None,
            latitude=opt_float(lat, "latitude", lineno),
            longitude=opt_float(lon, "longitude", lineno),
            speaker_rank=rank_value,
        )
    return metas


def write_language_meta(metas: Iterable[LanguageMeta], path: Path | str) -> None:
    with atomic_write(path) as out:
        out.write("code\tname\tfamily_path\tmacroarea\tlat\tlon\tspeaker_rank\n")
        for m in sorted(metas, key=lambda m: m.code):
            row = [
                m.code,
                m.name,
                "/".join(m.family_path),
                m.macroarea or "",
                "" if m.latitude is None else repr(m.latitude),
                "" if m.longitude is None else repr(m.longitude),
                "" if m.speaker_rank is None else str(m.speaker_rank),
            ]
            out.write("\t".join(row) + "\n")


def _parse_reference_value(token: str, where: str) -> float:
    if token in (MISSING_MARKER, "nan"):
        return math.nan
    try:
        return float(token)
    except ValueError:
        raise MalformedCellError(f"{where}: distance {token!r} is not a number") from None


def load_reference_distances(path: Path | str, feature_class: str) -> ReferenceStore:
    """Reference distances from a dense-matrix TSV or a triplet TSV.

    The two shapes are told apart by the header: triplet files start
    ``lang1<TAB>lang2<TAB>value`` (or are headerless three-column rows),
    dense files start with a ``language`` corner cell.
    """
    path = Path(path)
    lines = list(_data_lines(path))
    if not lines:
        raise CorruptDataError(f"{path}: empty reference file")
    first = lines[0][1].split("\t")

    if first[:3] == ["lang1", "lang2", "value"] and len(first) == 3:
        return _reference_from_triplets(path, feature_class, lines[1:])
    if first[0] in ("language", ""):
        return _reference_from_dense(path, feature_class, lines)
    if len(first) == 3:
        try:
            float(first[2])
        except ValueError:
            pass
        else:
            return _reference_from_triplets(path, feature_class, lines)
    raise CorruptDataError(f"{path}: cannot tell dense from triplet format")


def _reference_from_dense(path, feature_class, lines) -> ReferenceStore:
    header = lines[0][1].split("\t")
    codes = header[1:]
    n = len(codes)
    if n == 0:
        raise CorruptDataError(f"{path}: dense reference header has no codes")
    index = {c: i for i, c in enumerate(codes)}
    if len(index) != n:
        raise DuplicateLanguageError(f"{path}: duplicate codes in header")
    matrix = np.full((n, n), np.nan)
    seen: set[str] = set()
    for lineno, line in lines[1:]:
        parts = line.split("\t")
        if len(parts) != n + 1:
            raise MalformedRowError(f"{path}:{lineno}: expected {n + 1} fields")
        code = parts[0]
        if code not in index:
            raise MalformedRowError(f"{path}:{lineno}: row code {code!r} not in header")
        if code in seen:
            raise DuplicateLanguageError(f"{path}:{lineno}: duplicate row {code!r}")
        seen.add(code)
        matrix[index[code]] = [
            _parse_reference_value(tok, f"{path}:{lineno}") for tok in parts[1:]
        ]
    if len(seen) != n:
        raise CorruptDataError(f"{path}: {n - len(seen)} header codes have no row")
    return ReferenceStore(feature_class, tuple(codes), matrix)


def _reference_from_triplets(path, feature_class, lines) -> ReferenceStore:
    triplets: list[tuple[str, str, float]] = []
    codes: dict[str, None] = {}
    for lineno, line in lines:
        parts = line.split("\t")
        if len(parts) != 3:
            raise MalformedRowError(f"{path}:{lineno}: expected 3 fields")
        a, b, token = parts
        value = _parse_reference_value(token, f"{path}:{lineno}")
        triplets.append((a, b, value))
        codes[a] = codes[b] = None
    if not triplets:
        raise CorruptDataError(f"{path}: no reference pairs")
    ordered = tuple(codes)
    index = {c: i for i, c in enumerate(ordered)}
    matrix = np.full((len(ordered), len(ordered)), np.nan)
    for a, b, value in triplets:
        i, j = index[a], index[b]
        for x, y in ((i, j), (j, i)):
            prior = matrix[x, y]
            if not np.isnan(prior) and not np.isnan(value) and abs(prior - value) > 1e-9:
                raise AsymmetricReferenceError(
                    f"{path}: conflicting values for pair ({a}, {b}): {prior} vs {value}"
                )
            matrix[x, y] = value
    return ReferenceStore(feature_class, ordered, matrix)


def write_reference_distances(
    store: ReferenceStore,
    path: Path | str,
    fmt: str = "triplet",
    header_comment: Optional[str] = None,
) -> None:
    with atomic_write(path) as out:
        if header_comment:
            out.write(header_comment.rstrip("\n") + "\n")
        if fmt == "triplet":
            out.write("lang1\tlang2\tvalue\n")
            for a, b, value in store.pairs():
                out.write(f"{a}\t{b}\t{format_distance(value)}\n")
        elif fmt == "dense":
            out.write("language\t" + "\t".join(store.codes) + "\n")
            for i, code in enumerate(store.codes):
                row = "\t".join(format_distance(v) for v in store.matrix[i])
                out.write(f"{code}\t{row}\n")
        else:
            raise CorruptDataError(f"unknown reference format {fmt!r}")


def load_language_list(path: Path | str, dataset: Dataset) -> tuple[list[str], list[str]]:
    """Resolve a one-entry-per-line language list against a dataset.

    Entries may be codes or names. Unresolvable entries produce warnings,
    never errors; an entry list that is empty altogether is an error.
    """
    path = Path(path)
    entries = [line.strip() for _, line in _data_lines(path)]
    if not entries:
        raise EmptyListError(f"{path}: no language entries")
    by_name = {m.name: m.code for m in dataset.languages.values() if m.name}
    by_folded = {m.name.casefold(): m.code for m in dataset.languages.values() if m.name}
    codes: list[str] = []
    seen: set[str] = set()
    warnings: list[str] = []
    for entry in entries:
        code = None
        if entry in dataset.languages:
            code = entry
        elif entry in by_name:
            code = by_name[entry]
        elif entry.casefold() in by_folded:
            code = by_folded[entry.casefold()]
        if code is None:
            warnings.append(f"language {entry!r} not found in dataset")
        elif code in seen:
            warnings.append(f"language {entry!r} listed more than once")
        else:
            seen.add(code)
            codes.append(code)
    return codes, warnings


def _scan_tsv(directory: Path) -> list[Path]:
    if not directory.is_dir():
        return []
    return sorted(p for p in directory.iterdir() if p.suffix == ".tsv")


def load_dataset(root: Path | str) -> tuple[Dataset, IngestReport]:
    """Load a dataset directory and validate it into a Dataset.

    Languages found in matrices but absent from languages.tsv get a
    synthesized metadata entry plus a warning.
    """
    from .aggregate import align_sources

    root = Path(root)
    if not root.is_dir():
        raise NotFoundError(f"dataset directory {root} does not exist")

    warnings: list[str] = []
    files_loaded = 0

    languages: dict[str, LanguageMeta] = {}
    meta_path = root / LANGUAGES_FILE
    if meta_path.is_file():
        languages = dict(load_language_meta(meta_path))
        files_loaded += 1
    else:
        warnings.append(f"{LANGUAGES_FILE} not found; metadata will be synthesized")

    sources: list[SourceMatrix] = []
    for path in _scan_tsv(root / SOURCES_DIR):
        stem = path.stem
        if "__" not in stem:
            raise CorruptDataError(
                f"{path}: source files must be named <class>__<source>.tsv"
            )
        feature_class, source_id = stem.split("__", 1)
        if feature_class not in FEATURE_CLASSES:
            raise CorruptDataError(f"{path}: unknown feature class {feature_class!r}")
        sources.append(
            load_feature_matrix(path, feature_class, role="source", source_id=source_id)
        )
        files_loaded += 1

    aggregates: dict[tuple[str, str], AggregatedMatrix] = {}
    for path in _scan_tsv(root / AGGREGATES_DIR):
        stem = path.stem
        feature_class, _, aggregation = stem.rpartition("_")
        if feature_class not in FEATURE_CLASSES or aggregation not in AGGREGATIONS:
            raise CorruptDataError(
                f"{path}: aggregate files must be named <class>_<aggregation>.tsv"
            )
        matrix = load_feature_matrix(
            path, feature_class, role="aggregate", aggregation=aggregation
        )
        aggregates[(feature_class, aggregation)] = matrix
        files_loaded += 1

    references: dict[str, ReferenceStore] = {}
    for path in _scan_tsv(root / REFERENCES_DIR):
        feature_class = path.stem
        if feature_class not in FEATURE_CLASSES:
            raise CorruptDataError(f"{path}: unknown feature class {feature_class!r}")
        references[feature_class] = load_reference_distances(path, feature_class)
        files_loaded += 1

    by_class: dict[str, list[SourceMatrix]] = {}
    for m in sources:
        by_class.setdefault(m.feature_class, []).append(m)
    aligned: list[SourceMatrix] = []
    for feature_class in sorted(by_class):
        aligned.extend(align_sources(tuple(by_class[feature_class])))

    for matrix in aligned + list(aggregates.values()):
        for code in matrix.codes:
            if code not in languages:
                warnings.append(f"language {code!r} has no metadata entry; synthesized")
                languages[code] = LanguageMeta(code=code, name=code)

    dataset = Dataset(
        languages=languages,
        sources=tuple(aligned),
        aggregates=aggregates,
        references=references,
    )
    report = IngestReport(
        files_loaded=files_loaded,
        languages=len(languages),
        warnings=tuple(warnings),
    )
    return dataset, report
