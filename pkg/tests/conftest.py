import numpy as np
import pytest

from typodist.aggregate import aggregate_average, aggregate_knn, aggregate_union
from typodist.io import write_feature_matrix, write_language_meta
from typodist.model import Dataset, LanguageMeta, SourceMatrix


def make_source(rows, codes=None, schema=None, feature_class="syntax",
                source_id="src"):
    """Build a SourceMatrix from a list of row lists (None = missing)."""
    rows = [[np.nan if v is None else float(v) for v in row] for row in rows]
    codes = tuple(codes or [f"l{i:02d}" for i in range(len(rows))])
    schema = tuple(schema or [f"f{i}" for i in range(len(rows[0]))])
    return SourceMatrix(feature_class, schema, codes, np.array(rows),
                        source_id=source_id)


def random_sources(n_languages, n_features, n_sources=2, seed=0,
                   missing=0.3, feature_class="syntax", empty_rows=0):
    """Seeded random binary sources sharing codes and schema."""
    rng = np.random.default_rng(seed)
    codes = tuple(f"l{i:04d}" for i in range(n_languages))
    schema = tuple(f"f{i}" for i in range(n_features))
    sources = []
    for s in range(n_sources):
        values = rng.integers(0, 2, size=(n_languages, n_features)).astype(float)
        values[rng.random((n_languages, n_features)) < missing] = np.nan
        for i in range(empty_rows):
            values[i] = np.nan
        sources.append(SourceMatrix(feature_class, schema, codes, values,
                                    source_id=f"s{s}"))
    return sources


def synth_metadata(codes, seed=0):
    """LanguageMeta for every code, with families and coordinates."""
    rng = np.random.default_rng(seed)
    families = ["Alpha", "Beta", "Gamma", ""]
    metas = {}
    for i, code in enumerate(sorted(codes)):
        family = families[i % len(families)]
        path = (family, f"Sub{i % 3}") if family else ()
        metas[code] = LanguageMeta(
            code=code,
            name=f"Lang {code}",
            family_path=path,
            macroarea="Area",
            latitude=float(rng.uniform(-60, 60)),
            longitude=float(rng.uniform(-180, 180)),
        )
    return metas


@pytest.fixture
def tiny_dataset():
    """4 languages (one fully empty), 2 syntax sources, union + average."""
    s1 = make_source(
        [[1, 0, None], [1, 1, 0], [None, None, None], [0, None, 1]],
        codes=("aaa", "bbb", "ccc", "ddd"), source_id="wals",
    )
    s2 = make_source(
        [[None, 0, 1], [1, None, 0], [None, None, None], [0, 1, None]],
        codes=("aaa", "bbb", "ccc", "ddd"), source_id="sswl",
    )
    sources = (s1, s2)
    meta = synth_metadata([*s1.codes])
    return Dataset(
        languages=meta,
        sources=sources,
        aggregates={
            ("syntax", "union"): aggregate_union(sources),
            ("syntax", "average"): aggregate_average(sources),
        },
    )


def build_dataset_dir(root, *, n_languages=12, n_features=6, seed=7,
                      with_reference=False, classes=("syntax",)):
    """Write a complete on-disk dataset for CLI tests; returns the root."""
    root.mkdir(parents=True, exist_ok=True)
    all_codes = set()
    for fc in classes:
        sources = random_sources(n_languages, n_features, seed=seed,
                                 feature_class=fc, empty_rows=2)
        (root / "sources").mkdir(exist_ok=True)
        for src in sources:
            write_feature_matrix(src, root / "sources" / f"{fc}__{src.source_id}.tsv")
        all_codes.update(sources[0].codes)
        (root / "aggregates").mkdir(exist_ok=True)
        write_feature_matrix(aggregate_union(sources),
                             root / "aggregates" / f"{fc}_union.tsv")
        write_feature_matrix(aggregate_average(sources),
                             root / "aggregates" / f"{fc}_average.tsv")
    metas = synth_metadata(all_codes, seed=seed)
    write_language_meta(metas.values(), root / "languages.tsv")
    if with_reference:
        from typodist.distance import PairwiseLanguageDistance
        from typodist.io import load_feature_matrix, write_reference_distances
        from typodist.model import ReferenceStore

        for fc in classes:
            matrix = load_feature_matrix(
                root / "aggregates" / f"{fc}_union.tsv", fc,
                role="aggregate", aggregation="union",
            )
            engine = PairwiseLanguageDistance(metric="angular").fit(matrix)
            rounded = np.round(engine.transform(), 2)
            store = ReferenceStore(fc, matrix.codes, rounded)
            (root / "references").mkdir(exist_ok=True)
            write_reference_distances(store, root / "references" / f"{fc}.tsv",
                                      fmt="dense")
    return root


@pytest.fixture
def dataset_dir(tmp_path):
    return build_dataset_dir(tmp_path / "ds")


@pytest.fixture
def audited_dataset_dir(tmp_path):
    return build_dataset_dir(tmp_path / "ds", with_reference=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for status in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            rows.append((nodeid.split("::")[-1], status))
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, status in sorted(dict(rows).items()):
            label = {"passed": "PASS", "failed": "FAIL",
                     "error": "FAIL", "skipped": "SKIP"}[status]
            terminalreporter.write_line(f"[{label}] {name}")
