import numpy as np
import pytest

from typodist.aggregate import aggregate_average, aggregate_union
from typodist.io import write_feature_matrix, write_language_meta
from typodist.model import LanguageMeta, SourceMatrix


def seeded_dataset_dir(root, n_languages=15, n_features=5, seed=31):
    """Dataset directory with two syntax sources, stored union/average
    aggregates, metadata with lineages and coordinates, and two languages
    missing from every source."""
    rng = np.random.default_rng(seed)
    codes = tuple(f"l{i:04d}" for i in range(n_languages))
    schema = tuple(f"f{i}" for i in range(n_features))
    sources = []
    for s in range(2):
        values = rng.integers(0, 2, size=(n_languages, n_features)).astype(float)
        values[rng.random((n_languages, n_features)) < 0.3] = np.nan
        values[:2] = np.nan
        sources.append(SourceMatrix("syntax", schema, codes, values,
                                    source_id=f"s{s}"))
    root.mkdir(parents=True)
    (root / "sources").mkdir()
    for src in sources:
        write_feature_matrix(src, root / "sources" / f"syntax__{src.source_id}.tsv")
    (root / "aggregates").mkdir()
    write_feature_matrix(aggregate_union(sources),
                         root / "aggregates" / "syntax_union.tsv")
    write_feature_matrix(aggregate_average(sources),
                         root / "aggregates" / "syntax_average.tsv")
    families = ("North", "South", "East")
    metas = [
        LanguageMeta(
            code=code,
            name=f"Language {i}",
            family_path=(families[i % 3], f"Branch{i % 4}"),
            latitude=float(rng.uniform(-55, 65)),
            longitude=float(rng.uniform(-175, 175)),
        )
        for i, code in enumerate(codes)
    ]
    write_language_meta(metas, root / "languages.tsv")
    return root


@pytest.fixture
def dataset_dir(tmp_path):
    return seeded_dataset_dir(tmp_path / "ds")
