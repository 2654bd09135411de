import math

import numpy as np
import pytest

from typodist.errors import (
    AsymmetricReferenceError,
    CorruptDataError,
    DuplicateLanguageError,
    EmptyListError,
    MalformedCellError,
    MalformedRowError,
    NotFoundError,
    SchemaMismatchError,
)
from typodist.io import (
    format_cell,
    format_distance,
    load_dataset,
    load_feature_matrix,
    load_language_list,
    load_language_meta,
    load_reference_distances,
    parse_cell,
    write_feature_matrix,
    write_language_meta,
    write_reference_distances,
)
from typodist.model import ReferenceStore

from conftest import build_dataset_dir, make_source, synth_metadata


class TestParseCell:
    def test_marker_is_nan(self):
        assert math.isnan(parse_cell("--", binary=True, where="t"))

    @pytest.mark.parametrize("token,expected", [("0", 0.0), ("1", 1.0)])
    def test_binary_values(self, token, expected):
        assert parse_cell(token, binary=True, where="t") == expected

    def test_decimal_in_binary_matrix(self):
        with pytest.raises(SchemaMismatchError):
            parse_cell("0.5", binary=True, where="t")

    def test_decimal_in_average_matrix(self):
        assert parse_cell("0.5", binary=False, where="t") == 0.5

    def test_garbage(self):
        with pytest.raises(MalformedCellError):
            parse_cell("abc", binary=True, where="t")

    @pytest.mark.parametrize("token", ["-0.1", "1.5", "inf", "nan"])
    def test_out_of_range(self, token):
        with pytest.raises(MalformedCellError):
            parse_cell(token, binary=False, where="t")


def test_format_cell_round_trip():
    assert format_cell(float("nan")) == "--"
    assert format_cell(1.0) == "1"
    assert format_cell(0.0) == "0"
    assert parse_cell(format_cell(0.5), binary=False, where="t") == 0.5


def test_format_distance_uses_repr():
    value = 0.2928932188134525
    assert float(format_distance(value)) == value
    assert format_distance(float("nan")) == "nan"


class TestFeatureMatrixIO:
    def test_round_trip(self, tmp_path):
        src = make_source([[1, 0, None], [None, None, None]])
        path = tmp_path / "m.tsv"
        write_feature_matrix(src, path, header_comment="# test run")
        loaded = load_feature_matrix(path, "syntax", role="source")
        assert loaded.codes == src.codes
        assert loaded.schema == src.schema
        assert np.array_equal(loaded.values, src.values, equal_nan=True)

    def test_header_required(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("lang\tf0\naaa\t1\n")
        with pytest.raises(CorruptDataError):
            load_feature_matrix(path, "syntax")

    def test_field_count_checked(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("language\tf0\tf1\naaa\t1\n")
        with pytest.raises(MalformedRowError):
            load_feature_matrix(path, "syntax")

    def test_duplicate_language(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("language\tf0\naaa\t1\naaa\t0\n")
        with pytest.raises(DuplicateLanguageError):
            load_feature_matrix(path, "syntax")

    def test_average_role_allows_decimals(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("language\tf0\naaa\t0.5\n")
        m = load_feature_matrix(path, "syntax", role="aggregate",
                                aggregation="average")
        assert m.values[0, 0] == 0.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(NotFoundError):
            load_feature_matrix(tmp_path / "absent.tsv", "syntax")


class TestLanguageMetaIO:
    def test_round_trip(self, tmp_path):
        metas = synth_metadata(["aaa", "bbb", "ccc"])
        path = tmp_path / "languages.tsv"
        write_language_meta(metas.values(), path)
        loaded = load_language_meta(path)
        assert loaded == metas

    def test_family_split_on_slash(self, tmp_path):
        path = tmp_path / "languages.tsv"
        path.write_text("code\tname\tfamily_path\n"
                        "eng\tEnglish\tIndo-European/Germanic/West\n")
        meta = load_language_meta(path)["eng"]
        assert meta.family_path == ("Indo-European", "Germanic", "West")

    def test_empty_family_is_isolate(self, tmp_path):
        path = tmp_path / "languages.tsv"
        path.write_text("code\tname\tfamily_path\nxxx\tMystery\t\n")
        assert load_language_meta(path)["xxx"].family_path == ()

    def test_bad_latitude(self, tmp_path):
        path = tmp_path / "languages.tsv"
        path.write_text("code\tname\tfamily_path\tmacroarea\tlat\n"
                        "aaa\tA\t\t\tnorth\n")
        with pytest.raises(MalformedRowError):
            load_language_meta(path)


class TestReferenceIO:
    def make_store(self):
        m = np.array([[0.0, 0.25, np.nan],
                      [0.25, 0.0, 0.5],
                      [np.nan, 0.5, 0.0]])
        return ReferenceStore("syntax", ("aaa", "bbb", "ccc"), m)

    @pytest.mark.parametrize("fmt", ["triplet", "dense"])
    def test_round_trip(self, tmp_path, fmt):
        store = self.make_store()
        path = tmp_path / "syntax.tsv"
        write_reference_distances(store, path, fmt=fmt)
        loaded = load_reference_distances(path, "syntax")
        assert loaded.codes == store.codes
        assert np.array_equal(loaded.matrix, store.matrix, equal_nan=True)

    def test_headerless_triplets(self, tmp_path):
        path = tmp_path / "syntax.tsv"
        path.write_text("aaa\tbbb\t0.25\naaa\taaa\t0\nbbb\tbbb\t0\n")
        store = load_reference_distances(path, "syntax")
        assert store.lookup("bbb", "aaa") == 0.25

    def test_conflicting_triplets(self, tmp_path):
        path = tmp_path / "syntax.tsv"
        path.write_text("lang1\tlang2\tvalue\naaa\tbbb\t0.25\nbbb\taaa\t0.35\n")
        with pytest.raises(AsymmetricReferenceError):
            load_reference_distances(path, "syntax")

    def test_dense_missing_row(self, tmp_path):
        path = tmp_path / "syntax.tsv"
        path.write_text("language\taaa\tbbb\naaa\t0\t0.2\n")
        with pytest.raises(CorruptDataError):
            load_reference_distances(path, "syntax")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "syntax.tsv"
        path.write_text("")
        with pytest.raises(CorruptDataError):
            load_reference_distances(path, "syntax")


class TestLanguageList:
    def test_resolution_order(self, tmp_path, tiny_dataset):
        # exact code, exact name, then case-insensitive name
        path = tmp_path / "subset.txt"
        path.write_text("aaa\nLang bbb\nLANG CCC\nmystery\naaa\n")
        codes, warnings = load_language_list(path, tiny_dataset)
        assert codes == ["aaa", "bbb", "ccc"]
        assert any("mystery" in w for w in warnings)
        assert any("more than once" in w for w in warnings)

    def test_empty_list(self, tmp_path, tiny_dataset):
        path = tmp_path / "subset.txt"
        path.write_text("\n\n")
        with pytest.raises(EmptyListError):
            load_language_list(path, tiny_dataset)


class TestLoadDataset:
    def test_full_directory(self, tmp_path):
        root = build_dataset_dir(tmp_path / "ds", with_reference=True)
        dataset, report = load_dataset(root)
        assert len(dataset.languages) == 12
        assert len(dataset.sources) == 2
        assert ("syntax", "union") in dataset.aggregates
        assert "syntax" in dataset.references
        assert report.files_loaded == 6
        assert report.warnings == ()

    def test_missing_directory(self, tmp_path):
        with pytest.raises(NotFoundError):
            load_dataset(tmp_path / "nope")

    def test_synthesized_metadata_warns(self, tmp_path):
        root = tmp_path / "ds"
        (root / "sources").mkdir(parents=True)
        write_feature_matrix(make_source([[1, 0]]),
                             root / "sources" / "syntax__s.tsv")
        dataset, report = load_dataset(root)
        assert "l00" in dataset.languages
        assert dataset.languages["l00"].name == "l00"
        assert any("synthesized" in w for w in report.warnings)

    def test_bad_source_filename(self, tmp_path):
        root = tmp_path / "ds"
        (root / "sources").mkdir(parents=True)
        write_feature_matrix(make_source([[1]]),
                             root / "sources" / "syntax.tsv")
        with pytest.raises(CorruptDataError):
            load_dataset(root)

    def test_heterogeneous_schemas_aligned(self, tmp_path):
        root = tmp_path / "ds"
        (root / "sources").mkdir(parents=True)
        a = make_source([[1]], codes=("aaa",), schema=("f0",), source_id="s1")
        b = make_source([[0]], codes=("aaa",), schema=("f1",), source_id="s2")
        write_feature_matrix(a, root / "sources" / "syntax__s1.tsv")
        write_feature_matrix(b, root / "sources" / "syntax__s2.tsv")
        dataset, _ = load_dataset(root)
        schemas = {m.schema for m in dataset.sources}
        assert schemas == {("f0", "f1")}
