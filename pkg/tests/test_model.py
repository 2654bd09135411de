import numpy as np
import pytest

from typodist.errors import (
    AsymmetricReferenceError,
    DuplicateLanguageError,
    MissingAggregateError,
    MissingReferenceError,
    SchemaMismatchError,
    UnknownLanguageError,
    ValueOutOfRangeError,
)
from typodist.model import (
    AggregatedMatrix,
    Dataset,
    FeatureMatrix,
    FeatureVector,
    LanguageMeta,
    ReferenceStore,
    SourceMatrix,
    UNKNOWN_FAMILY,
    is_empty_vector,
    nonmissing_count,
)

from conftest import make_source


class TestFeatureVector:
    def test_basic(self):
        v = FeatureVector("eng", "syntax", [1.0, np.nan, 0.0])
        assert len(v) == 3
        assert not v.is_empty()
        assert v.nonmissing_count() == 2

    def test_empty_detection(self):
        v = FeatureVector("xxx", "syntax", [np.nan, np.nan])
        assert v.is_empty()
        assert v.nonmissing_count() == 0

    def test_zero_length_rejected(self):
        with pytest.raises(ValueOutOfRangeError):
            FeatureVector("eng", "syntax", [])

    def test_values_frozen(self):
        v = FeatureVector("eng", "syntax", [1.0, 0.0])
        with pytest.raises(ValueError):
            v.values[0] = 0.5

    def test_helpers_accept_vector_or_array(self):
        v = FeatureVector("eng", "syntax", [1.0, np.nan])
        assert not is_empty_vector(v)
        assert nonmissing_count(v) == 1
        assert is_empty_vector([np.nan])
        assert nonmissing_count([1.0, 0.0, np.nan]) == 2


class TestFeatureMatrix:
    def test_rows_sorted_by_code(self):
        m = FeatureMatrix("syntax", ("f0",), ("zzz", "aaa"),
                          np.array([[1.0], [0.0]]))
        assert m.codes == ("aaa", "zzz")
        assert m.row("zzz")[0] == 1.0
        assert m.row("aaa")[0] == 0.0

    def test_duplicate_codes_rejected(self):
        with pytest.raises(DuplicateLanguageError):
            FeatureMatrix("syntax", ("f0",), ("aaa", "aaa"),
                          np.zeros((2, 1)))

    def test_duplicate_schema_rejected(self):
        with pytest.raises(SchemaMismatchError):
            FeatureMatrix("syntax", ("f0", "f0"), ("aaa",), np.zeros((1, 2)))

    def test_empty_schema_rejected(self):
        with pytest.raises(SchemaMismatchError):
            FeatureMatrix("syntax", (), ("aaa",), np.zeros((1, 0)))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(SchemaMismatchError):
            FeatureMatrix("syntax", ("f0",), ("aaa", "bbb"), np.zeros((1, 1)))

    def test_unknown_language(self):
        m = make_source([[1, 0]])
        with pytest.raises(UnknownLanguageError):
            m.index("nope")
        assert "l00" in m
        assert "nope" not in m

    def test_empty_mask(self):
        m = make_source([[1, 0], [None, None]])
        assert m.empty_mask.tolist() == [False, True]

    def test_vector_round_trip(self):
        m = make_source([[1, None]])
        v = m.vector("l00")
        assert v.language == "l00"
        assert np.array_equal(v.values, m.row("l00"), equal_nan=True)
        assert [fv.language for fv in m.vectors()] == list(m.codes)

    def test_values_immutable(self):
        m = make_source([[1, 0]])
        with pytest.raises(ValueError):
            m.values[0, 0] = 0.5


class TestSourceMatrix:
    def test_binary_enforced(self):
        with pytest.raises(SchemaMismatchError):
            SourceMatrix("syntax", ("f0",), ("aaa",), np.array([[0.5]]))

    def test_missing_allowed(self):
        m = SourceMatrix("syntax", ("f0",), ("aaa",), np.array([[np.nan]]))
        assert m.empty_mask[0]


class TestAggregatedMatrix:
    def test_union_binary_enforced(self):
        with pytest.raises(SchemaMismatchError):
            AggregatedMatrix("syntax", ("f0",), ("aaa",),
                             np.array([[0.5]]), aggregation="union")

    def test_average_decimals_allowed(self):
        m = AggregatedMatrix("syntax", ("f0",), ("aaa",),
                             np.array([[0.5]]), aggregation="average")
        assert m.values[0, 0] == 0.5

    def test_average_range_enforced(self):
        with pytest.raises(ValueOutOfRangeError):
            AggregatedMatrix("syntax", ("f0",), ("aaa",),
                             np.array([[1.5]]), aggregation="average")

    def test_knn_rejects_missing(self):
        with pytest.raises(SchemaMismatchError):
            AggregatedMatrix("syntax", ("f0",), ("aaa",),
                             np.array([[np.nan]]), aggregation="knn")

    def test_unknown_aggregation(self):
        with pytest.raises(SchemaMismatchError):
            AggregatedMatrix("syntax", ("f0",), ("aaa",),
                             np.array([[1.0]]), aggregation="median")


class TestLanguageMeta:
    def test_family_bucket(self):
        m = LanguageMeta("eng", family_path=("Indo-European", "Germanic"))
        assert m.family == "Indo-European"

    def test_unknown_family(self):
        assert LanguageMeta("xxx").family == UNKNOWN_FAMILY

    def test_speaker_rank_positive(self):
        with pytest.raises(ValueOutOfRangeError):
            LanguageMeta("eng", speaker_rank=0)


class TestReferenceStore:
    def test_lookup_symmetric(self):
        store = ReferenceStore("syntax", ("bbb", "aaa"),
                               np.array([[0.0, 0.25], [0.25, 0.0]]))
        assert store.codes == ("aaa", "bbb")
        assert store.lookup("aaa", "bbb") == 0.25
        assert store.lookup("bbb", "aaa") == 0.25
        assert store.lookup("aaa", "zzz") is None

    def test_absent_pair_is_none(self):
        m = np.array([[0.0, np.nan], [np.nan, 0.0]])
        store = ReferenceStore("syntax", ("aaa", "bbb"), m)
        assert store.lookup("aaa", "bbb") is None
        assert store.n_pairs == 2

    def test_asymmetric_rejected(self):
        with pytest.raises(AsymmetricReferenceError):
            ReferenceStore("syntax", ("aaa", "bbb"),
                           np.array([[0.0, 0.3], [0.2, 0.0]]))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueOutOfRangeError):
            ReferenceStore("syntax", ("aaa", "bbb"),
                           np.array([[0.0, 1.5], [1.5, 0.0]]))

    def test_pairs_sorted_upper_triangle(self):
        m = np.array([[0.0, 0.1], [0.1, 0.0]])
        store = ReferenceStore("syntax", ("bbb", "aaa"), m)
        assert list(store.pairs()) == [
            ("aaa", "aaa", 0.0), ("aaa", "bbb", 0.1), ("bbb", "bbb", 0.0),
        ]


class TestDataset:
    def test_matrix_codes_need_metadata(self):
        src = make_source([[1, 0]])
        with pytest.raises(UnknownLanguageError):
            Dataset(languages={}, sources=(src,))

    def test_schema_consistency_per_class(self):
        a = make_source([[1]], codes=("aaa",), schema=("f0",), source_id="s1")
        b = make_source([[1]], codes=("aaa",), schema=("g0",), source_id="s2")
        meta = {"aaa": LanguageMeta("aaa")}
        with pytest.raises(SchemaMismatchError):
            Dataset(languages=meta, sources=(a, b))

    def test_aggregate_and_reference_errors(self, tiny_dataset):
        with pytest.raises(MissingAggregateError):
            tiny_dataset.aggregate("syntax", "knn")
        with pytest.raises(MissingReferenceError):
            tiny_dataset.reference("syntax")

    def test_with_aggregates_merges(self, tiny_dataset):
        codes = tiny_dataset.aggregate("syntax", "union").codes
        extra = AggregatedMatrix("phonology", ("p0",), codes,
                                 np.ones((len(codes), 1)), aggregation="union")
        ds = tiny_dataset.with_aggregates({("phonology", "union"): extra})
        # the copy gained a key and kept the old ones
        assert ("phonology", "union") in ds.aggregates
        assert ("syntax", "union") in ds.aggregates

    def test_sources_for(self, tiny_dataset):
        assert len(tiny_dataset.sources_for("syntax")) == 2
        assert tiny_dataset.sources_for("phonology") == ()
