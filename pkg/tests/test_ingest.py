import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from eqmine.ingest import (
    EmptyAfterFilteringError,
    IngestError,
    NoNumericColumnsError,
    RaggedRowsError,
    Relation,
    candidate_view,
    load_relation,
    write_relation,
)
from eqmine.model import canonicalize, subsets_of_arity


def _write(tmp_path, text, name="r.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_header_and_missing(tmp_path):
    rel = load_relation(_write(tmp_path, "a,b\n1,2\n3,x\n"))
    assert rel.column_names == ("a", "b")
    np.testing.assert_array_equal(rel.column(0), [1.0, 3.0])
    assert rel.column(1)[0] == 2.0 and math.isnan(rel.column(1)[1])


def test_headerless(tmp_path):
    rel = load_relation(_write(tmp_path, "1,2\n3,4\n"))
    assert rel.column_names == ("col0", "col1")
    np.testing.assert_array_equal(rel.data, [[1, 2], [3, 4]])


def test_ragged(tmp_path):
    with pytest.raises(RaggedRowsError):
        load_relation(_write(tmp_path, "1,2,3\n4,5\n"))


def test_non_finite_literals_are_missing(tmp_path):
    rel = load_relation(_write(tmp_path, "a,b\nnan,inf\n1e3,-Infinity\n,2.5\n"))
    assert np.isnan(rel.data[:2, 1]).all()
    assert math.isnan(rel.data[0, 0]) and rel.data[1, 0] == 1000.0
    assert math.isnan(rel.data[2, 0]) and rel.data[2, 1] == 2.5


def test_forced_header_modes(tmp_path):
    path = _write(tmp_path, "1,2\n3,4\n")
    assert load_relation(path, header="present").column_names == ("1", "2")
    assert load_relation(path, header="absent").row_count == 2


def test_semicolon_and_tab(tmp_path):
    assert load_relation(_write(tmp_path, "a;b\n1;2\n"), delimiter=";").column_count == 2
    assert load_relation(_write(tmp_path, "a\tb\n1\t2\n", "t.tsv"), delimiter="\t").column_count == 2


def test_no_numeric_columns(tmp_path):
    with pytest.raises(NoNumericColumnsError):
        load_relation(_write(tmp_path, "a,b\nx,y\n"))


def test_missing_file(tmp_path):
    with pytest.raises(IngestError):
        load_relation(tmp_path / "nope.csv")


def test_relation_is_read_only():
    rel = Relation("r", ("a",), np.array([[1.0]]))
    with pytest.raises(ValueError):
        rel.data[0, 0] = 2.0


@settings(max_examples=40, deadline=None)
@given(
    arrays(
        np.float64,
        st.tuples(st.integers(1, 8), st.integers(1, 4)),
        elements=st.one_of(st.floats(allow_nan=False, allow_infinity=False), st.just(np.nan)),
    )
)
def test_round_trip(tmp_path_factory, data):
    assume(not np.isnan(data).all())
    rel = Relation("r", tuple(f"c{j}" for j in range(data.shape[1])), data)
    path = tmp_path_factory.mktemp("rt") / "r.csv"
    write_relation(rel, path)
    back = load_relation(path, header="present")
    np.testing.assert_array_equal(np.isnan(back.data), np.isnan(rel.data))
    np.testing.assert_array_equal(back.data, rel.data)


def _rel(rows, name="r"):
    data = np.array(rows, dtype=float)
    return Relation(name, tuple(f"c{j}" for j in range(data.shape[1])), data)


class TestCandidateView:
    def test_complete_case_per_side(self):
        left = _rel([[1, 2], [np.nan, 3], [4, 5]])
        right = _rel([[1, 2], [3, 4], [5, np.nan]])
        view = candidate_view(left, right, canonicalize([(0, 0), (1, 1)]))
        np.testing.assert_array_equal(view.left_matrix, [[1, 2], [4, 5]])
        np.testing.assert_array_equal(view.right_matrix, [[1, 2], [3, 4]])

    def test_only_referenced_columns_matter(self):
        left = _rel([[1, np.nan], [2, 3]])
        view = candidate_view(left, left, canonicalize([(0, 0)]))
        assert view.left_rows == 2

    def test_column_order_follows_pairs(self):
        left = _rel([[1, 10]])
        right = _rel([[7, 8, 9]])
        view = candidate_view(left, right, canonicalize([(1, 0), (0, 2)]))
        np.testing.assert_array_equal(view.left_matrix, [[1, 10]])
        np.testing.assert_array_equal(view.right_matrix, [[9, 7]])

    def test_subsample_is_exact_and_deterministic(self):
        rng = np.random.default_rng(0)
        big = _rel(rng.standard_normal((10_000, 2)))
        p = canonicalize([(0, 1)])
        v1 = candidate_view(big, big, p, max_rows=2000, seed=11)
        v2 = candidate_view(big, big, p, max_rows=2000, seed=11)
        assert v1.left_rows == v1.right_rows == 2000
        assert v1.left_matrix.tobytes() == v2.left_matrix.tobytes()
        assert v1.right_matrix.tobytes() == v2.right_matrix.tobytes()
        v3 = candidate_view(big, big, p, max_rows=2000, seed=12)
        assert v3.left_matrix.tobytes() != v1.left_matrix.tobytes()

    def test_empty_after_filtering(self):
        left = _rel([[np.nan, 1], [np.nan, 2]])
        with pytest.raises(EmptyAfterFilteringError):
            candidate_view(left, left, canonicalize([(0, 1)]))

    def test_bad_index(self):
        with pytest.raises(IndexError):
            candidate_view(_rel([[1]]), _rel([[1]]), canonicalize([(0, 3)]))

    def test_complete_case_monotone(self):
        rng = np.random.default_rng(3)
        data = rng.standard_normal((300, 4))
        data[rng.random(data.shape) < 0.2] = np.nan
        rel = _rel(data)
        big = canonicalize([(j, j) for j in range(4)])
        n_big = candidate_view(rel, rel, big).left_rows
        for k in range(1, 4):
            for sub in subsets_of_arity(big, k):
                assert candidate_view(rel, rel, sub).left_rows >= n_big
