"""Matrix Market and CSV input/output."""

import csv

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchkit.core import ParseError, read_matrix_market, write_csv, write_matrix_market


def _write(tmp_path, text):
    path = tmp_path / "m.mtx"
    path.write_text(text)
    return str(path)


class TestMatrixMarketRead:
    def test_coordinate_diagonal(self, tmp_path):
        path = _write(
            tmp_path,
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 2.0\n",
        )
        mat = read_matrix_market(path)
        assert sp.issparse(mat)
        assert np.allclose(mat.toarray(), np.diag([1.0, 2.0]))

    def test_symmetric_expansion(self, tmp_path):
        path = _write(
            tmp_path,
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 3.0\n",
        )
        mat = read_matrix_market(path).toarray()
        assert mat[0, 1] == 3.0 and mat[1, 0] == 3.0

    def test_hermitian_conjugates(self, tmp_path):
        path = _write(
            tmp_path,
            "%%MatrixMarket matrix coordinate complex hermitian\n2 2 1\n2 1 1.0 2.0\n",
        )
        mat = read_matrix_market(path).toarray()
        assert mat[1, 0] == 1.0 + 2.0j and mat[0, 1] == 1.0 - 2.0j

    def test_pattern_rejected(self, tmp_path):
        path = _write(tmp_path, "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 1\n")
        with pytest.raises(ParseError, match="line 1.*pattern"):
            read_matrix_market(path)

    def test_out_of_bounds_index_names_line(self, tmp_path):
        path = _write(
            tmp_path,
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n5 1 2.0\n",
        )
        with pytest.raises(ParseError, match="line 4"):
            read_matrix_market(path)

    def test_malformed_header(self, tmp_path):
        path = _write(tmp_path, "%%NotMatrixMarket nothing\n")
        with pytest.raises(ParseError, match="line 1"):
            read_matrix_market(path)

    def test_array_format_dense(self, tmp_path):
        path = _write(
            tmp_path,
            "%%MatrixMarket matrix array real general\n2 2\n1.0\n3.0\n2.0\n4.0\n",
        )
        mat = read_matrix_market(path)
        assert isinstance(mat, np.ndarray)
        assert np.allclose(mat, [[1.0, 2.0], [3.0, 4.0]])

    def test_array_symmetric(self, tmp_path):
        path = _write(
            tmp_path,
            "%%MatrixMarket matrix array real symmetric\n2 2\n1.0\n5.0\n2.0\n",
        )
        mat = read_matrix_market(path)
        assert np.allclose(mat, [[1.0, 5.0], [5.0, 2.0]])

    def test_entry_count_mismatch(self, tmp_path):
        path = _write(
            tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n"
        )
        with pytest.raises(ParseError, match="declared 2"):
            read_matrix_market(path)


class TestMatrixMarketRoundTrip:
    @pytest.mark.parametrize("complex_field", [False, True])
    def test_sparse_round_trip_exact(self, tmp_path, complex_field):
        rng = np.random.default_rng(0)
        dense = rng.standard_normal((7, 5))
        if complex_field:
            dense = dense + 1j * rng.standard_normal((7, 5))
        dense[rng.random((7, 5)) < 0.6] = 0.0
        mat = sp.csr_array(dense)
        path = tmp_path / "rt.mtx"
        write_matrix_market(path, mat)
        back = read_matrix_market(str(path))
        assert (back != mat).nnz == 0  # value-exact round trip
        write_matrix_market(tmp_path / "rt2.mtx", back)
        again = read_matrix_market(str(tmp_path / "rt2.mtx"))
        assert (again != back).nnz == 0

    def test_dense_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        dense = rng.standard_normal((4, 6))
        path = tmp_path / "d.mtx"
        write_matrix_market(path, dense)
        back = read_matrix_market(str(path))
        assert np.array_equal(back, dense)


class TestWriteCsv:
    def test_empty_table_header_only(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv([], ["a", "b"], path)
        assert path.read_bytes() == b"a,b\r\n"

    def test_numeric_round_trip_bit_exact(self, tmp_path):
        value = 0.1 + 0.2  # not exactly representable in decimal
        path = tmp_path / "t.csv"
        write_csv([{"x": value, "n": 3}], ["x", "n"], path)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert float(rows[0]["x"]) == value
        assert int(rows[0]["n"]) == 3

    def test_comma_field_quoted(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv([{"label": "a,b", "v": 1}], ["label", "v"], path)
        text = path.read_text()
        assert '"a,b"' in text

    def test_missing_field_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="missing"):
            write_csv([{"a": 1}], ["a", "b"], tmp_path / "t.csv")

    @settings(max_examples=80, deadline=None)
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_seventeen_digits_round_trip(self, value):
        assert float("%.17g" % value) == value
