"""Matrix Market and CSV input/output.

The Matrix Market reader supports coordinate and array formats over
real, integer, and complex fields with general, symmetric, or Hermitian
symmetry.  Symmetric storage is expanded to the full matrix; pattern
files are rejected.  Parse failures report the offending line number.
"""

from __future__ import annotations

import csv

import numpy as np
import scipy.sparse as sp

__all__ = ["ParseError", "read_matrix_market", "write_matrix_market", "write_csv"]

# 17 significant digits round-trips float64 exactly
_FLOAT_FMT = "%.17g"


class ParseError(ValueError):
    """Malformed Matrix Market input; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _parse_header(tokens: list[str]):
    if len(tokens) != 5 or tokens[0] != "%%MatrixMarket":
        raise ParseError("expected '%%MatrixMarket matrix <format> <field> <symmetry>'", 1)
    _, obj, fmt, field, symmetry = (t.lower() for t in tokens)
    if obj != "matrix":
        raise ParseError(f"unsupported object {obj!r}", 1)
    if fmt not in ("coordinate", "array"):
        raise ParseError(f"unsupported format {fmt!r}", 1)
    if field == "pattern":
        raise ParseError("pattern field is not supported", 1)
    if field not in ("real", "integer", "complex"):
        raise ParseError(f"unsupported field {field!r}", 1)
    if symmetry not in ("general", "symmetric", "hermitian"):
        raise ParseError(f"unsupported symmetry {symmetry!r}", 1)
    return fmt, field, symmetry


def _value_columns(field: str) -> int:
    return 2 if field == "complex" else 1


def _parse_value(parts: list[str], field: str, lineno: int):
    try:
        if field == "complex":
            return complex(float(parts[0]), float(parts[1]))
        return float(parts[0])
    except ValueError:
        raise ParseError(f"bad numeric value {' '.join(parts)!r}", lineno)


def read_matrix_market(path):
    """Read a .mtx file into a CSR sparse matrix (coordinate) or ndarray (array)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()

    if not lines:
        raise ParseError("empty file", 1)
    fmt, field, symmetry = _parse_header(lines[0].split())
    dtype = np.complex128 if field == "complex" else np.float64

    # skip comments and blank lines to the size line
    idx = 1
    while idx < len(lines) and (lines[idx].startswith("%") or not lines[idx].strip()):
        idx += 1
    if idx >= len(lines):
        raise ParseError("missing size line", len(lines))
    size_parts = lines[idx].split()
    size_line = idx + 1
    idx += 1

    if fmt == "coordinate":
        if len(size_parts) != 3:
            raise ParseError("coordinate size line needs 'rows cols nnz'", size_line)
        try:
            rows, cols, count = (int(p) for p in size_parts)
        except ValueError:
            raise ParseError("size entries must be integers", size_line)
        ii, jj, vv = [], [], []
        seen = 0
        ncol = _value_columns(field)
        for lineno in range(idx, len(lines)):
            raw = lines[lineno].strip()
            if not raw or raw.startswith("%"):
                continue
            parts = raw.split()
            if len(parts) != 2 + ncol:
                raise ParseError(f"expected {2 + ncol} fields, got {len(parts)}", lineno + 1)
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError("indices must be integers", lineno + 1)
            if not (1 <= i <= rows and 1 <= j <= cols):
                raise ParseError(f"index ({i}, {j}) out of bounds for {rows}x{cols}", lineno + 1)
            v = _parse_value(parts[2:], field, lineno + 1)
            ii.append(i - 1)
            jj.append(j - 1)
            vv.append(v)
            seen += 1
        if seen != count:
            raise ParseError(f"declared {count} entries but found {seen}", len(lines))
        if symmetry in ("symmetric", "hermitian"):
            extra_i, extra_j, extra_v = [], [], []
            for i, j, v in zip(ii, jj, vv):
                if i != j:
                    extra_i.append(j)
                    extra_j.append(i)
                    extra_v.append(np.conj(v) if symmetry == "hermitian" else v)
            ii += extra_i
            jj += extra_j
            vv += extra_v
        mat = sp.coo_array((np.asarray(vv, dtype=dtype), (ii, jj)), shape=(rows, cols))
        out = sp.csr_array(mat)
        out.sort_indices()
        return out

    # array format: column-major dense values
    if len(size_parts) != 2:
        raise ParseError("array size line needs 'rows cols'", size_line)
    try:
        rows, cols = (int(p) for p in size_parts)
    except ValueError:
        raise ParseError("size entries must be integers", size_line)
    if symmetry == "general":
        expected = rows * cols
    else:
        if rows != cols:
            raise ParseError("symmetric array storage requires a square matrix", size_line)
        expected = rows * (rows + 1) // 2
    values = []
    ncol = _value_columns(field)
    for lineno in range(idx, len(lines)):
        raw = lines[lineno].strip()
        if not raw or raw.startswith("%"):
            continue
        parts = raw.split()
        if len(parts) != ncol:
            raise ParseError(f"expected {ncol} numeric fields, got {len(parts)}", lineno + 1)
        values.append(_parse_value(parts, field, lineno + 1))
    if len(values) != expected:
        raise ParseError(f"declared {expected} values but found {len(values)}", len(lines))
    out = np.zeros((rows, cols), dtype=dtype, order="F")
    if symmetry == "general":
        out[:] = np.asarray(values, dtype=dtype).reshape((rows, cols), order="F")
    else:
        pos = 0
        for j in range(cols):
            for i in range(j, rows):
                v = values[pos]
                pos += 1
                out[i, j] = v
                if i != j:
                    out[j, i] = np.conj(v) if symmetry == "hermitian" else v
    return out


def _fmt_value(v, complex_field: bool) -> str:
    if complex_field:
        return f"{_FLOAT_FMT % v.real} {_FLOAT_FMT % v.imag}"
    return _FLOAT_FMT % v.real


def write_matrix_market(path, mat) -> None:
    """Write a dense array or sparse matrix in Matrix Market format (general symmetry)."""
    complex_field = np.iscomplexobj(mat) if not sp.issparse(mat) else np.iscomplexobj(mat.data)
    field = "complex" if complex_field else "real"
    with open(path, "w", encoding="utf-8") as fh:
        if sp.issparse(mat):
            coo = sp.coo_array(mat)
            fh.write(f"%%MatrixMarket matrix coordinate {field} general\n")
            fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i + 1} {j + 1} {_fmt_value(v, complex_field)}\n")
        else:
            arr = np.asarray(mat)
            fh.write(f"%%MatrixMarket matrix array {field} general\n")
            fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
            for j in range(arr.shape[1]):
                for i in range(arr.shape[0]):
                    fh.write(_fmt_value(arr[i, j], complex_field) + "\n")


def _csv_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return _FLOAT_FMT % value
    if isinstance(value, (int, np.integer, str)):
        return str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return f"{_FLOAT_FMT % value.real}{'+' if value.imag >= 0 else '-'}{_FLOAT_FMT % abs(value.imag)}j"
    return str(value)


def write_csv(rows, schema, path) -> None:
    """Write records as RFC-4180 CSV with a header row.

    Parameters
    ----------
    rows : iterable of dict
        Records; each must supply every schema field.
    schema : sequence of str
        Ordered field names for the header.
    path : str
        Output file path.
    """
    schema = list(schema)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(schema)
        for row in rows:
            missing = [f for f in schema if f not in row]
            if missing:
                raise ValueError(f"record missing fields {missing}")
            writer.writerow([_csv_cell(row[f]) for f in schema])
