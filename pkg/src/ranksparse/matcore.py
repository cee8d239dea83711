"""Dense matrix values, norms, SVD, supports and matrix file I/O.

Matrices are plain ``numpy.ndarray`` objects of dtype float64; :func:`as_matrix`
is the single gate that admits them (2-D, finite).  The rest of the package
calls it at its public boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "MatrixParseError",
    "SvdError",
    "SvdResult",
    "SupportPattern",
    "as_matrix",
    "l1_norm",
    "linf_norm",
    "nuclear_norm",
    "read_matrix",
    "spectral_norm",
    "support_of",
    "svd",
    "write_matrix",
]


class SvdError(RuntimeError):
    """The underlying LAPACK factorization did not converge."""


class MatrixParseError(ValueError):
    """A matrix file could not be parsed.  ``lineno`` is 1-based."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


def as_matrix(M, name="matrix"):
    """Return ``M`` as a C-contiguous float64 2-D array, rejecting NaN/Inf."""
    arr = np.ascontiguousarray(M, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def l1_norm(M):
    """Sum of absolute values of the entries."""
    return float(np.abs(as_matrix(M)).sum())


def linf_norm(M):
    """Largest entry in magnitude."""
    return float(np.abs(as_matrix(M)).max())


def nuclear_norm(M):
    """Sum of singular values."""
    return float(_singular_values(as_matrix(M)).sum())


def spectral_norm(M):
    """Largest singular value."""
    s = _singular_values(as_matrix(M))
    return float(s[0]) if s.size else 0.0


def _singular_values(M):
    try:
        return np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SvdError(f"SVD did not converge: {exc}") from exc


@dataclass(frozen=True, eq=False)
class SvdResult:
    """Thin SVD truncated at a numerical rank.

    ``u`` is n1 x k, ``v`` is n2 x k (not transposed) and ``singular_values``
    is nonincreasing with every entry above the rank threshold.
    """

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray
    numerical_rank: int

    def reconstruct(self):
        return (self.u * self.singular_values) @ self.v.T


def default_rank_tol(shape):
    return max(shape) * np.finfo(np.float64).eps


def svd(M, rank_tol=None):
    """Thin SVD of ``M`` keeping singular values above ``rank_tol * sigma_1``.

    ``rank_tol`` defaults to ``max(n1, n2) * eps``.  A zero matrix gives
    empty factors and rank 0.
    """
    M = as_matrix(M)
    if rank_tol is None:
        rank_tol = default_rank_tol(M.shape)
    if rank_tol < 0:
        raise ValueError("rank_tol must be nonnegative")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdError(f"SVD did not converge: {exc}") from exc
    n1, n2 = M.shape
    if s.size == 0 or s[0] == 0.0:
        return SvdResult(np.zeros((n1, 0)), np.zeros(0), np.zeros((n2, 0)), 0)
    k = int(np.count_nonzero(s > rank_tol * s[0]))
    return SvdResult(
        np.ascontiguousarray(U[:, :k]),
        s[:k].copy(),
        np.ascontiguousarray(Vt[:k].T),
        k,
    )


@dataclass(frozen=True, eq=False)
class SupportPattern:
    """A set of matrix positions, stored as a sorted ``(m, 2)`` integer array."""

    rows: int
    cols: int
    indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1, 2)
        if self.rows < 1 or self.cols < 1:
            raise ValueError("support shape must be positive")
        if idx.size and (
            idx.min() < 0 or idx[:, 0].max() >= self.rows or idx[:, 1].max() >= self.cols
        ):
            raise ValueError(f"support index out of range for shape ({self.rows}, {self.cols})")
        flat = idx[:, 0] * self.cols + idx[:, 1]
        order = np.argsort(flat, kind="stable")
        flat = flat[order]
        if flat.size > 1 and np.any(flat[1:] == flat[:-1]):
            raise ValueError("support indices contain duplicates")
        idx = idx[order]
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        return cls(mask.shape[0], mask.shape[1], np.argwhere(mask))

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __len__(self):
        return len(self.indices)

    def __eq__(self, other):
        if not isinstance(other, SupportPattern):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash((self.shape, self.indices.tobytes()))

    def mask(self):
        out = np.zeros(self.shape, dtype=bool)
        if len(self):
            out[self.indices[:, 0], self.indices[:, 1]] = True
        return out

    def indicator(self):
        """0/1 float matrix of the support."""
        return self.mask().astype(np.float64)

    def as_tuples(self):
        return [tuple(int(x) for x in ij) for ij in self.indices]


def support_of(M, zero_tol=0.0):
    """Positions of entries with ``|M_ij| > zero_tol``."""
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    M = as_matrix(M)
    return SupportPattern.from_mask(np.abs(M) > zero_tol)


# ---------------------------------------------------------------------------
# file I/O

_FORMATS = ("matrixmarket", "csv")


def _resolve_format(path, fmt):
    if fmt is None:
        ext = Path(path).suffix.lower()
        if ext in (".mtx", ".mm"):
            return "matrixmarket"
        if ext == ".csv":
            return "csv"
        raise ValueError(f"cannot infer matrix format from {path!r}; pass format=")
    fmt = fmt.lower()
    if fmt not in _FORMATS:
        raise ValueError(f"unknown matrix format {fmt!r}; expected one of {_FORMATS}")
    return fmt


def write_matrix(M, path, format=None):
    """Write ``M`` as MatrixMarket array format or headerless CSV (17 digits)."""
    M = as_matrix(M)
    fmt = _resolve_format(path, format)
    n1, n2 = M.shape
    lines = []
    if fmt == "matrixmarket":
        lines.append("%%MatrixMarket matrix array real general")
        lines.append(f"{n1} {n2}")
        # array format is column-major
        lines.extend(f"{x:.17g}" for x in M.T.ravel())
    else:
        lines.extend(",".join(f"{x:.17g}" for x in row) for row in M)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix(path, format=None):
    """Read a dense matrix from MatrixMarket (array or coordinate) or CSV."""
    fmt = _resolve_format(path, format)
    with open(path) as fh:
        text = fh.read().splitlines()
    if fmt == "csv":
        return _read_csv(path, text)
    return _read_mm(path, text)


def _parse_float(path, lineno, tok):
    try:
        x = float(tok)
    except ValueError:
        raise MatrixParseError(path, lineno, f"not a number: {tok!r}") from None
    if not np.isfinite(x):
        raise MatrixParseError(path, lineno, f"non-finite value: {tok!r}")
    return x


def _read_csv(path, lines):
    rows = []
    width = None
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        vals = [_parse_float(path, lineno, t.strip()) for t in line.split(",")]
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise MatrixParseError(path, lineno, f"expected {width} columns, found {len(vals)}")
        rows.append(vals)
    if not rows:
        raise MatrixParseError(path, max(len(lines), 1), "empty CSV matrix")
    return as_matrix(rows)


def _read_mm(path, lines):
    if not lines:
        raise MatrixParseError(path, 1, "empty file")
    header = lines[0].split()
    if (
        len(header) != 5
        or header[0].lower() != "%%matrixmarket"
        or header[1].lower() != "matrix"
    ):
        raise MatrixParseError(path, 1, f"malformed MatrixMarket header: {lines[0]!r}")
    layout, field_, symmetry = (h.lower() for h in header[2:])
    if layout not in ("array", "coordinate"):
        raise MatrixParseError(path, 1, f"unsupported layout {layout!r}")
    if field_ not in ("real", "integer", "double"):
        raise MatrixParseError(path, 1, f"unsupported field {field_!r}")
    if symmetry not in ("general", "symmetric"):
        raise MatrixParseError(path, 1, f"unsupported symmetry {symmetry!r}")

    body = [
        (lineno, line.split())
        for lineno, line in enumerate(lines[1:], 2)
        if line.strip() and not line.lstrip().startswith("%")
    ]
    if not body:
        raise MatrixParseError(path, len(lines), "missing size line")
    size_lineno, size = body[0]
    want = 2 if layout == "array" else 3
    if len(size) != want:
        raise MatrixParseError(path, size_lineno, f"size line needs {want} integers")
    try:
        dims = [int(t) for t in size]
    except ValueError:
        raise MatrixParseError(path, size_lineno, "size line must be integers") from None
    n1, n2 = dims[0], dims[1]
    if n1 < 1 or n2 < 1:
        raise MatrixParseError(path, size_lineno, "dimensions must be positive")
    if symmetry == "symmetric" and n1 != n2:
        raise MatrixParseError(path, size_lineno, "symmetric matrix must be square")
    entries = body[1:]
    M = np.zeros((n1, n2))

    if layout == "array":
        if symmetry == "symmetric":
            positions = [(i, j) for j in range(n2) for i in range(j, n1)]
        else:
            positions = [(i, j) for j in range(n2) for i in range(n1)]
        if len(entries) != len(positions):
            lineno = entries[-1][0] if entries else size_lineno
            raise MatrixParseError(
                path, lineno, f"expected {len(positions)} values, found {len(entries)}"
            )
        for (lineno, toks), (i, j) in zip(entries, positions):
            if len(toks) != 1:
                raise MatrixParseError(path, lineno, "array entries hold one value per line")
            M[i, j] = _parse_float(path, lineno, toks[0])
            if symmetry == "symmetric":
                M[j, i] = M[i, j]
        return M

    nnz = dims[2]
    if len(entries) != nnz:
        lineno = entries[-1][0] if entries else size_lineno
        raise MatrixParseError(path, lineno, f"expected {nnz} entries, found {len(entries)}")
    for lineno, toks in entries:
        if len(toks) != 3:
            raise MatrixParseError(path, lineno, "coordinate entries need 'row col value'")
        try:
            i, j = int(toks[0]) - 1, int(toks[1]) - 1
        except ValueError:
            raise MatrixParseError(path, lineno, "row/col must be integers") from None
        if not (0 <= i < n1 and 0 <= j < n2):
            raise MatrixParseError(path, lineno, f"index ({i + 1}, {j + 1}) out of range")
        x = _parse_float(path, lineno, toks[2])
        M[i, j] += x
        if symmetry == "symmetric" and i != j:
            M[j, i] += x
    return M
