"""Dataset loading, synthetic generators, and trace serialization.

All random generation goes through PCG64 seeded explicitly, so fixtures are
bit-identical across platforms. Floats are serialized with ``repr`` (shortest
round-trip form), so write/read cycles preserve values exactly.
"""

from __future__ import annotations

import hashlib

import numpy as np
import scipy.sparse as sp

from .solvers import TraceRecord

_MM_FORMATS = ("coordinate", "array")
_MM_FIELDS = ("real", "integer", "pattern")
_MM_SYMMETRIES = ("general", "symmetric", "skew-symmetric")

TRACE_COLUMNS = ("iter", "wall_time", "objective", "rel_error",
                 "bregman_step", "lyapunov")


def _mm_error(path, lineno, msg):
    return ValueError(f"{path}:{lineno}: {msg}")


def load_matrix_market(path):
    """Read a MatrixMarket file (coordinate or array; real/integer/pattern).

    Symmetric and skew-symmetric storage is expanded to the full matrix.
    Coordinate files return a CSR sparse matrix, array files a dense array.
    Parse failures raise ``ValueError`` with the offending line number.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise _mm_error(path, 1, "empty file")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "%%MatrixMarket" or head[1].lower() != "matrix":
        raise _mm_error(path, 1, "expected header "
                                 "'%%MatrixMarket matrix <format> <field> <symmetry>'")
    fmt, field, symmetry = (tok.lower() for tok in head[2:])
    if fmt not in _MM_FORMATS:
        raise _mm_error(path, 1, f"unsupported format {fmt!r}")
    if field not in _MM_FIELDS:
        raise _mm_error(path, 1, f"unsupported field type {field!r}")
    if symmetry not in _MM_SYMMETRIES:
        raise _mm_error(path, 1, f"unsupported symmetry {symmetry!r}")

    body = [(i + 1, ln.strip()) for i, ln in enumerate(lines[1:], start=1)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise _mm_error(path, len(lines), "missing size line")
    size_lineno, size_line = body[0]
    entries = body[1:]
    size_tok = size_line.split()

    if fmt == "coordinate":
        if len(size_tok) != 3:
            raise _mm_error(path, size_lineno, "coordinate size line needs 'm n nnz'")
        try:
            m, n, nnz = (int(t) for t in size_tok)
        except ValueError:
            raise _mm_error(path, size_lineno, "non-integer size entry") from None
        if len(entries) != nnz:
            raise _mm_error(path, size_lineno,
                            f"declared {nnz} entries, found {len(entries)}")
        rows, cols, vals = [], [], []
        want = 2 if field == "pattern" else 3
        for lineno, line in entries:
            tok = line.split()
            if len(tok) != want:
                raise _mm_error(path, lineno, f"expected {want} tokens, got {len(tok)}")
            try:
                i, j = int(tok[0]) - 1, int(tok[1]) - 1
                v = 1.0 if field == "pattern" else float(tok[2])
            except ValueError:
                raise _mm_error(path, lineno, f"malformed entry {line!r}") from None
            if not (0 <= i < m and 0 <= j < n):
                raise _mm_error(path, lineno, f"index ({i + 1}, {j + 1}) out of bounds")
            rows.append(i)
            cols.append(j)
            vals.append(v)
            if symmetry != "general" and i != j:
                rows.append(j)
                cols.append(i)
                vals.append(-v if symmetry == "skew-symmetric" else v)
        return sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()

    # array format: dense values in column-major order
    if len(size_tok) != 2:
        raise _mm_error(path, size_lineno, "array size line needs 'm n'")
    try:
        m, n = (int(t) for t in size_tok)
    except ValueError:
        raise _mm_error(path, size_lineno, "non-integer size entry") from None
    if field == "pattern":
        raise _mm_error(path, 1, "pattern field is invalid for array format")
    out = np.zeros((m, n))
    if symmetry == "general":
        coords = [(i, j) for j in range(n) for i in range(m)]
    else:
        if m != n:
            raise _mm_error(path, size_lineno, "symmetric array must be square")
        start = {"symmetric": 0, "skew-symmetric": 1}[symmetry]
        coords = [(i, j) for j in range(n) for i in range(j + start, m)]
    if len(entries) != len(coords):
        raise _mm_error(path, size_lineno,
                        f"expected {len(coords)} values, found {len(entries)}")
    for (lineno, line), (i, j) in zip(entries, coords):
        try:
            v = float(line.split()[0]) if len(line.split()) == 1 else None
        except ValueError:
            v = None
        if v is None:
            raise _mm_error(path, lineno, f"malformed value {line!r}")
        out[i, j] = v
        if symmetry == "symmetric":
            out[j, i] = v
        elif symmetry == "skew-symmetric":
            out[j, i] = -v
    return out


def save_matrix_market(path, mat):
    """Write a matrix in MatrixMarket form with full-precision values.

    Sparse input becomes a coordinate file, dense input an array file; both
    use field 'real', symmetry 'general'.
    """
    with open(path, "w", encoding="ascii") as fh:
        if sp.issparse(mat):
            coo = mat.tocoo()
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
        else:
            arr = np.asarray(mat, dtype=np.float64)
            fh.write("%%MatrixMarket matrix array real general\n")
            fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
            for j in range(arr.shape[1]):
                for i in range(arr.shape[0]):
                    fh.write(f"{float(arr[i, j])!r}\n")


def load_dense_csv(path) -> np.ndarray:
    """Read a rectangular numeric CSV into a dense matrix."""
    rows = []
    width = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ValueError(f"{path}:{lineno}: ragged row "
                                 f"({len(cells)} cells, expected {width})")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric cell") from None
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    return np.array(rows)


def save_dense_csv(path, mat):
    """Write a dense matrix as CSV with full-precision values."""
    arr = np.asarray(mat, dtype=np.float64)
    with open(path, "w", encoding="ascii") as fh:
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def synth_relu(m: int, n: int, r_star: int, seed: int = 0):
    """Synthetic ReLU target: sparsified Gaussian factors, ``M = max(0, UV)``.

    Factor entries with magnitude below 1 are zeroed, so roughly 68% of each
    factor vanishes and M admits an exact decomposition of rank <= r_star.
    Returns ``(M, u_star, v_star)``.
    """
    if r_star > min(m, n) or min(m, n, r_star) < 1:
        raise ValueError("need 1 <= r_star <= min(m, n)")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.standard_normal((m, r_star))
    u[np.abs(u) < 1.0] = 0.0
    v = rng.standard_normal((r_star, n))
    v[np.abs(v) < 1.0] = 0.0
    return np.maximum(u @ v, 0.0), u, v


def synth_blobs(m: int, k: int, dim: int, separation: float, seed: int = 0):
    """Gaussian clusters pushed through a ReLU into nonnegative sparse rows.

    Cluster centers are drawn at scale ``separation``; unit-variance samples
    around them are clipped at zero, which zeroes roughly half of the
    coordinates. Returns ``(M, labels)`` with balanced labels.
    """
    if not 1 <= k <= m:
        raise ValueError("need 1 <= k <= m")
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = separation * rng.standard_normal((k, dim))
    labels = np.arange(m) % k
    points = centers[labels] + rng.standard_normal((m, dim))
    return np.maximum(points, 0.0), labels


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_trace(trace, path, metadata=None, include_wall_time=True):
    """Write trace records as CSV with a '#'-prefixed metadata preamble.

    ``include_wall_time=False`` drops the only nondeterministic column; the
    CLI uses that mode so identical runs produce identical files.
    """
    columns = [c for c in TRACE_COLUMNS if include_wall_time or c != "wall_time"]
    with open(path, "w", encoding="ascii") as fh:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write(",".join(columns) + "\n")
        for rec in trace:
            cells = []
            for col in columns:
                val = getattr(rec, col)
                cells.append(str(val) if col == "iter" else repr(float(val)))
            fh.write(",".join(cells) + "\n")


def read_trace(path):
    """Inverse of ``write_trace``: returns ``(records, metadata)``.

    A missing wall_time column reads back as 0.0.
    """
    metadata = {}
    records = []
    columns = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                metadata[key.strip()] = value
                continue
            if columns is None:
                columns = line.split(",")
                unknown = set(columns) - set(TRACE_COLUMNS)
                if unknown:
                    raise ValueError(f"{path}:{lineno}: unknown columns {unknown}")
                continue
            cells = line.split(",")
            if len(cells) != len(columns):
                raise ValueError(f"{path}:{lineno}: expected {len(columns)} cells")
            fields = dict(zip(columns, cells))
            records.append(TraceRecord(
                iter=int(fields["iter"]),
                wall_time=float(fields.get("wall_time", 0.0)),
                objective=float(fields["objective"]),
                rel_error=float(fields["rel_error"]),
                bregman_step=float(fields["bregman_step"]),
                lyapunov=float(fields["lyapunov"]),
            ))
    if columns is None:
        raise ValueError(f"{path}: missing trace header")
    return records, metadata
