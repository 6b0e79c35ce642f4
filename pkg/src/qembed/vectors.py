"""Dense vector arithmetic and id-aligned vector matrix storage.

Vectors are plain numpy arrays. Arithmetic runs in float64; matrices are
stored on disk as float32 (matches encoder output precision).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"QVM1"
_HEADER = struct.Struct("<4sIQ")  # magic, u32 dim, u64 row count
_IDLEN = struct.Struct("<I")


def as_vector(values) -> np.ndarray:
    """Coerce to a 1-D float64 vector, rejecting empty or non-finite input."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or Inf")
    return v


def l2_normalize(v) -> np.ndarray:
    """Return v scaled to unit L2 norm. Raises on an all-zero vector."""
    v = as_vector(v)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def cosine(a, b) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1].

    Raises on dimension mismatch and on zero-norm input, naming which
    argument is at fault.
    """
    a = as_vector(a)
    b = as_vector(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0:
        raise ValueError("zero-norm input: first argument")
    if nb == 0.0:
        raise ValueError("zero-norm input: second argument")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class VectorMatrix:
    """Id-aligned matrix of equal-dimension vectors, immutable once built."""

    ids: tuple[str, ...]
    data: np.ndarray  # shape (n, dim)
    dim: int
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError(f"matrix data must be 2-D, got shape {data.shape}")
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")
        if data.shape != (len(self.ids), self.dim):
            raise ValueError(
                f"shape {data.shape} inconsistent with {len(self.ids)} ids of dim {self.dim}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("matrix contains NaN or Inf")
        index = {}
        for pos, id_ in enumerate(self.ids):
            if id_ in index:
                raise ValueError(f"duplicate id: {id_!r}")
            index[id_] = pos
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_rows(cls, ids, rows, dim: int | None = None) -> "VectorMatrix":
        ids = tuple(str(i) for i in ids)
        if len(ids) == 0:
            if dim is None:
                raise ValueError("empty matrix requires an explicit dim")
            data = np.zeros((0, dim), dtype=np.float32)
            return cls(ids, data, dim)
        data = np.asarray([as_vector(r) for r in rows], dtype=np.float32)
        if dim is not None and data.shape[1] != dim:
            raise ValueError(f"rows have dim {data.shape[1]}, expected {dim}")
        return cls(ids, data, data.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, id_: str) -> bool:
        return id_ in self._index

    def row(self, id_: str) -> np.ndarray:
        """Vector for one id, promoted to float64."""
        try:
            pos = self._index[id_]
        except KeyError:
            raise KeyError(f"unknown id: {id_!r}") from None
        return self.data[pos].astype(np.float64)

    def position(self, id_: str) -> int:
        return self._index[id_]

    def unit_rows(self) -> np.ndarray:
        """Float64 copy of the data with every row L2-normalized."""
        rows = self.data.astype(np.float64)
        norms = np.linalg.norm(rows, axis=1)
        if np.any(norms == 0.0):
            bad = self.ids[int(np.argmin(norms))]
            raise ValueError(f"cannot normalize zero-norm row: id {bad!r}")
        return rows / norms[:, None]


def save_matrix(matrix: VectorMatrix, path) -> None:
    """Write a matrix in the fixed binary layout (float32 payload)."""
    data = matrix.data.astype(np.float32)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, matrix.dim, len(matrix.ids)))
        for id_ in matrix.ids:
            raw = id_.encode("utf-8")
            fh.write(_IDLEN.pack(len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def load_matrix(path, normalize: bool = False) -> VectorMatrix:
    """Read a matrix written by save_matrix.

    With normalize=True every row is L2-normalized at load time (float64),
    which makes later cosine computations plain dot products.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ValueError(f"malformed header in {path}: file truncated")
    magic, dim, count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise ValueError(f"malformed header in {path}: bad magic {magic!r}")
    if dim < 1:
        raise ValueError(f"malformed header in {path}: dim {dim}")
    offset = _HEADER.size
    ids = []
    for _ in range(count):
        if offset + _IDLEN.size > len(blob):
            raise ValueError(f"malformed ids block in {path}")
        (idlen,) = _IDLEN.unpack_from(blob, offset)
        offset += _IDLEN.size
        if offset + idlen > len(blob):
            raise ValueError(f"malformed ids block in {path}")
        ids.append(blob[offset : offset + idlen].decode("utf-8"))
        offset += idlen
    payload = blob[offset:]
    expected = count * dim * 4
    if len(payload) != expected:
        raise ValueError(
            f"payload size mismatch in {path}: {len(payload)} bytes, header implies {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    matrix = VectorMatrix(tuple(ids), data.copy(), dim)
    if normalize:
        return VectorMatrix(matrix.ids, matrix.unit_rows(), dim)
    return matrix


def matrix_from_jsonl(path, normalize: bool = False) -> VectorMatrix:
    """Import vectors from JSONL lines of the form {"id": ..., "vector": [...]}."""
    ids, rows = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                ids.append(str(obj["id"]))
                rows.append(as_vector(obj["vector"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad vector record: {exc}") from exc
    if not ids:
        raise ValueError(f"no vectors found in {path}")
    matrix = VectorMatrix.from_rows(ids, rows)
    if normalize:
        return VectorMatrix(matrix.ids, matrix.unit_rows(), matrix.dim)
    return matrix
