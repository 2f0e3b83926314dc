"""Reading and writing embedding matrices and index masks.

Two matrix encodings are understood:

* LTP1 binary: 8-byte magic ``LTPRUNE1``, u32 rows, u32 cols, u8 role tag,
  then ``rows * cols`` float32 values. Everything little-endian.
* CSV: one row per line, comma separated decimal floats, no header.

Masks are plain text: a ``total=N`` header followed by one kept index per line.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

MAGIC = b"LTPRUNE1"
_HEADER = struct.Struct("<8sIIB")
HEADER_SIZE = _HEADER.size  # 17

PathLike = Union[str, Path]


class FormatError(ValueError):
    """A matrix or mask file does not conform to its format."""


class Role(enum.IntEnum):
    VISUAL = 0
    TEXT = 1
    CLS = 2
    PROJECTION = 3


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A dense ``rows x cols`` float32 matrix tagged with the role it plays."""

    data: np.ndarray
    role: Role = Role.VISUAL

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype="<f4")
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"matrix must have at least one row and column, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "role", Role(self.role))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return (
            self.role == other.role
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
        )

    __hash__ = None


def as_array(m) -> np.ndarray:
    """Return the float32 payload of an EmbeddingMatrix, or coerce an array-like."""
    if isinstance(m, EmbeddingMatrix):
        return m.data
    return np.asarray(m, dtype=np.float32)


@dataclass(frozen=True)
class IndexMask:
    """Which of ``total`` tokens survive, as strictly increasing 0-based indices."""

    total: int
    kept: tuple = field(default=())

    def __post_init__(self):
        kept = tuple(int(i) for i in self.kept)
        object.__setattr__(self, "kept", kept)
        if self.total < 1:
            raise ValueError(f"mask total must be >= 1, got {self.total}")
        if not kept:
            raise ValueError("mask must keep at least one index")
        prev = -1
        for i in kept:
            if i < 0 or i >= self.total:
                raise ValueError(f"mask index {i} out of range for total={self.total}")
            if i <= prev:
                raise ValueError(f"mask indices must be strictly increasing (saw {i} after {prev})")
            prev = i

    @classmethod
    def full(cls, total: int) -> "IndexMask":
        return cls(total, tuple(range(total)))

    @classmethod
    def from_indices(cls, total: int, indices: Iterable[int]) -> "IndexMask":
        """Build a mask from an unordered collection of distinct indices."""
        idx = sorted(int(i) for i in indices)
        if len(set(idx)) != len(idx):
            raise ValueError("duplicate indices")
        return cls(total, tuple(idx))

    def __len__(self):
        return len(self.kept)

    def to_bool(self) -> np.ndarray:
        out = np.zeros(self.total, dtype=bool)
        out[list(self.kept)] = True
        return out


# -- matrices -----------------------------------------------------------------


def _parse_ltp1(buf: bytes, path) -> EmbeddingMatrix:
    if len(buf) < HEADER_SIZE:
        raise FormatError(f"{path}: truncated header: {len(buf)} bytes, need {HEADER_SIZE}")
    magic, rows, cols, tag = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    if rows < 1 or cols < 1:
        raise FormatError(f"{path}: header declares {rows}x{cols} at byte 8; both must be >= 1")
    try:
        role = Role(tag)
    except ValueError:
        raise FormatError(f"{path}: unknown role tag {tag} at byte 16") from None
    expected = rows * cols * 4
    payload = len(buf) - HEADER_SIZE
    if payload != expected:
        raise FormatError(
            f"{path}: header declares {rows}x{cols} ({expected} payload bytes) "
            f"but payload starting at byte {HEADER_SIZE} has {payload} bytes"
        )
    data = np.frombuffer(buf, dtype="<f4", offset=HEADER_SIZE).reshape(rows, cols)
    bad = np.flatnonzero(~np.isfinite(data))
    if bad.size:
        pos = HEADER_SIZE + 4 * int(bad[0])
        raise FormatError(f"{path}: non-finite value at byte {pos} (element {int(bad[0])})")
    return EmbeddingMatrix(data.copy(), role)


def _parse_csv(text: str, path, role: Role) -> EmbeddingMatrix:
    rows = []
    width = None
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    for lineno, line in enumerate(lines, start=1):
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(f"{path}: line {lineno} has {len(cells)} values, expected {width}")
        row = []
        for col, cell in enumerate(cells, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise FormatError(f"{path}: line {lineno}, column {col}: cannot parse {cell.strip()!r}") from None
            if not np.isfinite(v):
                raise FormatError(f"{path}: line {lineno}, column {col}: non-finite value {cell.strip()!r}")
            row.append(v)
        rows.append(row)
    if not rows:
        raise FormatError(f"{path}: empty CSV file")
    return EmbeddingMatrix(np.array(rows, dtype=np.float64).astype(np.float32), role)


def load_matrix(path: PathLike, role: Role = Role.VISUAL) -> EmbeddingMatrix:
    """Load an LTP1 or CSV matrix.

    The format is sniffed from the first 8 bytes. ``role`` only applies to CSV
    input; LTP1 files carry their own tag.
    """
    path = Path(path)
    buf = path.read_bytes()
    if buf[:8] == MAGIC:
        return _parse_ltp1(buf, path)
    if path.suffix.lower() in (".ltp", ".ltp1", ".bin"):
        return _parse_ltp1(buf, path)
    try:
        text = buf.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: neither LTP1 nor UTF-8 CSV (bad byte at {exc.start})") from None
    return _parse_csv(text, path, role)


def encode_ltp1(m: EmbeddingMatrix) -> bytes:
    return _HEADER.pack(MAGIC, m.rows, m.cols, int(m.role)) + m.data.astype("<f4").tobytes()


def encode_csv(m: EmbeddingMatrix) -> str:
    # repr of the widened value round-trips the float32 exactly
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in m.data)


def save_matrix(m, path: PathLike) -> None:
    """Write ``m`` as CSV if the path ends in ``.csv``, else as LTP1."""
    if not isinstance(m, EmbeddingMatrix):
        m = EmbeddingMatrix(m)
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text(encode_csv(m), encoding="utf-8", newline="\n")
    else:
        path.write_bytes(encode_ltp1(m))


# -- masks --------------------------------------------------------------------


def encode_mask(mask: IndexMask) -> str:
    return f"total={mask.total}\n" + "".join(f"{i}\n" for i in mask.kept)


def save_mask(mask: IndexMask, path: PathLike) -> None:
    Path(path).write_text(encode_mask(mask), encoding="utf-8", newline="\n")


def load_mask(path: PathLike) -> IndexMask:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("total="):
        raise FormatError(f"{path}: line 1: expected 'total=N' header")
    try:
        total = int(lines[0][len("total="):])
    except ValueError:
        raise FormatError(f"{path}: line 1: bad total {lines[0]!r}") from None
    if total < 1:
        raise FormatError(f"{path}: line 1: total must be >= 1")
    kept = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            i = int(line)
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: not an integer: {line!r}") from None
        if i < 0 or i >= total:
            raise FormatError(f"{path}: line {lineno}: index {i} out of range [0, {total})")
        if kept and i == kept[-1]:
            raise FormatError(f"{path}: line {lineno}: duplicate index {i}")
        if kept and i < kept[-1]:
            raise FormatError(f"{path}: line {lineno}: index {i} breaks increasing order")
        kept.append(i)
    if not kept:
        raise FormatError(f"{path}: mask keeps no indices")
    return IndexMask(total, tuple(kept))


def read_kv_file(path: PathLike) -> dict:
    """Parse flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    path = Path(path)
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}: line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
