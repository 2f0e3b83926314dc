"""CLS-to-visual similarity and the sorted long-tail curve."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor_io import as_array


def softmax(logits) -> np.ndarray:
    """Numerically stable softmax over a 1-D vector of logits (float64 result)."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("softmax needs a non-empty 1-D vector")
    z = z - z.max()
    # libm exp, not numpy's SIMD exp: the latter's last bit depends on the CPU
    e = np.array([math.exp(v) for v in z.tolist()])
    return e / math.fsum(e.tolist())


def rowdot(matrix: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """``matrix @ vec`` in float64 with a summation order fixed by numpy, not BLAS."""
    m = np.ascontiguousarray(matrix, dtype=np.float64)
    return (m * np.asarray(vec, dtype=np.float64)).sum(axis=1)


def similarity_logits(cls, visual) -> np.ndarray:
    """Scaled dot products ``visual @ cls / sqrt(d)`` with ``d`` the CLS width."""
    c = as_array(cls)
    v = as_array(visual)
    if c.ndim == 1:
        c = c.reshape(1, -1)
    if v.ndim != 2:
        raise ValueError(f"visual must be 2-D, got shape {v.shape}")
    if c.shape[0] != 1:
        raise ValueError(f"cls must have exactly one row, got {c.shape[0]}")
    if v.shape[0] == 0:
        raise ValueError("no visual tokens")
    if c.shape[1] != v.shape[1]:
        raise ValueError(f"dimension mismatch: cls has {c.shape[1]} columns, visual has {v.shape[1]}")
    d = c.shape[1]
    return rowdot(v, c[0]) / math.sqrt(d)


def cls_similarity(cls, visual) -> np.ndarray:
    """Softmax-normalised CLS similarity of every visual token, in original order."""
    return softmax(similarity_logits(cls, visual))


@dataclass(frozen=True)
class SimilarityCurve:
    """Similarities sorted descending, plus where each value came from.

    ``values[r] == sims[source_index[r]]`` for the unsorted input ``sims``.
    """

    values: np.ndarray
    source_index: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)

    def unsort(self) -> np.ndarray:
        out = np.empty_like(self.values)
        out[self.source_index] = self.values
        return out


def sort_descending(sims) -> SimilarityCurve:
    """Sort descending; equal values keep their original relative order."""
    s = np.asarray(sims, dtype=np.float64).ravel()
    if s.size == 0:
        raise ValueError("cannot sort an empty similarity sequence")
    if not np.all(np.isfinite(s)):
        raise ValueError("similarities must be finite")
    # negation is exact, so a stable ascending sort of -s is a stable descending sort of s
    order = np.argsort(-s, kind="stable")
    return SimilarityCurve(values=s[order], source_index=order)


def similarity_curve(cls, visual) -> SimilarityCurve:
    return sort_descending(cls_similarity(cls, visual))
