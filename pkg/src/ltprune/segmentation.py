"""Head/tail split of a descending similarity curve.

For a curve ``d_1 >= ... >= d_n`` every candidate cut ``i`` in ``1..n-1`` is
scored with

    f(i) = (n - i) * (d_1 - d_i) / (d_1 - d_n)

and the first maximiser ``i*`` is the split. The number of tokens kept is
then derived from ``i*`` and a smoothing coefficient ``alpha``.

Cut positions are 1-based here, as in the formula; masks produced from them
are 0-based.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .similarity import SimilarityCurve
from .tensor_io import IndexMask


class DegenerateCurveError(ValueError):
    """The curve is flat (d_1 == d_n), so the split objective is 0/0."""


class SmoothingMode(str, enum.Enum):
    MULTIPLY = "multiply"
    IDENTITY = "identity"
    EXPAND = "expand"


def _values(curve) -> np.ndarray:
    if isinstance(curve, SimilarityCurve):
        return curve.values
    return np.asarray(curve, dtype=np.float64).ravel()


def split_objective(curve) -> np.ndarray:
    """Return ``f(1), ..., f(n-1)``; element ``k`` holds ``f(k + 1)``.

    Accepts a :class:`SimilarityCurve` or any descending 1-D sequence.
    """
    d = _values(curve)
    n = d.size
    if n < 2:
        raise ValueError(f"need at least 2 values to split, got {n}")
    if np.any(np.diff(d) > 0):
        raise ValueError("curve must be sorted in descending order")
    c = d[0] - d[-1]
    if c == 0:
        raise DegenerateCurveError("flat curve: d_1 == d_n")
    i = np.arange(1, n, dtype=np.float64)
    return (n - i) * (d[0] - d[: n - 1]) / c


def find_split(curve) -> int:
    """1-based cut that maximises the objective; ties go to the smallest cut."""
    # np.argmax returns the first occurrence of the maximum
    return int(np.argmax(split_objective(curve))) + 1


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def apply_smoothing(i_star: int, alpha: float, n: int, mode="multiply") -> int:
    """Turn the raw split ``i_star`` into a kept-token count in ``[1, n]``.

    ``multiply`` keeps ``round(alpha * i_star)``; ``identity`` keeps ``i_star``;
    ``expand`` keeps ``round((1 + alpha) * i_star)``. Rounding is half away
    from zero.
    """
    mode = SmoothingMode(mode)
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if not 1 <= i_star <= n - 1:
        raise ValueError(f"i_star={i_star} outside 1..{n - 1}")
    if mode is SmoothingMode.IDENTITY:
        return int(i_star)
    factor = alpha if mode is SmoothingMode.MULTIPLY else 1.0 + alpha
    return min(max(round_half_away(factor * i_star), 1), n)


def stage1_mask(curve: SimilarityCurve, k: int) -> IndexMask:
    """Keep the original indices of the ``k`` largest similarities, ascending."""
    n = curve.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    return IndexMask(n, tuple(np.sort(curve.source_index[:k]).tolist()))


@dataclass(frozen=True)
class SplitResult:
    objective: np.ndarray
    i_star: Optional[int]
    kept_count: int
    alpha: float
    mode: SmoothingMode
    n: int

    @property
    def degenerate(self) -> bool:
        return self.i_star is None


def segment(curve: SimilarityCurve, alpha: float = 0.24, mode="multiply") -> SplitResult:
    """Run the full split on ``curve``.

    A flat curve, or a single token, has nothing to cut and keeps every token;
    ``i_star`` is then ``None``.
    """
    mode = SmoothingMode(mode)
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    n = curve.n
    if n < 2:
        return SplitResult(np.zeros(0), None, n, alpha, mode, n)
    try:
        f = split_objective(curve)
    except DegenerateCurveError:
        return SplitResult(np.zeros(n - 1), None, n, alpha, mode, n)
    i_star = int(np.argmax(f)) + 1
    k = apply_smoothing(i_star, alpha, n, mode)
    return SplitResult(f, i_star, k, alpha, mode, n)


def objective_csv(result: SplitResult) -> str:
    lines = ["i,f_i"]
    lines += [f"{i},{float(v)!r}" for i, v in enumerate(result.objective, start=1)]
    return "\n".join(lines) + "\n"
