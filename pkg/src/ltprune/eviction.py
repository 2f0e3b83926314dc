"""Streaming heavy/recent token eviction over visual and text tokens.

Tokens arrive one at a time. Each arrival attends over the tokens still live
plus itself; every live token accumulates the attention it receives as its
importance score, and the newcomer's score starts at its own self-weight.
The cache holds at most ``M + N`` tokens: the ``M`` most recent arrivals are
never dropped, and once the cache overflows the lowest-scoring token outside
that window is evicted (lowest index on ties).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from .segmentation import round_half_away
from .similarity import rowdot, softmax
from .tensor_io import IndexMask, as_array


@dataclass(frozen=True)
class EvictionConfig:
    """Cache budgets.

    Give ``recent_budget`` (M) and ``heavy_budget`` (N) directly, or leave them
    ``None`` to derive them from the ratios of ``cache_budget``. When
    ``cache_budget`` is also ``None`` it defaults to half the stream length.
    """

    heavy_budget: Optional[int] = None
    recent_budget: Optional[int] = None
    heavy_ratio: float = 0.5
    recent_ratio: float = 0.5
    cache_budget: Optional[int] = None
    include_self: bool = True

    def __post_init__(self):
        if self.recent_budget is not None and self.recent_budget < 0:
            raise ValueError(f"recent budget must be >= 0, got {self.recent_budget}")
        if self.heavy_budget is not None and self.heavy_budget < 1:
            raise ValueError(f"heavy budget must be >= 1, got {self.heavy_budget}")
        for name in ("heavy_ratio", "recent_ratio"):
            r = getattr(self, name)
            if not 0 < r <= 1:
                raise ValueError(f"{name} must be in (0, 1], got {r}")
        if self.cache_budget is not None and self.cache_budget < 1:
            raise ValueError(f"cache budget must be >= 1, got {self.cache_budget}")

    @property
    def resolved(self) -> bool:
        return self.heavy_budget is not None and self.recent_budget is not None

    def resolve(self, length: int) -> "EvictionConfig":
        """Fill in missing budgets for a stream of ``length`` tokens."""
        if self.resolved:
            return self
        base = self.cache_budget if self.cache_budget is not None else max(1, round_half_away(length / 2))
        recent = self.recent_budget
        if recent is None:
            recent = round_half_away(self.recent_ratio * base)
        heavy = self.heavy_budget
        if heavy is None:
            heavy = max(1, round_half_away(self.heavy_ratio * base))
        return replace(self, heavy_budget=heavy, recent_budget=recent)

    @property
    def capacity(self) -> int:
        if not self.resolved:
            raise ValueError("budgets not resolved; call resolve(length) first")
        return self.heavy_budget + self.recent_budget


class Eviction(NamedTuple):
    step: int  # number of tokens processed when the eviction happened (1-based)
    index: int
    score: float


@dataclass
class EvictionState:
    """Mutable per-stream bookkeeping; one writer per stream."""

    scores: dict = field(default_factory=dict)
    live: list = field(default_factory=list)
    processed: int = 0
    evicted: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    keys: dict = field(default_factory=dict)

    def recent_window(self, m: int) -> range:
        return range(max(0, self.processed - m), self.processed)

    def mask(self) -> IndexMask:
        return IndexMask(self.processed, tuple(sorted(self.live)))


def step(state: EvictionState, attention_row, config: EvictionConfig) -> EvictionState:
    """Admit one token and evict at most one; updates ``state`` in place and returns it.

    ``attention_row`` holds one weight per live token (in ``state.live`` order)
    followed by the arriving token's self-weight.
    """
    if not config.resolved:
        raise ValueError("step needs a resolved EvictionConfig")
    row = np.asarray(attention_row, dtype=np.float64).ravel()
    if row.size != len(state.live) + 1:
        raise ValueError(f"attention row has {row.size} weights, expected {len(state.live) + 1}")
    if np.any(row < 0) or not np.all(np.isfinite(row)):
        raise ValueError("attention weights must be finite and non-negative")

    new = state.processed
    for tok, w in zip(state.live, row[:-1]):
        state.scores[tok] += float(w)
    state.scores[new] = float(row[-1]) if config.include_self else 0.0
    state.live.append(new)
    state.processed += 1
    state.rows.append(row)

    if len(state.live) > config.capacity:
        cutoff = state.processed - config.recent_budget
        victim = None
        for tok in state.live:
            if tok >= cutoff:
                continue
            if victim is None or state.scores[tok] < state.scores[victim]:
                victim = tok
        state.live.remove(victim)
        state.keys.pop(victim, None)
        state.evicted.append(Eviction(state.processed, victim, state.scores.pop(victim)))
    return state


def attention_row(state: EvictionState, token: np.ndarray) -> np.ndarray:
    """Causal softmax attention of ``token`` over live keys then itself, scaled by sqrt(d)."""
    x = np.asarray(token, dtype=np.float64)
    if state.live:
        keys = np.stack([state.keys[t] for t in state.live] + [x])
    else:
        keys = x[None, :]
    return softmax(rowdot(keys, x) / np.sqrt(x.size))


def run_stream(
    tokens,
    boundary: int,
    config: EvictionConfig,
    state: Optional[EvictionState] = None,
    observer: Optional[Callable[[EvictionState], None]] = None,
):
    """Feed the rows of ``tokens`` through the cache in order.

    ``boundary`` is the index of the first text token; it only labels the
    stream and does not change the policy. Pass a previous ``state`` to keep
    going with more tokens (decode-time continuation); indices then continue
    from ``state.processed``. ``observer`` is called after every step.

    Returns ``(mask, state)`` where the mask covers every token seen so far.
    """
    x = as_array(tokens)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("tokens must be a non-empty 2-D matrix")
    if not 0 <= boundary <= x.shape[0]:
        raise ValueError(f"boundary {boundary} outside 0..{x.shape[0]}")
    if state is None:
        state = EvictionState()
    config = config.resolve(state.processed + x.shape[0])
    x64 = x.astype(np.float64)
    for tok in x64:
        if state.keys and next(iter(state.keys.values())).size != tok.size:
            raise ValueError("token width does not match cached tokens")
        row = attention_row(state, tok)
        state.keys[state.processed] = tok
        step(state, row, config)
        if observer is not None:
            observer(state)
    return state.mask(), state


def replay(rows, config: EvictionConfig) -> EvictionState:
    """Rebuild a state from recorded attention rows."""
    state = EvictionState()
    for r in rows:
        step(state, r, config)
    return state


def eviction_log_csv(state: EvictionState) -> str:
    lines = ["step,evicted_index,score_at_eviction"]
    lines += [f"{e.step},{e.index},{e.score!r}" for e in state.evicted]
    return "\n".join(lines) + "\n"
