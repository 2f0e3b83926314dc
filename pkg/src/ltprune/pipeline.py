"""Two-stage pruning: CLS-guided visual split, then visual-text eviction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import eviction, segmentation, similarity
from .tensor_io import IndexMask, as_array, read_kv_file


@dataclass(frozen=True)
class PipelineConfig:
    alpha: float = 0.24
    smoothing_mode: segmentation.SmoothingMode = segmentation.SmoothingMode.MULTIPLY
    eviction: eviction.EvictionConfig = field(default_factory=eviction.EvictionConfig)
    projection: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        object.__setattr__(self, "smoothing_mode", segmentation.SmoothingMode(self.smoothing_mode))
        if self.projection is not None:
            p = as_array(self.projection)
            if p.ndim != 2:
                raise ValueError("projection must be a 2-D matrix")
            object.__setattr__(self, "projection", p)


_EVICTION_KEYS = {
    "heavy_budget": int,
    "recent_budget": int,
    "heavy_ratio": float,
    "recent_ratio": float,
    "cache_budget": int,
}


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def config_from_mapping(values: dict, projection=None) -> PipelineConfig:
    """Build a config from string key/value pairs (config file plus overrides).

    ``projection`` (a path) is not resolved here; pass the loaded matrix instead.
    """
    ev = {}
    top = {}
    for key, raw in values.items():
        if key in _EVICTION_KEYS:
            ev[key] = _EVICTION_KEYS[key](raw)
        elif key == "include_self":
            ev[key] = _parse_bool(raw)
        elif key == "alpha":
            top["alpha"] = float(raw)
        elif key in ("smoothing_mode", "mode"):
            top["smoothing_mode"] = raw
        elif key == "projection":
            continue
        else:
            raise ValueError(f"unknown config key {key!r}")
    return PipelineConfig(eviction=eviction.EvictionConfig(**ev), projection=projection, **top)


def load_config(path) -> dict:
    return read_kv_file(path)


@dataclass(frozen=True)
class PipelineReport:
    visual_in: int
    text_in: int
    visual_after_stage1: int
    total_after_concat: int
    total_after_stage2: int
    stage1_mask: IndexMask
    stage2_mask: IndexMask
    split: segmentation.SplitResult
    eviction_state: Optional[eviction.EvictionState] = None

    @property
    def compression_ratio(self) -> float:
        return self.total_after_stage2 / (self.visual_in + self.text_in)

    @property
    def visual_after_stage2(self) -> int:
        return sum(1 for i in self.stage2_mask.kept if i < self.visual_after_stage1)

    @property
    def text_after_stage2(self) -> int:
        return self.total_after_stage2 - self.visual_after_stage2

    def final_visual_mask(self) -> Optional[IndexMask]:
        """Original visual indices that survive both stages (None if none do)."""
        s1 = self.stage1_mask.kept
        kept = [s1[i] for i in self.stage2_mask.kept if i < len(s1)]
        return IndexMask(self.visual_in, tuple(kept)) if kept else None


def project(visual: np.ndarray, projection: Optional[np.ndarray]) -> np.ndarray:
    if projection is None:
        return visual
    if projection.shape[0] != visual.shape[1]:
        raise ValueError(
            f"projection has {projection.shape[0]} rows but visual tokens have {visual.shape[1]} columns"
        )
    v = visual.astype(np.float64)
    p = projection.astype(np.float64)
    # fixed accumulation order instead of BLAS, so outputs match across machines
    out = np.zeros((v.shape[0], p.shape[1]))
    for k in range(p.shape[0]):
        out += v[:, k, None] * p[k]
    return out.astype(np.float32)


def run_pipeline(cls, visual, text=None, config: Optional[PipelineConfig] = None) -> PipelineReport:
    """Prune ``visual`` against ``cls``, project, append ``text``, then evict.

    ``text`` may be ``None`` or have zero rows.
    """
    config = config or PipelineConfig()
    v = as_array(visual)
    if v.ndim != 2 or v.shape[0] < 1:
        raise ValueError("visual must be a non-empty 2-D matrix")

    curve = similarity.similarity_curve(cls, v)
    split = segmentation.segment(curve, config.alpha, config.smoothing_mode)
    mask1 = segmentation.stage1_mask(curve, split.kept_count)
    kept_visual = project(v[list(mask1.kept)], config.projection)

    if text is None:
        t = np.zeros((0, kept_visual.shape[1]), dtype=np.float32)
    else:
        t = as_array(text)
        if t.ndim == 1:
            t = t.reshape(1, -1) if t.size else np.zeros((0, kept_visual.shape[1]), dtype=np.float32)
    if t.shape[0] and t.shape[1] != kept_visual.shape[1]:
        raise ValueError(
            f"text tokens have {t.shape[1]} columns but (projected) visual tokens have {kept_visual.shape[1]}"
        )
    seq = np.concatenate([kept_visual, t.astype(np.float32)], axis=0)

    mask2, state = eviction.run_stream(seq, len(kept_visual), config.eviction)
    return PipelineReport(
        visual_in=v.shape[0],
        text_in=t.shape[0],
        visual_after_stage1=len(mask1),
        total_after_concat=seq.shape[0],
        total_after_stage2=len(mask2),
        stage1_mask=mask1,
        stage2_mask=mask2,
        split=split,
        eviction_state=state,
    )


def _report_rows(report: PipelineReport) -> list:
    split = report.split
    return [
        ("visual_in", report.visual_in),
        ("text_in", report.text_in),
        ("i_star", "" if split.i_star is None else split.i_star),
        ("alpha", repr(float(split.alpha))),
        ("smoothing_mode", split.mode.value),
        ("visual_after_stage1", report.visual_after_stage1),
        ("total_after_concat", report.total_after_concat),
        ("visual_after_stage2", report.visual_after_stage2),
        ("text_after_stage2", report.text_after_stage2),
        ("total_after_stage2", report.total_after_stage2),
        ("compression_ratio", repr(report.compression_ratio)),
    ]


def token_accounting(report: PipelineReport, fmt: str = "text") -> str:
    """Render token counts and the compression ratio as ``text`` or ``csv``."""
    rows = _report_rows(report)
    if fmt == "csv":
        return "key,value\n" + "".join(f"{k},{v}\n" for k, v in rows)
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    width = max(len(k) for k, _ in rows)
    body = "".join(f"{k:<{width}}  {v}\n" for k, v in rows)
    summary = (
        f"visual {report.visual_in} -> {report.visual_after_stage1} (stage 1); "
        f"total {report.total_after_concat} -> {report.total_after_stage2} (stage 2); "
        f"ratio {report.compression_ratio:.4f}\n"
    )
    return body + summary
