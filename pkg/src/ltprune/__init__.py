"""Dynamic two-stage token pruning for multimodal transformer inputs.

Stage 1 scores visual tokens against the CLS token, sorts the scores into a
long-tail curve and cuts it where the split objective peaks. Stage 2 streams
the surviving visual tokens and the text tokens through a heavy/recent
eviction cache.
"""

from .cost_model import CostReport, ModelSpec, estimate, load_preset
from .eviction import EvictionConfig, EvictionState, run_stream, step
from .pipeline import PipelineConfig, PipelineReport, run_pipeline, token_accounting
from .segmentation import SplitResult, apply_smoothing, find_split, segment, split_objective, stage1_mask
from .similarity import SimilarityCurve, cls_similarity, softmax, sort_descending
from .tensor_io import EmbeddingMatrix, IndexMask, Role, load_mask, load_matrix, save_mask, save_matrix

__version__ = "0.1.0"

__all__ = [
    "CostReport",
    "EmbeddingMatrix",
    "EvictionConfig",
    "EvictionState",
    "IndexMask",
    "ModelSpec",
    "PipelineConfig",
    "PipelineReport",
    "Role",
    "SimilarityCurve",
    "SplitResult",
    "apply_smoothing",
    "cls_similarity",
    "estimate",
    "find_split",
    "load_mask",
    "load_matrix",
    "load_preset",
    "run_pipeline",
    "run_stream",
    "save_mask",
    "save_matrix",
    "segment",
    "softmax",
    "sort_descending",
    "split_objective",
    "stage1_mask",
    "step",
    "token_accounting",
]
