"""lncRNA-disease association prediction with linear similarity features and a
graph attention auto-encoder."""

from .evaluation import PipelineConfig, ablation, cross_validate, fit_full, rank_candidates
from .ingest import load_dataset

__version__ = "0.1.0"

__all__ = [
    "PipelineConfig",
    "ablation",
    "cross_validate",
    "fit_full",
    "load_dataset",
    "rank_candidates",
]
