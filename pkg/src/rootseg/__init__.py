"""Unsupervised root architecture segmentation from scanned plate images.

Pipeline: contrast stretch, top-hat leaf removal, multi-scale line
detection, fully-connected CRF with mean-field inference, then closing,
thinning and small-segment removal.
"""
from .crf import CrfParams, Marginals, map_labels, mean_field_infer
from .lines import LineDetectorParams, enhance
from .pipeline import PipelineConfig, run_pipeline, segment

__version__ = "0.1.0"

__all__ = [
    "CrfParams",
    "LineDetectorParams",
    "Marginals",
    "PipelineConfig",
    "enhance",
    "map_labels",
    "mean_field_infer",
    "run_pipeline",
    "segment",
]
