"""Isoperimetric compactness prior for binary segmentation masks."""

from .geometry import PenaltyConfig, RegionReport, fill_holes, penalty, perimeter, region_report
from .metrics import dice, hausdorff
from .raster import BinaryMask, GridShape, PredictionField, Threshold, read_pgm, threshold_field, write_pgm
from .relax import SoftConfig, soft_topology_penalty
from .repair import RepairProblem, RepairTrace
from .synth import ShapeSpec, analytic_mu, rasterize

__version__ = "0.1.0"

__all__ = [
    "BinaryMask", "GridShape", "PenaltyConfig", "PredictionField", "RegionReport", "RepairProblem",
    "RepairTrace", "ShapeSpec", "SoftConfig", "Threshold", "analytic_mu", "dice", "fill_holes",
    "hausdorff", "penalty", "perimeter", "rasterize", "read_pgm", "region_report",
    "soft_topology_penalty", "threshold_field", "write_pgm",
]
