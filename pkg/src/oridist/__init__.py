"""oridist: probability distributions over 3D orientations.

Core pieces: unit-quaternion algebra, a deterministic multiresolution
grid of unique rotations seeded by the 600-cell, Bingham distributions
(isotropic and full), gridded histogram distributions with inverse
distance interpolation, learned and statistical uncertainty estimators,
and evaluation/filtering metrics.
"""
from . import (bingham, dataset, grid, histogram, kernels, learners, metrics,
               nets, quaternion)
from .bingham import BinghamDist, BinghamMixture, fit_to_samples
from .dataset import Dataset, EvalRecord, ObjectSpec, SymmetrySpec, synth_dataset
from .grid import S3Grid, build_grid
from .histogram import GriddedHistogram, nll_loss

__version__ = "0.1.0"

__all__ = [
    "bingham", "dataset", "grid", "histogram", "kernels", "learners",
    "metrics", "nets", "quaternion",
    "BinghamDist", "BinghamMixture", "fit_to_samples",
    "Dataset", "EvalRecord", "ObjectSpec", "SymmetrySpec", "synth_dataset",
    "S3Grid", "build_grid", "GriddedHistogram", "nll_loss",
    "__version__",
]
