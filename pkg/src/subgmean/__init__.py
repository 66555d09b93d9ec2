"""Sub-Gaussian mean estimation for finite-variance data.

The main estimator trims each sample's deviation from a median-of-means
pilot in proportion to its squared size, with the total trimmed weight
fixed at ``log(1/delta)/3``. Baselines, sklearn-style wrappers, numerical
certificates and a deterministic benchmark harness live in submodules.
"""
from .core import (
    AlphaSolution,
    Estimate,
    PsiVector,
    estimate,
    estimate_with_kappa,
    median_of_means,
    psi_root,
    psi_vector,
    solve_alpha,
    weighted_trim_mean,
)
from .estimators import (
    CatoniMean,
    CorrectedMean,
    MedianOfMeans,
    SampleMean,
    SubGaussianMean,
    TrimmedMean,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaSolution",
    "Estimate",
    "PsiVector",
    "estimate",
    "estimate_with_kappa",
    "median_of_means",
    "psi_root",
    "psi_vector",
    "solve_alpha",
    "weighted_trim_mean",
    "SubGaussianMean",
    "SampleMean",
    "TrimmedMean",
    "MedianOfMeans",
    "CatoniMean",
    "CorrectedMean",
]
