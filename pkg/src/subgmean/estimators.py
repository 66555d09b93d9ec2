"""scikit-learn compatible location estimators.

Each estimator fits one location per column of a 2-D ``X`` and stores it
in ``location_``; reshape a single sample set with ``x.reshape(-1, 1)``. ``transform`` centers data
by subtracting ``location_``, so the estimators drop into a ``Pipeline``
as robust centering steps.

>>> est = SubGaussianMean(delta=0.01).fit(X)       # doctest: +SKIP
>>> est.location_, est.get_params()                # doctest: +SKIP
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from . import baselines, core
from ._validation import check_delta
from .bench import corrected_empirical_mean

__all__ = [
    "SubGaussianMean",
    "SampleMean",
    "TrimmedMean",
    "MedianOfMeans",
    "CatoniMean",
    "CorrectedMean",
]


class _LocationEstimator(TransformerMixin, BaseEstimator):
    _min_samples = 1

    def _location(self, x):
        raise NotImplementedError

    def _validate_params(self):
        pass

    def fit(self, X, y=None):
        """Estimate one location per column. ``y`` is ignored."""
        self._validate_params()
        X = self._check_fit_X(X)
        self.location_ = np.array([self._location(col) for col in X.T])
        return self

    def _check_fit_X(self, X):
        return validate_data(self, X, dtype=np.float64, ensure_min_samples=self._min_samples)

    def transform(self, X):
        """Center ``X`` by subtracting the fitted locations."""
        check_is_fitted(self, "location_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return X - self.location_


class SubGaussianMean(_LocationEstimator):
    """Sub-Gaussian mean estimator for finite-variance data.

    Parameters
    ----------
    delta : float, default=0.01
        Target failure probability; sets both the number of median-of-means
        groups and the discard budget ``log(1/delta)/3``.
    kappa : float or None, default=None
        Fixed pilot estimate. ``None`` uses the median-of-means pilot.

    Attributes
    ----------
    location_ : ndarray of shape (n_features,)
    kappa_, alpha_, v_hat_ : ndarray of shape (n_features,)
    clamp_count_ : ndarray of int, shape (n_features,)
    """

    _min_samples = 2

    def __init__(self, delta=0.01, kappa=None):
        self.delta = delta
        self.kappa = kappa

    def _validate_params(self):
        check_delta(self.delta)

    def fit(self, X, y=None):
        self._validate_params()
        X = self._check_fit_X(X)
        fits = []
        for col in X.T:
            kappa = core.median_of_means(col, self.delta) if self.kappa is None else float(self.kappa)
            sol = core.solve_alpha(col, kappa, self.delta)
            fits.append((core.weighted_trim_mean(col, kappa, sol.alpha), kappa, sol))
        self.location_ = np.array([f[0] for f in fits])
        self.kappa_ = np.array([f[1] for f in fits])
        self.alpha_ = np.array([f[2].alpha for f in fits])
        self.v_hat_ = np.array([f[2].v_hat for f in fits])
        self.clamp_count_ = np.array([f[2].clamp_count for f in fits])
        return self


class SampleMean(_LocationEstimator):
    def _location(self, x):
        return baselines.sample_mean(x)


class TrimmedMean(_LocationEstimator):
    def __init__(self, trim_fraction=0.05):
        self.trim_fraction = trim_fraction

    def _location(self, x):
        return baselines.trimmed_mean(x, self.trim_fraction)


class MedianOfMeans(_LocationEstimator):
    def __init__(self, delta=0.01):
        self.delta = delta

    def _validate_params(self):
        check_delta(self.delta)

    def _location(self, x):
        return core.median_of_means(x, self.delta)


class CatoniMean(_LocationEstimator):
    """Catoni's M-estimator; requires the variance to be known in advance."""

    _min_samples = 2

    def __init__(self, delta=0.01, variance=1.0, tolerance=1e-12, max_iterations=200):
        self.delta = delta
        self.variance = variance
        self.tolerance = tolerance
        self.max_iterations = max_iterations

    def _location(self, x):
        cfg = baselines.CatoniConfig(self.variance, self.max_iterations, self.tolerance)
        return baselines.catoni_estimate(x, self.delta, cfg)


class CorrectedMean(_LocationEstimator):
    def __init__(self, delta=0.01):
        self.delta = delta

    def _validate_params(self):
        check_delta(self.delta)

    def _location(self, x):
        return corrected_empirical_mean(x, self.delta)
