"""scikit-learn style wrappers around the functional core.

``SpectralCumulants`` turns each row of samples (e.g. the eigenvalues of one
matrix) into its free cumulants.  ``FreeConvolutionDensity`` fits the
empirical measure of 1-D samples and predicts the density of its free
convolution with a fixed second measure.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .analytic import conv_G, stieltjes_density
from .cumulants import m2c
from .measures import AtomicMeasure, MomentSeq


class SpectralCumulants(TransformerMixin, BaseEstimator):
    """Free cumulants C_1..C_order of the empirical measure of each row."""

    def __init__(self, order=8, route="a"):
        self.order = order
        self.route = route

    def fit(self, X, y=None):
        X = check_array(X)
        if int(self.order) < 1:
            raise ValueError("order must be >= 1")
        if self.route not in ("a", "b", "moebius"):
            raise ValueError(f"unknown route {self.route!r}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        K = int(self.order)
        powers = X[:, :, None] ** np.arange(1, K + 1)
        moments = powers.mean(axis=1)
        out = np.empty((X.shape[0], K))
        for i, row in enumerate(moments):
            out[i] = m2c(MomentSeq(tuple(float(v) for v in row)), self.route).C
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array([f"C{k}" for k in range(1, int(self.order) + 1)], dtype=object)


class FreeConvolutionDensity(BaseEstimator):
    """Density of (empirical measure of X) free-convolved with ``rhs``.

    Parameters
    ----------
    rhs : AtomicMeasure or FamilySpec
        Fixed second summand.
    grid : tuple (a, b, n)
        Evaluation grid for the Stieltjes inversion.
    """

    def __init__(self, rhs=None, grid=(-3.0, 3.0, 400)):
        self.rhs = rhs
        self.grid = grid

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=False).reshape(-1)
        if self.rhs is None:
            raise ValueError("rhs measure is required")
        self.lhs_ = AtomicMeasure.empirical(X)
        self.density_ = stieltjes_density(lambda z: conv_G(self.lhs_, self.rhs, z), tuple(self.grid))
        return self

    def predict(self, X):
        """Density values at the points X (linear interpolation)."""
        check_is_fitted(self, "density_")
        x = check_array(X, ensure_2d=False).reshape(-1)
        d = self.density_
        return np.interp(x, d.xs, d.ps, left=0.0, right=0.0)
