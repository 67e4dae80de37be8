"""Scikit-learn style wrapper: rows of a matrix are positions, predictions are capital requirements."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .io import LoadedInstance, fixture_names, fixture_path, load_instance
from .market import MarketInstance
from .risk import SearchConfig, rho


class CapitalRequirement(BaseEstimator):
    """Evaluate rho row by row for a fixed market instance.

    `instance` may be a MarketInstance, a loaded document, a path, a document dict or
    the name of a packaged fixture. Fitting only resolves and validates it.
    """

    def __init__(self, instance=None, tol=1e-9, grid=2.0**-6, seed=0, path=None):
        self.instance = instance
        self.tol = tol
        self.grid = grid
        self.seed = seed
        self.path = path

    def _resolve(self):
        src = self.instance
        if isinstance(src, MarketInstance):
            return src
        if isinstance(src, LoadedInstance):
            return src.instance
        if isinstance(src, str) and src in fixture_names():
            src = fixture_path(src)
        return load_instance(src).instance

    def fit(self, X=None, y=None):
        self.instance_ = self._resolve()
        self.config_ = SearchConfig(h=self.grid, seed=self.seed, tol=self.tol, path=self.path)
        self.n_features_in_ = self.instance_.n_outcomes
        return self

    def _rows(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} outcome columns, got {X.shape[1]}")
        return X

    def predict(self, X):
        """rho per row; +inf / -inf mark infeasible and unbounded rows."""
        return np.array([rho(self.instance_, row, self.config_).value for row in self._rows(X)])

    def reports(self, X):
        return [rho(self.instance_, row, self.config_) for row in self._rows(X)]
