"""scikit-learn compatible transformers over batches of quantum states.

Each transformer maps a batch of states (rows of amplitudes, stacked
density matrices, or lists of state objects) to a feature matrix, so the
measures can sit inside a ``Pipeline`` or ``FunctionTransformer`` chain.
Fitting only validates the layout; none of the measures learn anything.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import geoment, measures
from .qcore import Partition, enumerate_partitions
from .validation import as_layout, check_density_matrices, check_is_fitted, check_states


class _StateTransformer(TransformerMixin, BaseEstimator):
    def _fit_layout(self, X):
        self.layout_ = as_layout(self.dims)
        self.n_features_in_ = self.layout_.total_dim
        return self

    def fit(self, X=None, y=None):
        return self._fit_layout(X)


class GeometricEntanglement(_StateTransformer):
    """1 - Lambda^2 for a fixed partition, or minimised over all K-block partitions.

    Parameters
    ----------
    dims : tuple of int
        Local dimensions of the state layout.
    partition : sequence of sequences of int, optional
        Blocks of a fixed partition (relative measure). Overrides ``K``.
    K : int, optional
        Block count for the absolute measure; defaults to fully product.
    """

    def __init__(self, dims=(2, 2, 2, 2), partition=None, K=None, restarts=32, max_iter=500, tol=1e-10,
                 random_state=0):
        self.dims = dims
        self.partition = partition
        self.K = K
        self.restarts = restarts
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X=None, y=None):
        self._fit_layout(X)
        n = self.layout_.n
        if self.partition is not None:
            self.partitions_ = [Partition(self.partition, n=n)]
        else:
            self.partitions_ = enumerate_partitions(n, n if self.K is None else self.K)
        self.options_ = geoment.GEOptions(self.restarts, self.max_iter, self.tol, self.random_state)
        return self

    def transform(self, X):
        check_is_fitted(self, "partitions_")
        out = []
        for psi in check_states(X, self.layout_):
            out.append(min(geoment.best_product_overlap(psi, p, self.options_).energy for p in self.partitions_))
        return np.asarray(out).reshape(-1, 1)


class GeometricHierarchy(_StateTransformer):
    """Columns E_AGE^(2) ... E_AGE^(N) for each input state."""

    def __init__(self, dims=(2, 2, 2, 2), restarts=32, max_iter=500, tol=1e-10, random_state=0):
        self.dims = dims
        self.restarts = restarts
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def transform(self, X):
        check_is_fitted(self)
        opts = geoment.GEOptions(self.restarts, self.max_iter, self.tol, self.random_state)
        rows = []
        for psi in check_states(X, self.layout_):
            rep = geoment.hierarchy(psi, opts)
            rows.append([rep.age[k] for k in sorted(rep.age)])
        return np.asarray(rows)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self)
        return np.array([f"E_AGE{k}" for k in range(2, self.layout_.n + 1)], dtype=object)


class Concurrence(_StateTransformer):
    """Two-qubit concurrence; ``signed=True`` returns Wootters' Q instead."""

    dims = (2, 2)

    def __init__(self, signed=False):
        self.signed = signed

    def transform(self, X):
        check_is_fitted(self)
        f = measures.q_auxiliary if self.signed else measures.concurrence_mixed
        return np.array([f(r) for r in check_density_matrices(X, self.layout_)]).reshape(-1, 1)


class QuantumDiscord(_StateTransformer):
    """Two-qubit discord (bits) with projective measurements on the second qubit."""

    dims = (2, 2)

    def __init__(self, grid=64, tol=1e-10, max_iter=400, random_state=0):
        self.grid = grid
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def transform(self, X):
        check_is_fitted(self)
        opts = measures.DiscordOptions(grid=self.grid, tol=self.tol, max_iter=self.max_iter, seed=self.random_state)
        vals = [measures.discord_two_qubit(r, opts).value for r in check_density_matrices(X, self.layout_)]
        return np.asarray(vals).reshape(-1, 1)
