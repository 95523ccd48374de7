"""Estimator-style facade over the functional API."""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix, check_points
from .field import SigmaField
from .linalg import schur_decompose
from .singular import classify_singular_points
from .tracer import trace_boundary


class PseudospectrumAnalyzer(TransformerMixin, BaseEstimator):
    """Pseudospectrum of one matrix.

    ``fit(A)`` computes the Schur form and the block decomposition;
    points are then complex numbers (or ``(m, 2)`` arrays of ``(x, y)``).
    ``transform`` returns the singular values of ``lambda - A`` in
    decreasing order, ``predict`` membership in ``{s_n <= delta}``.
    """

    def __init__(self, delta=0.1, zero_tol=None, fault_tol=None, level_tol=None,
                 grid=(128, 128)):
        self.delta = delta
        self.zero_tol = zero_tol
        self.fault_tol = fault_tol
        self.level_tol = level_tol
        self.grid = grid

    def fit(self, X, y=None):
        a = check_matrix(X)
        self.schur_ = schur_decompose(a)
        self.field_ = SigmaField(a, zero_tol=self.zero_tol)
        self.blocks_ = self.field_.decomposition
        self.eigenvalues_ = self.field_.eigenvalues
        self.n_features_in_ = a.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "field_")
        return SigmaField.plain_values(self.field_.a, check_points(X))

    def decision_function(self, X):
        """``delta - s_n``: positive inside, negative outside."""
        check_is_fitted(self, "field_")
        return self.delta - self.field_.evaluate(check_points(X)).s_min

    def predict(self, X):
        return self.decision_function(X) >= 0

    def boundary(self, region=None):
        check_is_fitted(self, "field_")
        return trace_boundary(self.field_.a, self.delta, region, self.grid,
                              level_tol=self.level_tol, fault_tol=self.fault_tol,
                              field=self.field_)

    def singular_points(self, region=None):
        curves = self.boundary(region)
        return classify_singular_points(self.field_.a, self.delta, curves, self.blocks_,
                                        fault_tol=self.fault_tol, level_tol=self.level_tol,
                                        field=self.field_)
