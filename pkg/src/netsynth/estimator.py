"""Thin scikit-learn style wrappers over the construction pipelines.

The pipelines synthesise weights from a target function rather than fitting
samples. ``ConstructiveNetworkRegressor`` therefore takes the target as a
parameter; when only samples are given, a piecewise-linear interpolant of them
becomes the target.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .activations import ActivationSpec
from .constructor import ConstructionRequest, construct, sample_frozen_directions
from .grids import Box
from .monomials import MultiPoly
from .network import forward


def _interpolant(X: np.ndarray, y: np.ndarray):
    y2 = y.reshape(len(y), -1)
    if X.shape[1] == 1:
        order = np.argsort(X[:, 0])
        xs, ys = X[order, 0], y2[order]
        return lambda x: np.column_stack([np.interp(np.atleast_2d(x)[:, 0], xs, ys[:, t])
                                          for t in range(ys.shape[1])])
    lin = LinearNDInterpolator(X, y2)
    near = NearestNDInterpolator(X, y2)

    def f(x):
        x = np.atleast_2d(x)
        v = lin(x).reshape(len(x), -1)
        bad = np.isnan(v).any(axis=1)
        if bad.any():
            v[bad] = near(x[bad]).reshape(int(bad.sum()), -1)
        return v

    return f


class ConstructiveNetworkRegressor(RegressorMixin, BaseEstimator):
    """Synthesise a one-hidden-layer network with certified error below ``eps`` on the data's box.

    ``target`` may be a callable on (P, n) arrays, a list of MultiPoly, or None
    (then ``y`` is required and its interpolant is used).
    """

    def __init__(self, target=None, eps: float = 0.05, sigma: str = "tanh", domain=None,
                 small_output_weights=None, large_input_norms=None, random_radius=None,
                 schedule: str = "auto", max_k: int = 40, seed: int = 0, verify_resolution=None):
        self.target = target
        self.eps = eps
        self.sigma = sigma
        self.domain = domain
        self.small_output_weights = small_output_weights
        self.large_input_norms = large_input_norms
        self.random_radius = random_radius
        self.schedule = schedule
        self.max_k = max_k
        self.seed = seed
        self.verify_resolution = verify_resolution

    def fit(self, X, y=None):
        if self.target is None:
            if y is None:
                raise ValueError("either a target function or y is required")
            X, y = check_X_y(X, y, multi_output=True, y_numeric=True)
            target = _interpolant(X, np.asarray(y, dtype=float))
        else:
            X = check_array(X)
            target = self.target
        self.n_features_in_ = X.shape[1]
        if self.domain is None:
            box = Box(X.min(axis=0), X.max(axis=0))
        else:
            lo, hi = zip(*self.domain)
            box = Box(lo, hi)
        if box.n != self.n_features_in_:
            raise ValueError("domain dimension does not match X")
        sigma = self.sigma if isinstance(self.sigma, ActivationSpec) else ActivationSpec(self.sigma)
        if not callable(target) and not all(isinstance(p, MultiPoly) for p in target):
            raise ValueError("target must be callable or a list of MultiPoly")
        frozen = None if self.random_radius is None else (float(self.random_radius), int(self.seed))
        req = ConstructionRequest(target, box, sigma, float(self.eps),
                                  small_output_weights=self.small_output_weights,
                                  large_input_norms=self.large_input_norms, frozen_random_first_layer=frozen,
                                  schedule=self.schedule, max_k=self.max_k, seed=int(self.seed),
                                  verify_resolution=self.verify_resolution)
        self.report_ = construct(req)
        if self.report_.weights is None:
            raise RuntimeError(f"construction failed: {self.report_.message}")
        self.weights_ = self.report_.weights
        self.sigma_ = sigma
        self.n_outputs_ = self.weights_.m
        return self

    def predict(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        out = forward(self.weights_, self.sigma_, X)
        return out[:, 0] if self.n_outputs_ == 1 else out


class RandomFeatureTransformer(TransformerMixin, BaseEstimator):
    """Hidden-layer features sigma(b + w . x) with directions drawn from the frozen sampling law."""

    def __init__(self, n_components: int = 10, radius: float = 1.0, sigma: str = "tanh", bias: float = 0.0,
                 seed: int = 0):
        self.n_components = n_components
        self.radius = radius
        self.sigma = sigma
        self.bias = bias
        self.seed = seed

    def fit(self, X, y=None):
        X = check_array(X)
        if self.n_components < 1:
            raise ValueError("n_components must be at least 1")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        self.n_features_in_ = X.shape[1]
        self.directions_ = sample_frozen_directions(X.shape[1], self.n_components, float(self.radius), int(self.seed))
        self.sigma_ = ActivationSpec(self.sigma)
        return self

    def transform(self, X):
        check_is_fitted(self, "directions_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.sigma_(self.bias + X @ self.directions_.T)
