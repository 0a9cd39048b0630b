"""Weighted linear classifiers behind the residual-weighted and augmented learners.

All problems are posed on standardized covariates with weights rescaled to
mean one, and solved for theta = (beta, intercept):

    minimize  mean_i w_i L(z_i (beta . x_i + intercept)) + lam ||beta||^2
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from cohort.exceptions import ArgumentError, DegenerateWeightsError
from learners.rules import LinearRule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassifierFit:
    theta: np.ndarray
    objective: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        scale = X.std(axis=0)
        return cls(mean=X.mean(axis=0), scale=np.where(scale > 0, scale, 1.0))

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_rule(self, theta, tie_arm=-1, diagnostics=None):
        """Express a standardized-scale solution in original covariate units."""
        beta, intercept = theta[:-1], theta[-1]
        weights = beta / self.scale
        return LinearRule(
            weights=tuple(weights),
            intercept=float(intercept - weights @ self.mean),
            tie_arm=tie_arm,
            diagnostics=diagnostics or {},
        )


def normalize_weights(weights):
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ArgumentError('classification weights must be finite and non-negative')
    total = weights.sum()
    if total <= 0:
        raise DegenerateWeightsError('every classification weight is zero; use the zero-order rule instead')
    return weights * (len(weights) / total)


def _design(Z):
    return np.column_stack([Z, np.ones(len(Z))])


def _margins(D, z, theta):
    return z * (D @ theta)


def ramp_objective(D, z, w, lam, theta):
    u = _margins(D, z, theta)
    return float(np.mean(w * np.clip(1.0 - u, 0.0, 1.0)) + lam * theta[:-1] @ theta[:-1])


def _convex_objective(D, z, w, lam, theta, delta):
    u = _margins(D, z, theta)
    return float(np.mean(w * (np.maximum(0.0, 1.0 - u) + delta * u)) + lam * theta[:-1] @ theta[:-1])


def solve_hinge(D, z, w, lam, start=None, delta=None, iterations=400):
    """Subgradient descent on mean w (hinge(u) + delta u) + lam ||beta||^2.

    Steps follow eta0 / sqrt(t) with eta0 = 1 / (1 + 2 lam); the best iterate
    is returned.
    """
    n, d = D.shape
    delta = np.zeros(n) if delta is None else delta
    theta = np.zeros(d) if start is None else start.copy()
    penalty = np.full(d, 2.0 * lam)
    penalty[-1] = 0.0
    eta0 = 1.0 / (1.0 + 2.0 * lam)
    best = theta.copy()
    best_value = _convex_objective(D, z, w, lam, theta, delta)
    for t in range(1, iterations + 1):
        u = _margins(D, z, theta)
        coefficient = w * ((u < 1.0) * -1.0 + delta) * z
        gradient = D.T @ coefficient / n + penalty * theta
        theta = theta - eta0 / np.sqrt(t) * gradient
        value = _convex_objective(D, z, w, lam, theta, delta)
        if value < best_value:
            best, best_value = theta.copy(), value
    return best, best_value


def fit_ramp(X, labels, weights, lam, surrogate='ramp', max_dc_iter=20, tol=1e-6, iterations=400):
    """Weighted ramp-loss classifier by difference-of-convex iterations.

    ramp(u) = hinge(u) - max(0, -u); each iteration replaces the concave part
    by its tangent at the current solution and solves the convex remainder,
    starting from the plain hinge solution.
    """
    standardizer = Standardizer.fit(X)
    D = _design(standardizer.transform(X))
    z = np.asarray(labels, dtype=float)
    w = normalize_weights(weights)

    theta, _ = solve_hinge(D, z, w, lam, iterations=iterations)
    if surrogate == 'hinge':
        value = ramp_objective(D, z, w, lam, theta)
        return standardizer, ClassifierFit(theta, value, True, 0)

    previous = ramp_objective(D, z, w, lam, theta)
    best, best_value = theta, previous
    converged = False
    iteration = 0
    for iteration in range(1, max_dc_iter + 1):
        delta = (_margins(D, z, theta) < 0).astype(float)
        theta, _ = solve_hinge(D, z, w, lam, start=theta, delta=delta, iterations=iterations)
        value = ramp_objective(D, z, w, lam, theta)
        if value < best_value:
            best, best_value = theta, value
        if abs(previous - value) < tol:
            converged = True
            break
        previous = value
    if not converged:
        logger.warning('Ramp-loss DC iterations did not converge in %d steps; keeping the best iterate', max_dc_iter)
    return standardizer, ClassifierFit(best, best_value, converged, iteration)


def fit_logistic(X, labels, weights, lam, max_iter=500):
    """Weighted logistic surrogate, solved with L-BFGS-B."""
    standardizer = Standardizer.fit(X)
    D = _design(standardizer.transform(X))
    z = np.asarray(labels, dtype=float)
    w = normalize_weights(weights)
    n = len(z)
    penalty = np.full(D.shape[1], 2.0 * lam)
    penalty[-1] = 0.0

    def objective(theta):
        u = _margins(D, z, theta)
        value = np.mean(w * np.logaddexp(0.0, -u)) + lam * theta[:-1] @ theta[:-1]
        gradient = -(D.T @ (w * z * expit(-u))) / n + penalty * theta
        return value, gradient

    result = minimize(objective, np.zeros(D.shape[1]), jac=True, method='L-BFGS-B', options={'maxiter': max_iter})
    if not result.success:
        logger.warning('Logistic surrogate did not converge: %s', result.message)
    return standardizer, ClassifierFit(result.x, float(result.fun), bool(result.success), int(result.nit))
