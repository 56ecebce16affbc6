"""Loss functions over mini-batches and whole-sample reference estimators.

Convention: every loss is the *average negative log-likelihood* over the
batch (least squares uses the Gaussian unit-variance case, i.e. per-sample
loss (y - x'theta)^2 / 2).  A uniform constant factor on the loss only
rescales the learning rate, so comparisons across methods are unaffected;
this package applies no such factor.

Caveat on curvature bounds: logistic and Poisson Hessians have no global
positive lower eigenvalue bound over all of parameter space, so analyses
that assume two-sided curvature bounds are validated empirically along the
iterates actually visited (see the directional-curvature tests), not
globally.
"""

from dataclasses import dataclass

import numpy as np

from .datagen import Dataset
from .linalg import solve_linear

KINDS = ("least_squares", "logistic", "poisson")

EXP_OVERFLOW = 700.0


class DivergenceError(FloatingPointError):
    """Linear predictor left the representable range (treated as divergence)."""


@dataclass(frozen=True)
class BatchStats:
    """Per-batch second moments: sxx = X'X/n, sxy = X'y/n."""

    sxx: np.ndarray
    sxy: np.ndarray
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("batch size must be positive")


def batch_stats(data: Dataset, idx) -> BatchStats:
    """Exact second moments of the rows selected by ``idx``."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty index set")
    Xb = data.X[idx]
    Yb = data.Y[idx]
    n = idx.shape[0]
    return BatchStats(sxx=Xb.T @ Xb / n, sxy=Xb.T @ Yb / n, n=n)


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown loss kind {kind!r}")


def _mean_response(kind: str, eta: np.ndarray) -> np.ndarray:
    if kind == "logistic":
        out = np.empty_like(eta)
        pos = eta >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
        e = np.exp(eta[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    if np.abs(eta).max(initial=0.0) > EXP_OVERFLOW:
        raise DivergenceError("linear predictor exceeds exp overflow range")
    return np.exp(eta)


def loss_value(kind: str, batch, theta) -> float:
    """Average per-sample loss on a raw (X, Y) batch."""
    _check_kind(kind)
    X, Y = batch
    theta = np.asarray(theta, dtype=np.float64)
    eta = X @ theta
    if kind == "least_squares":
        r = Y - eta
        return float(r @ r) / (2 * len(Y))
    if kind == "logistic":
        # log(1 + e^eta) - y*eta, evaluated in the overflow-safe form
        val = np.logaddexp(0.0, eta) - Y * eta
        return float(val.mean())
    if np.abs(eta).max(initial=0.0) > EXP_OVERFLOW:
        raise DivergenceError("linear predictor exceeds exp overflow range")
    return float((np.exp(eta) - Y * eta).mean())


def grad(kind: str, stats_or_batch, theta) -> np.ndarray:
    """Batch gradient.

    Least squares consumes BatchStats (sxx theta - sxy); logistic and
    Poisson consume a raw (X, Y) batch and return X'(mu - y)/n with
    mu = sigmoid(X theta) resp. exp(X theta).
    """
    _check_kind(kind)
    theta = np.asarray(theta, dtype=np.float64)
    if kind == "least_squares":
        if not isinstance(stats_or_batch, BatchStats):
            stats_or_batch = _stats_from_batch(stats_or_batch)
        return stats_or_batch.sxx @ theta - stats_or_batch.sxy
    X, Y = stats_or_batch
    mu = _mean_response(kind, X @ theta)
    return X.T @ (mu - Y) / len(Y)


def _stats_from_batch(batch) -> BatchStats:
    X, Y = batch
    n = len(Y)
    return BatchStats(sxx=X.T @ X / n, sxy=X.T @ Y / n, n=n)


def hessian(kind: str, batch, theta) -> np.ndarray:
    """Exact batch Hessian of the average loss."""
    _check_kind(kind)
    X, Y = batch
    theta = np.asarray(theta, dtype=np.float64)
    n = X.shape[0]
    if kind == "least_squares":
        return X.T @ X / n
    mu = _mean_response(kind, X @ theta)
    w = mu * (1.0 - mu) if kind == "logistic" else mu
    return (X * w[:, None]).T @ X / n


def ols(data: Dataset) -> np.ndarray:
    """Whole-sample least-squares solution from the normal equations."""
    stats = batch_stats(data, np.arange(data.N))
    return solve_linear(stats.sxx, stats.sxy)


@dataclass(frozen=True)
class NewtonResult:
    theta: np.ndarray
    converged: bool
    n_iter: int
    grad_norm: float


def newton_mle(data: Dataset, kind: str, tol: float = 1e-10,
               max_iter: int = 100) -> NewtonResult:
    """Full-sample Newton-Raphson from zero for logistic/Poisson losses.

    Stops when the gradient norm drops to ``tol``; raises DivergenceError
    when the gradient norm grows five times in a row.
    """
    if kind not in ("logistic", "poisson"):
        raise ValueError("newton_mle handles logistic and poisson losses")
    batch = (data.X, data.Y)
    theta = np.zeros(data.p)
    prev_norm = np.inf
    bad_steps = 0
    gnorm = np.linalg.norm(grad(kind, batch, theta))
    for it in range(1, max_iter + 1):
        if gnorm <= tol:
            return NewtonResult(theta=theta, converged=True, n_iter=it - 1, grad_norm=float(gnorm))
        H = hessian(kind, batch, theta)
        step = solve_linear(H, grad(kind, batch, theta))
        theta = theta - step
        gnorm = np.linalg.norm(grad(kind, batch, theta))
        if gnorm > prev_norm:
            bad_steps += 1
            if bad_steps >= 5:
                raise DivergenceError("Newton iteration diverged (gradient grew 5 steps)")
        else:
            bad_steps = 0
        prev_norm = gnorm
    return NewtonResult(theta=theta, converged=bool(gnorm <= tol), n_iter=max_iter,
                        grad_norm=float(gnorm))
