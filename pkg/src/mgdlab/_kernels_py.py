"""Pure-NumPy fallback for the compiled update loops in ``_speedups``.

Same batch order and update arithmetic; results agree with the compiled
backend up to floating-point summation order.  Status codes: 0 ok,
1 non-finite parameter, 2 exp overflow.
"""

import numpy as np


def ls_epoch(sxx, sxy, theta, alpha, record=None):
    M = sxx.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(M):
            g = sxx[m] @ theta
            theta += alpha * (sxy[m] - g)
            if record is not None:
                record[m, :] = theta
            if not np.isfinite(theta).all():
                return 1
    return 0


def glm_epoch(X, Y, idx, theta, alpha, kind, record=None):
    M, n = idx.shape
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(M):
            rows = idx[m]
            Xb = X[rows]
            u = Xb @ theta
            if kind == 1:
                mu = _sigmoid(u)
            else:
                if np.abs(u).max() > 700.0:
                    return 2
                mu = np.exp(u)
            g = Xb.T @ (mu - Y[rows])
            theta -= alpha * g / n
            if record is not None:
                record[m, :] = theta
            if not np.isfinite(theta).all():
                return 1
    return 0


def _sigmoid(u):
    # branch form: never exponentiates a large positive argument
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    return out
