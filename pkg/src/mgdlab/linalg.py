"""Dense linear-algebra kernels shared across the package.

Everything here operates on plain float64 NumPy arrays.  Matrices are small
(p up to a few hundred, stacked systems up to a few thousand), so dense
factorizations are used throughout.
"""

import warnings

import numpy as np
import scipy.linalg

PIVOT_RTOL = 1e-12


class SingularMatrixError(ValueError):
    """Raised when a solve meets a pivot below the relative tolerance.

    ``min_pivot`` carries the smallest pivot magnitude encountered.
    """

    def __init__(self, min_pivot: float):
        self.min_pivot = float(min_pivot)
        super().__init__(f"matrix singular to tolerance (smallest pivot {min_pivot:.3e})")


class PowerIterationError(RuntimeError):
    """Raised when the spectral-radius iteration fails to settle.

    ``estimates`` carries the last two modulus estimates.
    """

    def __init__(self, estimates):
        self.estimates = tuple(float(e) for e in estimates)
        super().__init__(f"power iteration did not converge; last estimates {self.estimates}")


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    if not np.isfinite(a).all():
        raise ValueError("matrix has non-finite entries")
    return a


def as_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got ndim={v.ndim}")
    if not np.isfinite(v).all():
        raise ValueError("vector has non-finite entries")
    return v


def check_symmetric(a: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix is not square")
    scale = np.abs(a).max() or 1.0
    if np.abs(a - a.T).max() > rtol * scale:
        raise ValueError("matrix is not symmetric")
    return a


def matvec(a, v) -> np.ndarray:
    """Dense matrix-vector product with an explicit dimension check."""
    a = as_matrix(a)
    v = as_vector(v)
    if a.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {v.shape}")
    return a @ v


def solve_linear(a, b) -> np.ndarray:
    """Solve a x = b by LU with partial pivoting.

    Raises SingularMatrixError when the smallest pivot falls below
    PIVOT_RTOL * max|a|.
    """
    a = as_matrix(a)
    b = as_vector(b)
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix is not square")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    with warnings.catch_warnings():
        # singularity is diagnosed through the pivot check below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    min_pivot = pivots.min() if pivots.size else 0.0
    if min_pivot < PIVOT_RTOL * max(np.abs(a).max(), 1e-300):
        raise SingularMatrixError(min_pivot)
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def eig_sym(a, vectors: bool = False):
    """Eigenvalues of a symmetric matrix, sorted descending.

    With ``vectors=True`` also returns the eigenvectors as columns, ordered
    to match.
    """
    a = check_symmetric(a)
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    if vectors:
        return vals, vecs[:, order]
    return vals


def gershgorin_bound(a) -> float:
    """Row-sum upper bound on the spectral radius."""
    a = as_matrix(a)
    return float(np.abs(a).sum(axis=1).max()) if a.size else 0.0


def spectral_radius(a, tol: float = 1e-6, max_iter: int = 10000) -> float:
    """Spectral radius by power iteration with a deterministic start.

    Starts from the normalized all-ones vector; if the iterate collapses to
    zero it restarts from coordinate basis vectors, and a matrix whose every
    Krylov chain dies is nilpotent, for which the Gershgorin-bound fallback
    degenerates to 0.  A period-2 oscillation of the modulus estimate (a
    dominant complex pair) is resolved through the geometric mean of
    consecutive estimates.  Raises PowerIterationError when neither estimate
    sequence settles to ``tol`` relative accuracy within ``max_iter``.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix is not square")
    p = a.shape[0]
    if p == 0:
        return 0.0
    bound = gershgorin_bound(a)
    if bound == 0.0:
        return 0.0

    starts = [np.full(p, 1.0 / np.sqrt(p))]
    starts.extend(np.eye(p)[i] for i in range(p))
    floor = 1e-290

    for x in starts:
        x = x.copy()
        prev = prev2 = None
        for _ in range(max_iter):
            y = a @ x
            nrm = float(np.linalg.norm(y))
            if nrm < floor:
                break  # Krylov chain died; restart from the next basis vector
            est = nrm  # ||x|| == 1
            x = y / nrm
            if prev is not None:
                step = est - prev
                if abs(step) <= 1e-14 * est:
                    return min(est, bound)
                if prev2 is not None:
                    prev_step = prev - prev2
                    ratio = step / prev_step if prev_step != 0.0 else 0.0
                    if 0.0 <= ratio < 0.999:
                        # monotone geometric settling: project the remaining
                        # tail and fold it into the returned limit
                        tail = step * ratio / (1.0 - ratio)
                        if abs(tail) + abs(step) <= tol * est:
                            return min(est + tail, bound)
                    else:
                        # oscillating estimates (dominant complex or
                        # opposite-sign pair): the geometric mean of
                        # consecutive estimates settles instead
                        gm = float(np.sqrt(est * prev))
                        gm_prev = float(np.sqrt(prev * prev2))
                        if abs(gm - gm_prev) <= 0.05 * tol * max(gm, floor):
                            return min(gm, bound)
            prev2, prev = prev, est
        else:
            raise PowerIterationError((prev2 if prev2 is not None else 0.0, prev))
    # every chain terminated at zero: nilpotent to working precision
    return 0.0
