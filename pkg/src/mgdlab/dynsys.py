"""Exact analysis of the fixed-partition update cycle as a linear dynamic
system: the stacked block operator, its stable solution, the cycle
contraction product, asymptotic moments, and evaluable error bounds.
"""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import SingularMatrixError, solve_linear, spectral_radius
from .schedules import Schedule, rates


@dataclass(frozen=True)
class ContractionSet:
    """The M per-batch contraction operators I - alpha * sxx[m]."""

    deltas: np.ndarray  # (M, p, p)
    alpha: float

    @property
    def M(self) -> int:
        return self.deltas.shape[0]

    @property
    def p(self) -> int:
        return self.deltas.shape[1]


def contraction_set(stats_list, alpha: float) -> ContractionSet:
    """Build the contraction operators from per-batch second moments."""
    sxx = np.stack([s.sxx for s in stats_list])
    eye = np.eye(sxx.shape[1])
    return ContractionSet(deltas=eye[None, :, :] - alpha * sxx, alpha=float(alpha))


def build_omega(cs: ContractionSet) -> np.ndarray:
    """The (Mp) x (Mp) block system matrix: identity diagonal blocks,
    -delta_m on the subdiagonal block row m, -delta_1 in the top-right
    corner.  For M=1 it degenerates to I - delta_1."""
    M, p = cs.M, cs.p
    if M == 1:
        return np.eye(p) - cs.deltas[0]
    omega = np.eye(M * p)
    for m in range(1, M):
        omega[m * p:(m + 1) * p, (m - 1) * p:m * p] = -cs.deltas[m]
    omega[0:p, (M - 1) * p:M * p] = -cs.deltas[0]
    return omega


def cycle_matrix(cs: ContractionSet) -> np.ndarray:
    """Product delta_M ... delta_1 (one full epoch seen from the last batch)."""
    out = np.eye(cs.p)
    for m in range(cs.M):
        out = cs.deltas[m] @ out
    return out


@dataclass(frozen=True)
class StableSolution:
    """Fixed point of the batch cycle with its diagnostics."""

    theta_star: np.ndarray       # (M, p), block m is the batch-m limit
    rho_cycle: float             # spectral radius of the epoch product
    omega_min_singular: float    # invertibility margin of the block system


def stable_solution(cs: ContractionSet, sxy_list) -> StableSolution:
    """Solve the stacked block system for the cycle's fixed point.

    Raises SingularMatrixError (carrying the invertibility margin) when the
    block operator is singular to tolerance.
    """
    sxy = np.stack([np.asarray(v, dtype=np.float64) for v in sxy_list])
    if sxy.shape[0] != cs.M or sxy.shape[1] != cs.p:
        raise ValueError("sxy blocks do not match the contraction set")
    omega = build_omega(cs)
    rhs = cs.alpha * sxy.reshape(-1)
    min_sing = float(scipy.linalg.svdvals(omega)[-1])
    try:
        flat = solve_linear(omega, rhs)
    except SingularMatrixError as exc:
        raise SingularMatrixError(min_sing) from exc
    theta = flat.reshape(cs.M, cs.p)
    rho = spectral_radius(cycle_matrix(cs))
    return StableSolution(theta_star=theta, rho_cycle=rho, omega_min_singular=min_sing)


def fixed_point_residual(cs: ContractionSet, sxy_list, sol: StableSolution) -> float:
    """Relative residual of the block equations at the returned solution."""
    omega = build_omega(cs)
    rhs = cs.alpha * np.stack(sxy_list).reshape(-1)
    r = omega @ sol.theta_star.reshape(-1) - rhs
    return float(np.linalg.norm(r) / (1.0 + np.linalg.norm(rhs)))


@dataclass(frozen=True)
class AsymptoticMoments:
    """Leading-order center and variance shape of the batch-cycle estimator."""

    mu: np.ndarray
    v: np.ndarray


def asymptotic_moments(sigma_xx, alpha: float, M: int, theta) -> AsymptoticMoments:
    """Center theta and variance shape inv(Sigma) + alpha^2 (M^2-1)/12 * Sigma
    (higher-order remainder dropped)."""
    sigma_xx = np.asarray(sigma_xx, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    inv = np.linalg.inv(sigma_xx)
    v = inv + (alpha**2 * (M**2 - 1) / 12.0) * sigma_xx
    return AsymptoticMoments(mu=theta.copy(), v=v)


BOUND_KINDS = ("scheduled", "constant_shuffled", "general")


def eval_bounds(kind: str, *, lam_min: float, lam_max: float, grad_max: float,
                M: int, T: int, schedule: Schedule | None = None,
                alpha: float | None = None, init_dist: float) -> np.ndarray:
    """Evaluate the per-epoch error-bound series.

    ``scheduled`` / ``general``: initial term init_dist / exp(M lam_min
    sum_{k<=t} alpha_k) plus the accumulation term M grad_max
    (lam_max/lam_min) sum_k alpha_k^2 / sum_{s=k+1..t} alpha_s, where the
    empty k=t denominator is taken as alpha_t.  The two kinds share the
    formula and differ only in what ``grad_max`` measures (least-squares
    batch gradients at the whole-sample solution vs general-loss batch
    gradients at the global minimizer).

    ``constant_shuffled``: (1 - lam_min alpha)^(tM) init_dist
    + 2 alpha M (lam_max/lam_min) grad_max, requiring alpha < 1/(M lam_max).
    """
    if kind not in BOUND_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}")
    if not (0 < lam_min <= lam_max):
        raise ValueError("need 0 < lam_min <= lam_max")
    if T < 1 or M < 1:
        raise ValueError("T and M must be positive")

    t_grid = np.arange(1, T + 1)
    if kind == "constant_shuffled":
        if alpha is None:
            raise ValueError("constant_shuffled bound needs alpha")
        if not alpha < 1.0 / (M * lam_max):
            raise ValueError("bound precondition violated: alpha must be below 1/(M lam_max)")
        contraction = (1.0 - lam_min * alpha) ** (t_grid * M)
        return contraction * init_dist + 2.0 * alpha * M * (lam_max / lam_min) * grad_max

    if schedule is None:
        raise ValueError(f"{kind} bound needs a schedule")
    a = np.asarray(rates(schedule, T))
    csum = np.cumsum(a)
    first = init_dist / np.exp(M * lam_min * csum)
    second = np.empty(T)
    ratio = M * grad_max * (lam_max / lam_min)
    for t in range(1, T + 1):
        denom = csum[t - 1] - csum[:t]  # sum_{s=k+1..t} alpha_s for k=1..t
        denom[-1] = a[t - 1]            # empty-sum convention at k=t
        second[t - 1] = ratio * float(np.sum(a[:t] ** 2 / denom))
    return first + second


def bounds_to_csv(path, observed, bound) -> None:
    """Write (epoch, observed_error, bound_value) rows."""
    observed = np.asarray(observed, dtype=np.float64)
    bound = np.asarray(bound, dtype=np.float64)
    if observed.shape != bound.shape:
        raise ValueError("observed and bound series differ in length")
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "observed_error", "bound_value"])
        for t, (o, b) in enumerate(zip(observed, bound), start=1):
            writer.writerow([t, repr(float(o)), repr(float(b))])
