"""Epoch drivers for full-batch and mini-batch gradient descent.

One driver covers four methods:

  gd     full-sample gradient descent (a single batch per epoch)
  fmgd   fixed mini-batches: one seeded partition reused every epoch
  sfmgd  per-epoch reshuffled disjoint partitions
  smgd   per-epoch batches sampled with replacement

Least squares runs in precomputed-moment form (theta <- theta -
alpha*(sxx theta - sxy), i.e. the contraction-plus-offset update), so fixed
plans pay the moment computation once.  Logistic/Poisson losses stream raw
rows through the batch-gradient kernel.  Data sources are interchangeable:
an in-memory Dataset, a packaged batch directory, or a row-addressable CSV
(see batchstore).
"""

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .datagen import Dataset
from .kernels import glm_epoch, ls_epoch
from .losses import KINDS, BatchStats, ols
from .partitions import PartitionPlan, make_fixed, make_sampled, make_shuffled
from .schedules import Schedule, rates

METHODS = ("gd", "fmgd", "sfmgd", "smgd")

_GLM_CODES = {"logistic": 1, "poisson": 2}


@dataclass(frozen=True)
class RunConfig:
    method: str
    schedule: Schedule
    T: int
    M: int = 1
    loss: str = "least_squares"
    init: object = "zeros"  # "zeros" or an explicit vector
    seed: int = 0
    record: str = "per_epoch"  # final_only | per_epoch | per_batch
    batch_n: int | None = None  # smgd batch size; defaults to N // M

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.loss not in KINDS:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.T < 1:
            raise ValueError("T must be positive")
        if self.M < 1:
            raise ValueError("M must be positive")
        if self.record not in ("final_only", "per_epoch", "per_batch"):
            raise ValueError(f"unknown recording mode {self.record!r}")
        if self.method == "gd":
            object.__setattr__(self, "M", 1)


@dataclass
class RunTrajectory:
    final: np.ndarray
    last_epoch: np.ndarray                    # (M, p) iterates of the last completed epoch
    alphas: np.ndarray                        # per completed epoch
    iterates: np.ndarray | None               # per recording granularity
    numerical_error: np.ndarray | None        # ||theta^(t,M) - reference|| per epoch
    estimation_error: np.ndarray | None       # ||theta^(t,M) - theta_true|| per epoch
    wall_times_ns: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    diverged: bool = False
    diverged_epoch: int | None = None

    @property
    def epochs_completed(self) -> int:
        return len(self.alphas)


class _MemorySource:
    def __init__(self, data: Dataset):
        self.N = data.N
        self.p = data.p
        self._X = np.ascontiguousarray(data.X, dtype=np.float64)
        self._Y = np.ascontiguousarray(data.Y, dtype=np.float64)

    def gather(self, idx2d: np.ndarray):
        rows = idx2d.reshape(-1)
        return self._X[rows], self._Y[rows]


def _as_source(source):
    if isinstance(source, Dataset):
        return _MemorySource(source)
    for attr in ("N", "p", "gather"):
        if not hasattr(source, attr):
            raise TypeError("data source must expose N, p and gather(idx2d)")
    return source


def _stats_stack(Xs: np.ndarray, Ys: np.ndarray, M: int, n: int):
    p = Xs.shape[1]
    sxx = np.empty((M, p, p))
    sxy = np.empty((M, p))
    for m in range(M):
        Xb = Xs[m * n:(m + 1) * n]
        Yb = Ys[m * n:(m + 1) * n]
        sxx[m] = Xb.T @ Xb / n
        sxy[m] = Xb.T @ Yb / n
    return np.ascontiguousarray(sxx), np.ascontiguousarray(sxy)


def _plan_for_epoch(config: RunConfig, N: int, t: int) -> PartitionPlan:
    if config.method in ("gd", "fmgd"):
        return make_fixed(N, config.M, config.seed)
    if config.method == "sfmgd":
        return make_shuffled(N, config.M, config.seed, epoch=t)
    n = config.batch_n if config.batch_n is not None else N // config.M
    if n < 1:
        raise ValueError("smgd batch size must be positive (set batch_n or M <= N)")
    return make_sampled(N, config.M, n, config.seed, epoch=t)


def run(source, config: RunConfig, reference=None, theta_true=None) -> RunTrajectory:
    """Execute T epochs and record the trajectory.

    ``reference`` (e.g. the whole-sample estimator) enables the numerical
    error series, ``theta_true`` the estimation error series.  A non-finite
    parameter aborts the run with ``diverged=True`` and truncated series.
    """
    src = _as_source(source)
    N, p = src.N, src.p
    alphas = np.asarray(rates(config.schedule, config.T))

    if isinstance(config.init, str):
        if config.init != "zeros":
            raise ValueError(f"unknown init {config.init!r}")
        theta = np.zeros(p)
    else:
        theta = np.array(config.init, dtype=np.float64).copy()
        if theta.shape != (p,):
            raise ValueError("init vector has the wrong length")

    reference = None if reference is None else np.asarray(reference, dtype=np.float64)
    theta_true = None if theta_true is None else np.asarray(theta_true, dtype=np.float64)

    fixed_plan = config.method in ("gd", "fmgd")
    glm_code = _GLM_CODES.get(config.loss)

    # fixed plans pay the gather (and, for least squares, the moments) once
    stats = None
    epoch_rows = None
    idx_trivial = None
    M = config.M
    if fixed_plan:
        baked = getattr(src, "baked_plan", None)
        if baked is not None:
            plan = baked()
            if plan.M != M:
                raise ValueError(f"config.M={M} does not match the packaged layout M={plan.M}")
        else:
            plan = _plan_for_epoch(config, N, 1)
        Xs, Ys = src.gather(plan.batches)
        n = plan.n
        if glm_code is None:
            stats = _stats_stack(Xs, Ys, M, n)
        else:
            epoch_rows = (np.ascontiguousarray(Xs), np.ascontiguousarray(Ys))
            idx_trivial = np.arange(M * n, dtype=np.int64).reshape(M, n)

    batch_rec = np.empty((M, p))
    per_epoch = config.record in ("per_epoch", "per_batch")
    iter_epoch = np.empty((config.T, p)) if config.record == "per_epoch" else None
    iter_batch = np.empty((config.T, M, p)) if config.record == "per_batch" else None
    num_err = np.empty(config.T) if reference is not None else None
    est_err = np.empty(config.T) if theta_true is not None else None
    walls = np.empty(config.T, dtype=np.int64)

    completed = 0
    diverged = False
    diverged_epoch = None
    for t in range(1, config.T + 1):
        alpha = float(alphas[t - 1])
        tic = time.perf_counter_ns()
        if fixed_plan:
            if glm_code is None:
                status = ls_epoch(stats[0], stats[1], theta, alpha, batch_rec)
            else:
                status = glm_epoch(epoch_rows[0], epoch_rows[1], idx_trivial,
                                   theta, alpha, glm_code, batch_rec)
        else:
            plan = _plan_for_epoch(config, N, t)
            Xs, Ys = src.gather(plan.batches)
            n = plan.n
            if glm_code is None:
                sxx, sxy = _stats_stack(Xs, Ys, M, n)
                status = ls_epoch(sxx, sxy, theta, alpha, batch_rec)
            else:
                idx = np.arange(M * n, dtype=np.int64).reshape(M, n)
                status = glm_epoch(np.ascontiguousarray(Xs), np.ascontiguousarray(Ys),
                                   idx, theta, alpha, glm_code, batch_rec)
        walls[t - 1] = time.perf_counter_ns() - tic

        if status != 0:
            diverged = True
            diverged_epoch = t
            break

        completed = t
        if iter_epoch is not None:
            iter_epoch[t - 1] = theta
        if iter_batch is not None:
            iter_batch[t - 1] = batch_rec
        if num_err is not None:
            num_err[t - 1] = np.linalg.norm(theta - reference)
        if est_err is not None:
            est_err[t - 1] = np.linalg.norm(theta - theta_true)

    c = completed
    iterates = None
    if iter_epoch is not None:
        iterates = iter_epoch[:c].copy()
    elif iter_batch is not None:
        iterates = iter_batch[:c].copy()
    return RunTrajectory(
        final=theta.copy(),
        last_epoch=batch_rec.copy(),
        alphas=alphas[:c].copy(),
        iterates=iterates,
        numerical_error=None if num_err is None else num_err[:c].copy(),
        estimation_error=None if est_err is None else est_err[:c].copy(),
        wall_times_ns=walls[:c].copy(),
        diverged=diverged,
        diverged_epoch=diverged_epoch,
    )


def precompute_batch_stats(source, plan: PartitionPlan) -> list[BatchStats]:
    """Per-batch second moments for a plan, computed in one pass.

    For fixed plans the returned list is what the least-squares driver
    reuses across every epoch; shuffled/sampled plans are epoch-specific so
    callers recompute per epoch.
    """
    src = _as_source(source)
    Xs, Ys = src.gather(plan.batches)
    M, n = plan.batches.shape
    sxx, sxy = _stats_stack(Xs, Ys, M, n)
    return [BatchStats(sxx=sxx[m], sxy=sxy[m], n=n) for m in range(M)]


def q2_epoch_error(data: Dataset, method: str, alpha: float, M: int, seed: int) -> float:
    """Distance from the whole-sample solution after exactly one epoch
    started there (isolates the accumulated per-epoch gradient noise).

    M=1 degenerates to full-sample gradient descent for either method, whose
    single batch holds the whole-sample moments.
    """
    if method not in ("fmgd", "smgd"):
        raise ValueError("q2_epoch_error compares fmgd and smgd")
    ref = ols(data)
    src = _MemorySource(data)
    if M == 1:
        idx = np.arange(data.N, dtype=np.int64).reshape(1, -1)
        plan_batches = idx
    elif method == "fmgd":
        plan_batches = make_fixed(data.N, M, seed).batches
    else:
        plan_batches = make_sampled(data.N, M, data.N // M, seed, epoch=1).batches
    Xs, Ys = src.gather(plan_batches)
    Mb, n = plan_batches.shape
    sxx, sxy = _stats_stack(Xs, Ys, Mb, n)
    theta = ref.copy()
    status = ls_epoch(sxx, sxy, theta, float(alpha), None)
    if status != 0:
        raise FloatingPointError("one-epoch probe diverged")
    return float(np.linalg.norm(theta - ref))


def trajectory_to_csv(traj: RunTrajectory, path) -> None:
    """Columns: epoch, batch, alpha, numerical_error, estimation_error,
    wall_time_ns.  Per-batch recordings emit M rows per epoch with the
    epoch-level columns on the last batch row.  wall_time_ns is
    non-deterministic by nature."""
    per_batch = traj.iterates is not None and traj.iterates.ndim == 3
    M = traj.last_epoch.shape[0]
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "batch", "alpha", "numerical_error",
                         "estimation_error", "wall_time_ns"])
        for t in range(traj.epochs_completed):
            rows = range(M) if per_batch else [M - 1]
            for m in rows:
                last = m == M - 1
                writer.writerow([
                    t + 1,
                    m + 1,
                    repr(float(traj.alphas[t])),
                    repr(float(traj.numerical_error[t])) if last and traj.numerical_error is not None else "",
                    repr(float(traj.estimation_error[t])) if last and traj.estimation_error is not None else "",
                    int(traj.wall_times_ns[t]) if last else "",
                ])
