"""mgdlab: a laboratory for mini-batch gradient descent on linear and
generalized linear models.

The package covers four optimizer variants (full-batch, fixed mini-batches,
per-epoch reshuffled mini-batches, with-replacement sampling), the exact
linear dynamic-system analysis of the fixed-partition cycle (stable
solution, contraction factor, asymptotic moments, evaluable error bounds),
seeded synthetic data generation, replicated simulation experiments, and a
packaged on-disk mini-batch store with an I/O benchmark.
"""

__version__ = "0.1.0"

from .datagen import DataGenSpec, Dataset, make_ar_covariance, make_dataset
from .dynsys import (
    ContractionSet,
    StableSolution,
    asymptotic_moments,
    build_omega,
    contraction_set,
    cycle_matrix,
    eval_bounds,
    stable_solution,
)
from .engine import RunConfig, RunTrajectory, precompute_batch_stats, q2_epoch_error, run
from .kernels import backend_name
from .linalg import eig_sym, matvec, solve_linear, spectral_radius
from .losses import BatchStats, batch_stats, grad, newton_mle, ols
from .partitions import PartitionPlan, make_fixed, make_sampled, make_shuffled
from .schedules import Schedule, parse_schedule, rate_at, satisfies_convergence_conditions

__all__ = [
    "__version__",
    "DataGenSpec", "Dataset", "make_ar_covariance", "make_dataset",
    "ContractionSet", "StableSolution", "asymptotic_moments", "build_omega",
    "contraction_set", "cycle_matrix", "eval_bounds", "stable_solution",
    "RunConfig", "RunTrajectory", "precompute_batch_stats", "q2_epoch_error", "run",
    "backend_name",
    "eig_sym", "matvec", "solve_linear", "spectral_radius",
    "BatchStats", "batch_stats", "grad", "newton_mle", "ols",
    "PartitionPlan", "make_fixed", "make_sampled", "make_shuffled",
    "Schedule", "parse_schedule", "rate_at", "satisfies_convergence_conditions",
]
