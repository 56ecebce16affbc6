"""Mini-batch index plans: fixed partitions, per-epoch reshuffles, and
with-replacement sampling.

Seeding: each plan draws from the Philox stream keyed by a documented
entropy tuple ``(seed, stream tag, epoch)``, so plans are pure functions of
(seed, epoch).  Indices are 0-based.
"""

from dataclasses import dataclass

import numpy as np

from .datagen import stream_rng

REGIMES = ("fixed", "shuffled", "sampled")

_FIXED_STREAM = 21
_SHUFFLED_STREAM = 22
_SAMPLED_STREAM = 23


@dataclass(frozen=True)
class PartitionPlan:
    """An epoch's batches as an (M, n) array of row indices."""

    batches: np.ndarray
    regime: str
    seed: int
    epoch: int

    @property
    def M(self) -> int:
        return self.batches.shape[0]

    @property
    def n(self) -> int:
        return self.batches.shape[1]


def _check_divisible(N: int, M: int) -> int:
    if M < 1 or N < 1:
        raise ValueError("N and M must be positive")
    if N % M != 0:
        raise ValueError(f"M={M} does not divide N={N}; batch sizes must be equal")
    return N // M


def make_fixed(N: int, M: int, seed: int) -> PartitionPlan:
    """One seeded shuffle cut into M equal blocks; identical for every epoch."""
    n = _check_divisible(N, M)
    perm = stream_rng(seed, _FIXED_STREAM, 0).permutation(N)
    return PartitionPlan(batches=perm.reshape(M, n), regime="fixed", seed=seed, epoch=0)


def make_shuffled(N: int, M: int, seed: int, epoch: int) -> PartitionPlan:
    """A fresh disjoint cover per epoch, keyed by (seed, epoch)."""
    n = _check_divisible(N, M)
    perm = stream_rng(seed, _SHUFFLED_STREAM, epoch).permutation(N)
    return PartitionPlan(batches=perm.reshape(M, n), regime="shuffled", seed=seed, epoch=epoch)


def make_sampled(N: int, M: int, n: int, seed: int, epoch: int) -> PartitionPlan:
    """M batches of n uniform draws with replacement, keyed by (seed, epoch)."""
    if N < 1 or M < 1 or n < 1:
        raise ValueError("N, M and n must be positive")
    draws = stream_rng(seed, _SAMPLED_STREAM, epoch).integers(0, N, size=(M, n))
    return PartitionPlan(batches=draws.astype(np.int64), regime="sampled", seed=seed, epoch=epoch)


def write_manifest(plan: PartitionPlan, path) -> None:
    """Audit format: one line per batch, comma-separated 0-based indices."""
    with open(path, "w", encoding="ascii") as fh:
        for row in plan.batches:
            fh.write(",".join(str(int(i)) for i in row))
            fh.write("\n")


def read_manifest(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        rows = [[int(tok) for tok in line.strip().split(",")] for line in fh if line.strip()]
    return np.asarray(rows, dtype=np.int64)
