"""Synthetic regression datasets with seeded, replayable generation.

All randomness flows through the 64-bit counter-based Philox generator,
keyed by ``numpy.random.SeedSequence`` over an entropy tuple.  The design
matrix and the response use distinct, documented stream tags so that the
same base seed yields independent streams.  Outputs are bit-reproducible
for a fixed NumPy version.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd

MODELS = ("linear", "logistic", "poisson")

# stream tags appended to the seed entropy
_DESIGN_STREAM = 11
_RESPONSE_STREAM = 13


def stream_rng(*entropy: int) -> np.random.Generator:
    """Philox generator keyed by an entropy tuple (the package-wide RNG)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class DataGenSpec:
    """Recipe for one synthetic dataset."""

    N: int
    p: int
    model: str = "linear"
    theta_true: np.ndarray = None
    noise_sd: float = 1.0
    rho: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.N < 1 or self.p < 1:
            raise ValueError("N and p must be positive")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.model == "linear" and not self.noise_sd > 0:
            raise ValueError("noise_sd must be positive for the linear model")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        theta = self.theta_true
        if theta is None:
            theta = np.full(self.p, _DEFAULT_THETA[self.model])
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.p,):
            raise ValueError("theta_true must have length p")
        object.__setattr__(self, "theta_true", theta)


_DEFAULT_THETA = {"linear": 1.0, "logistic": 0.1, "poisson": 0.02}


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    spec: DataGenSpec | None = None

    def __post_init__(self):
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValueError("X and Y row counts differ")

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def make_ar_covariance(p: int, rho: float) -> np.ndarray:
    """Autoregressive covariance: entry (j, k) = rho**|j-k|, unit diagonal."""
    if p < 1:
        raise ValueError("p must be positive")
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def sample_design(N: int, sigma, seed: int) -> np.ndarray:
    """Draw N i.i.d. rows from N(0, sigma) via the Cholesky factor."""
    sigma = np.asarray(sigma, dtype=np.float64)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance is not positive definite") from exc
    rng = stream_rng(seed, _DESIGN_STREAM)
    z = rng.standard_normal((N, sigma.shape[0]))
    return z @ chol.T


def gen_response(X: np.ndarray, spec: DataGenSpec) -> np.ndarray:
    """Generate the response vector for a realized design under ``spec``."""
    theta = spec.theta_true
    if X.shape[1] != theta.shape[0]:
        raise ValueError("design width does not match theta_true")
    eta = X @ theta
    rng = stream_rng(spec.seed, _RESPONSE_STREAM)
    if spec.model == "linear":
        return eta + spec.noise_sd * rng.standard_normal(X.shape[0])
    if spec.model == "logistic":
        prob = 1.0 / (1.0 + np.exp(-eta))
        return (rng.random(X.shape[0]) < prob).astype(np.float64)
    if spec.model == "poisson":
        return rng.poisson(np.exp(eta)).astype(np.float64)
    raise ValueError(f"unknown model {spec.model!r}")


def make_dataset(spec: DataGenSpec) -> Dataset:
    sigma = make_ar_covariance(spec.p, spec.rho)
    X = sample_design(spec.N, sigma, spec.seed)
    Y = gen_response(X, spec)
    return Dataset(X=X, Y=Y, spec=spec)


def preset(model: str, N: int = 5000, p: int = 50, seed: int = 0, **kw) -> DataGenSpec:
    """Named defaults: linear unit coefficients with unit noise, logistic
    0.1-coefficients, Poisson 0.02-coefficients, AR(0.5) design."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    return DataGenSpec(N=N, p=p, model=model, seed=seed, **kw)


def save_csv(data: Dataset, path) -> None:
    """Write the dataset as CSV: header x1..xp,y; floats at 17 significant
    digits (lossless float64 round trip)."""
    cols = [f"x{j + 1}" for j in range(data.p)] + ["y"]
    frame = pd.DataFrame(np.column_stack([data.X, data.Y]), columns=cols)
    frame.to_csv(path, index=False, float_format="%.17g")


def load_csv(path, spec: DataGenSpec | None = None) -> Dataset:
    """Read a dataset written by save_csv (Y in the last column).

    Values parse bit-exactly (C float parser, correctly rounded), so a
    save/load round trip reproduces the arrays.
    """
    values = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=np.float64)
    if values.shape[1] < 2:
        raise ValueError("CSV must hold at least one predictor column and a response")
    return Dataset(X=np.ascontiguousarray(values[:, :-1]), Y=values[:, -1].copy(), spec=spec)
