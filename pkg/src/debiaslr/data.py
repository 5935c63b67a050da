"""Regression samples: synthetic generation, splitting, Gram matrices, CSV I/O."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COVARIANCE_KINDS = ("identity", "toeplitz", "bounded_eig")
NOISE_KINDS = ("gaussian", "rademacher", "uniform")


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Dataset:
    """A regression sample: design matrix X (n x p) and response y (length n)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(np.atleast_2d(self.X)))
        object.__setattr__(self, "y", _frozen(np.asarray(self.y, dtype=float).ravel()))
        n, p = self.X.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got X of shape {self.X.shape}")
        if len(self.y) != n:
            raise ValueError(f"X has {n} rows but y has length {len(self.y)}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class SplitDataset:
    """Two disjoint equal-size halves of a parent sample."""

    first: Dataset
    second: Dataset

    def __post_init__(self):
        if self.first.p != self.second.p:
            raise ValueError("halves disagree on column count")
        if self.first.n != self.second.n:
            raise ValueError("halves must have equal row counts")


@dataclass(frozen=True)
class CovarianceSpec:
    """Population covariance for the predictors.

    kind is one of "identity", "toeplitz" (entries rho^|i-j|) or
    "bounded_eig" (random rotation with eigenvalues drawn uniformly from
    [lambda_min, lambda_max], controlled by seed).
    """

    kind: str
    p: int
    rho: float = 0.0
    lambda_min: float = 1.0
    lambda_max: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in COVARIANCE_KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.kind == "toeplitz" and not 0.0 < self.rho < 1.0:
            raise ValueError("toeplitz rho must lie in (0, 1)")
        if self.kind == "bounded_eig":
            if self.lambda_min <= 0:
                raise ValueError("lambda_min must be > 0")
            if self.lambda_max < self.lambda_min:
                raise ValueError("lambda_max must be >= lambda_min")


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean noise with standard deviation sigma.

    All kinds are sub-Gaussian: "gaussian" is N(0, sigma^2), "rademacher"
    takes values +-sigma with equal probability, "uniform" is uniform on
    [-sigma*sqrt(3), sigma*sqrt(3)].
    """

    kind: str = "gaussian"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def make_covariance(spec: CovarianceSpec) -> np.ndarray:
    """Materialize the p x p covariance matrix described by `spec`.

    Returns a symmetric positive definite matrix. The bounded_eig kind is
    built as Q diag(d) Q^T with Q a seeded random orthogonal matrix and d
    uniform on [lambda_min, lambda_max], so its spectrum is bounded by
    construction.
    """
    p = spec.p
    if spec.kind == "identity":
        return np.eye(p)
    if spec.kind == "toeplitz":
        idx = np.arange(p)
        return spec.rho ** np.abs(idx[:, None] - idx[None, :])
    rng = np.random.default_rng(spec.seed)
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    q = q * np.sign(np.diag(r))  # fix the sign convention so Q is unique
    d = rng.uniform(spec.lambda_min, spec.lambda_max, size=p)
    sigma = (q * d) @ q.T
    return (sigma + sigma.T) / 2.0


def draw_noise(noise: NoiseSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. noise values from the given spec."""
    s = noise.sigma
    if noise.kind == "gaussian":
        return s * rng.standard_normal(n)
    if noise.kind == "rademacher":
        return s * (2.0 * rng.integers(0, 2, size=n) - 1.0)
    return rng.uniform(-s * np.sqrt(3.0), s * np.sqrt(3.0), size=n)


def generate_dataset(
    beta_star: np.ndarray,
    cov: CovarianceSpec,
    noise: NoiseSpec,
    n: int,
    seed: int,
) -> Dataset:
    """Draw a sample of size n from y = X beta_star + eps.

    Rows of X are i.i.d. zero-mean Gaussian with covariance taken from
    `make_covariance(cov)`; eps is i.i.d. from `noise`. The same seed
    reproduces the sample bit for bit.
    """
    beta_star = np.asarray(beta_star, dtype=float).ravel()
    if len(beta_star) != cov.p:
        raise ValueError(f"beta_star has length {len(beta_star)}, covariance has p={cov.p}")
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, cov.p))
    if cov.kind == "identity":
        X = z
    else:
        chol = np.linalg.cholesky(make_covariance(cov))
        X = z @ chol.T
    eps = draw_noise(noise, n, rng)
    return Dataset(X=X, y=X @ beta_star + eps)


def split_sample(d: Dataset, seed: int) -> SplitDataset:
    """Randomly split a sample into two disjoint equal-size halves.

    If the row count is odd, one row (chosen by the seeded shuffle) is
    dropped. Deterministic under a fixed seed.
    """
    if d.n < 4:
        raise ValueError("need at least 4 rows to split")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(d.n)
    half = d.n // 2
    idx1 = np.sort(perm[:half])
    idx2 = np.sort(perm[half : 2 * half])
    return SplitDataset(
        first=Dataset(X=d.X[idx1], y=d.y[idx1]),
        second=Dataset(X=d.X[idx2], y=d.y[idx2]),
    )


def gram_matrix(X: np.ndarray) -> np.ndarray:
    """Empirical Gram matrix X^T X / n."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.size == 0:
        raise ValueError("empty design matrix")
    g = X.T @ X / X.shape[0]
    return (g + g.T) / 2.0


def save_dataset_csv(d: Dataset, path) -> None:
    """Write a dataset as CSV with header `y,x1,...,xp`.

    Floats are written with shortest round-trip formatting, so reading the
    file back reproduces the sample exactly.
    """
    with open(path, "w") as fh:
        fh.write("y," + ",".join(f"x{j + 1}" for j in range(d.p)) + "\n")
        for i in range(d.n):
            row = [repr(float(d.y[i]))] + [repr(float(v)) for v in d.X[i]]
            fh.write(",".join(row) + "\n")


def load_dataset_csv(path, center: bool = False) -> Dataset:
    """Read a dataset written by `save_dataset_csv`.

    With center=True the predictor columns are shifted by their column
    means (real-data ingestion; generated predictors are already
    zero-mean and should be loaded with center=False).
    """
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "y":
            raise ValueError(f"{path}: expected header starting with 'y'")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array(rows, dtype=float)
    y, X = data[:, 0], data[:, 1:]
    if X.shape[1] != len(header) - 1:
        raise ValueError(f"{path}: header names {len(header) - 1} predictors, rows disagree")
    if center:
        X = X - X.mean(axis=0)
    return Dataset(X=X, y=y)
