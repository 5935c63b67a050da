"""Noise-scale estimation and confidence intervals for debiased targets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .data import Dataset


@dataclass(frozen=True)
class ConfidenceInterval:
    """Symmetric (1 - level... ) interval: center +- z_{alpha/2} sd / sqrt(n).

    `level` stores alpha; sd_used is the standard-deviation factor before
    the 1/sqrt(n) scaling. variant records whether the sub-Gaussian floor
    was available (and its c).
    """

    lower: float
    upper: float
    level: float
    center: float
    sd_used: float
    variant: str = "gaussian"
    c: float = 0.0

    def __post_init__(self):
        if not self.lower <= self.center <= self.upper:
            raise ValueError("interval must contain its center")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def estimate_sigma(first: Dataset, beta_hat: np.ndarray) -> float:
    """Root mean squared residual of the pilot on the first split."""
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    if len(beta_hat) != first.p:
        raise ValueError("beta_hat length must equal p")
    resid = first.y - first.X @ beta_hat
    return float(np.linalg.norm(resid)) / np.sqrt(first.n)


def _sd_factor(eta, gram, sigma_hat, form):
    eta = np.asarray(eta, dtype=float).ravel()
    q = float(eta @ (gram @ eta))
    if q < -1e-12:
        raise ValueError(f"quadratic form eta' Gram eta = {q:g} is negative")
    q = max(q, 0.0)
    if form == "half_power":
        return sigma_hat * np.sqrt(q)
    if form == "full_power":
        return sigma_hat * float(np.linalg.norm(gram @ eta))
    raise ValueError(f"unknown interval form {form!r}")


def confidence_interval(
    beta_d: float,
    eta: np.ndarray,
    gram: np.ndarray,
    sigma_hat: float,
    alpha: float,
    n: int,
    form: str = "half_power",
) -> ConfidenceInterval:
    """(1 - alpha) interval around the debiased value.

    "half_power" scales by sigma_hat * sqrt(eta' Gram eta) (the limiting
    standard deviation of the debiased statistic); "full_power" uses
    sigma_hat * ||Gram eta|| instead. The two coincide when Gram is the
    identity.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    sd = _sd_factor(eta, gram, sigma_hat, form)
    hw = norm.ppf(1.0 - alpha / 2.0) * sd / np.sqrt(n)
    return ConfidenceInterval(
        lower=beta_d - hw,
        upper=beta_d + hw,
        level=alpha,
        center=beta_d,
        sd_used=sd,
    )


def confidence_interval_subgaussian(
    beta_d: float,
    eta: np.ndarray,
    gram: np.ndarray,
    sigma_hat: float,
    alpha: float,
    n: int,
    c: float,
) -> ConfidenceInterval:
    """Interval for sub-Gaussian noise: the sd factor is floored at c.

    sd = sigma_hat * max(sqrt(eta' Gram eta), c), keeping the width of
    order 1/sqrt(n) even when the direction's variance is tiny.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if c <= 0:
        raise ValueError("c must be > 0")
    eta = np.asarray(eta, dtype=float).ravel()
    q = float(eta @ (gram @ eta))
    if q < -1e-12:
        raise ValueError(f"quadratic form eta' Gram eta = {q:g} is negative")
    sd = sigma_hat * max(np.sqrt(max(q, 0.0)), c)
    hw = norm.ppf(1.0 - alpha / 2.0) * sd / np.sqrt(n)
    return ConfidenceInterval(
        lower=beta_d - hw,
        upper=beta_d + hw,
        level=alpha,
        center=beta_d,
        sd_used=sd,
        variant="subgaussian_floored",
        c=c,
    )
