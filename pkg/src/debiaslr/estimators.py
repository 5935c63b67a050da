"""Pilot estimators: constrained least squares, constrained lasso, SLOPE,
and square-root SLOPE.

All fits are first-order methods on the scaled least-squares objective
(1/n)||y - X beta||^2, with projections (constrained variants) or the
sorted-l1 proximal map (SLOPE variants). They are deterministic given
their inputs and start from the zero vector, which is feasible for every
constraint set used here.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .cones import ConstraintModel, project_constraint, project_monotone
from .data import Dataset, gram_matrix


class ConvergenceWarning(UserWarning):
    """A fit hit max_iters before meeting its tolerance."""


class DegenerateFitError(RuntimeError):
    """Square-root SLOPE collapsed to a near-zero scale estimate."""


@dataclass(frozen=True)
class FitConfig:
    """Solver knobs shared by the pilot fits.

    step_size "auto" means 1 / (2 * lmax(Gram)), the inverse Lipschitz
    constant of the smooth part; tol is the relative objective change that
    stops the iteration.
    """

    max_iters: int = 50_000
    step_size: float | str = "auto"
    tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.step_size != "auto" and not self.step_size > 0:
            raise ValueError("step_size must be 'auto' or > 0")


@dataclass(frozen=True)
class FitInfo:
    converged: bool
    iterations: int
    objective: float
    stationarity: float


@dataclass(frozen=True)
class SlopeLambdas:
    """Nonincreasing sorted-l1 weights together with their constant A."""

    values: np.ndarray
    A: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", values)
        if np.any(values < 0):
            raise ValueError("lambda values must be >= 0")
        if np.any(np.diff(values) > 0):
            raise ValueError("lambda values must be nonincreasing")


def slope_lambda(p: int, n: int, sigma: float, A: float) -> SlopeLambdas:
    """Sorted-l1 weight sequence lambda_i = A sigma sqrt(log(2p/i)/n).

    For square-root SLOPE pass sigma = 1 (the scale is estimated jointly).
    """
    if A <= 0:
        raise ValueError("A must be > 0")
    i = np.arange(1, p + 1)
    return SlopeLambdas(values=A * sigma * np.sqrt(np.log(2.0 * p / i) / n), A=A)


def prox_sorted_l1(v: np.ndarray, lambdas: SlopeLambdas, h: float) -> np.ndarray:
    """Prox of the sorted-l1 norm with weights h * lambda.

    Solves argmin_x 0.5 ||x - v||^2 + h * sum_i lambda_i |x|_(i). Computed
    on the decreasing magnitudes: subtract the weights, pool to a
    nonincreasing sequence (isotonic regression on the reversed order),
    clip at zero, and restore signs and positions.
    """
    if h <= 0:
        raise ValueError("h must be > 0")
    v = np.asarray(v, dtype=float).ravel()
    sign = np.sign(v)
    mags = np.abs(v)
    order = np.argsort(-mags, kind="stable")
    diffs = mags[order] - h * lambdas.values
    pooled = project_monotone(diffs[::-1])[::-1]
    result_sorted = np.maximum(pooled, 0.0)
    out = np.empty_like(v)
    out[order] = result_sorted
    return out * sign


def _lmax_psd(G: np.ndarray) -> float:
    """Largest eigenvalue of a PSD matrix by power iteration."""
    p = G.shape[0]
    v = np.ones(p) / np.sqrt(p)
    lam = 0.0
    for _ in range(200):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v_new = w / nw
        lam_new = float(v_new @ (G @ v_new))
        if abs(lam_new - lam) <= 1e-13 * max(1.0, lam_new):
            lam = lam_new
            break
        v, lam = v_new, lam_new
    return lam * (1.0 + 1e-9)


def _quad_parts(d: Dataset):
    """Gram matrix, correlation vector, and response energy for the fits."""
    G = gram_matrix(d.X)
    b = d.X.T @ d.y / d.n
    c0 = float(d.y @ d.y) / d.n
    return G, b, c0


def _proximal_descent(G, b, c0, prox, penalty, cfg: FitConfig, beta0=None, what="fit"):
    """Shared loop: beta <- prox(beta - h * grad) on (1/n)||y - X beta||^2.

    `prox` maps (point, step) to the next iterate; `penalty` evaluates the
    nonsmooth part (zero for pure projections). Stops on small objective
    change relative to max(1, |objective|).
    """
    p = len(b)
    if cfg.step_size == "auto":
        lmax = _lmax_psd(G)
        if lmax <= 0.0:
            beta = prox(np.zeros(p), 1.0)
            return beta, FitInfo(True, 0, c0 + penalty(beta), 0.0)
        h = 1.0 / (2.0 * lmax)
    else:
        h = float(cfg.step_size)

    beta = prox(np.zeros(p), h) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    Gb = G @ beta
    obj = float(beta @ Gb) - 2.0 * float(b @ beta) + c0 + penalty(beta)
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        grad = 2.0 * (Gb - b)
        beta_new = prox(beta - h * grad, h)
        Gb = G @ beta_new
        obj_new = float(beta_new @ Gb) - 2.0 * float(b @ beta_new) + c0 + penalty(beta_new)
        step_norm = float(np.linalg.norm(beta_new - beta))
        beta = beta_new
        if abs(obj - obj_new) <= cfg.tol * max(1.0, abs(obj)):
            obj = obj_new
            converged = True
            break
        obj = obj_new
    stationarity = step_norm / h if it else 0.0
    if not converged:
        warnings.warn(
            f"{what}: max_iters={cfg.max_iters} reached "
            f"(last objective {obj:.6g}, stationarity {stationarity:.3g})",
            ConvergenceWarning,
        )
    return beta, FitInfo(converged, it, obj, stationarity)


def fit_constrained_ls(
    d: Dataset,
    model: ConstraintModel,
    cfg: FitConfig = FitConfig(),
    return_info: bool = False,
):
    """Least squares over a convex constraint set by projected gradient.

    Supports the cone variants and fixed-radius l1 balls. Non-convergence
    is reported with a ConvergenceWarning carrying the last iterate's
    stationarity residual; the last iterate is returned either way.
    """
    if model.variant == "slope_ball":
        raise ValueError("slope_ball is not a fittable constraint (its radius is adaptive)")
    G, b, c0 = _quad_parts(d)
    beta, info = _proximal_descent(
        G, b, c0,
        prox=lambda x, h: project_constraint(model, x),
        penalty=lambda x: 0.0,
        cfg=cfg,
        what=f"constrained LS ({model.variant})",
    )
    return (beta, info) if return_info else beta


def fit_constrained_lasso(
    d: Dataset,
    Lambda: float,
    cfg: FitConfig = FitConfig(),
    return_info: bool = False,
):
    """Least squares subject to ||beta||_1 <= Lambda.

    Projected gradient with the exact l1-ball projection; the feasible set
    (and hence the optimum) matches the classical positive/negative-part
    quadratic-program rewrite.
    """
    if Lambda < 0:
        raise ValueError("Lambda must be >= 0")
    model = ConstraintModel("l1_ball", p=d.p, Lambda=Lambda)
    return fit_constrained_ls(d, model, cfg, return_info)


def fit_slope(
    d: Dataset,
    lambdas: SlopeLambdas,
    cfg: FitConfig = FitConfig(),
    beta0: np.ndarray | None = None,
    return_info: bool = False,
):
    """SLOPE: proximal gradient on (1/n)||y - X beta||^2 + sorted-l1 penalty."""
    if len(lambdas.values) != d.p:
        raise ValueError("lambdas length must equal p")
    G, b, c0 = _quad_parts(d)
    lam = lambdas.values

    def penalty(x):
        return float(np.sort(np.abs(x))[::-1] @ lam)

    beta, info = _proximal_descent(
        G, b, c0,
        prox=lambda x, h: prox_sorted_l1(x, lambdas, h),
        penalty=penalty,
        cfg=cfg,
        beta0=beta0,
        what="SLOPE",
    )
    return (beta, info) if return_info else beta


def fit_sqrt_slope(
    d: Dataset,
    lambdas: SlopeLambdas,
    cfg: FitConfig = FitConfig(),
    return_info: bool = False,
):
    """Square-root SLOPE: joint scale and coefficient estimation.

    Alternates a SLOPE fit with weights sigma_hat * lambda and the residual
    scale update sigma_hat = ||y - X beta|| / sqrt(n), until neither moves
    by more than tol. `lambdas` should be built with sigma = 1.

    Returns (beta_hat, sigma_hat).
    """
    sigma_floor = 1e-8
    sigma = float(np.linalg.norm(d.y)) / np.sqrt(d.n)
    if sigma < sigma_floor:
        raise DegenerateFitError("response is (numerically) zero; scale is degenerate")
    G, b, c0 = _quad_parts(d)  # shared across the alternation rounds
    if cfg.step_size == "auto":
        lmax = _lmax_psd(G)
        if lmax > 0.0:
            cfg = replace(cfg, step_size=1.0 / (2.0 * lmax))
    beta = np.zeros(d.p)
    info = None
    lam = lambdas.values
    for _ in range(200):
        scaled = SlopeLambdas(values=sigma * lam, A=lambdas.A)
        beta_new, info = _proximal_descent(
            G, b, c0,
            prox=lambda x, h, s=scaled: prox_sorted_l1(x, s, h),
            penalty=lambda x, s=scaled: float(np.sort(np.abs(x))[::-1] @ s.values),
            cfg=cfg,
            beta0=beta,
            what="square-root SLOPE",
        )
        sigma_new = float(np.linalg.norm(d.y - d.X @ beta_new)) / np.sqrt(d.n)
        if sigma_new < sigma_floor:
            raise DegenerateFitError(
                f"scale estimate collapsed below {sigma_floor:g}; "
                "the sorted-l1 weights are too small for this sample"
            )
        moved = max(float(np.max(np.abs(beta_new - beta))), abs(sigma_new - sigma))
        beta, sigma = beta_new, sigma_new
        if moved <= cfg.tol * max(1.0, sigma):
            break
    else:
        warnings.warn("square-root SLOPE alternation did not settle", ConvergenceWarning)
    return (beta, sigma, info) if return_info else (beta, sigma)
