"""Step 2: the projection direction eta via projected-subgradient descent,
the debiasing formula, and the known-covariance baseline.

The direction minimizes ||Gram^{1/2} eta|| subject to the cone-restricted
sup constraint sup_{u in T cap S} |(eta' Gram - target') u| <= lambda,
where lambda = rho * width / sqrt(n). Feasibility and subgradients both
reduce to tangent-cone projections of w = Gram eta - target: the supremum
over T cap S of w'u equals ||Pi_T(w)|| and is attained at the normalized
projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cones import TangentConeAt, project_negative_cone, project_tangent_cone
from .data import Dataset

_PHI_GUARD = 1e-14  # below this projection norm a branch carries no direction


class EtaInfeasibleError(RuntimeError):
    """No feasible direction was found within the iteration budget."""

    def __init__(self, message: str, rho_final: float):
        super().__init__(message)
        self.rho_final = rho_final


@dataclass(frozen=True)
class EtaConfig:
    """Solver knobs for the direction search.

    rho starts the constraint level and doubles (rho_growth) every
    feasibility_patience iterations while no feasible point has been seen,
    capped at rho_cap. Step sizes follow step_rule: "inverse_sqrt" uses
    step_scale / sqrt(iter); "constant" uses step_scale each iteration.
    rho_prime only matters for the sub-Gaussian variant.
    """

    rho: float = 1.0
    rho_growth: float = 2.0
    rho_prime: float = 1.0
    step_rule: str = "inverse_sqrt"
    step_scale: float = 1.0
    max_iters: int = 10_000
    feasibility_patience: int = 2_000
    rho_cap: float = 2.0**15
    eta0: np.ndarray | None = None

    def __post_init__(self):
        if self.rho <= 0 or self.rho_prime <= 0:
            raise ValueError("rho and rho_prime must be > 0")
        if self.rho_growth <= 1:
            raise ValueError("rho_growth must be > 1")
        if self.step_rule not in ("inverse_sqrt", "constant"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.step_scale <= 0:
            raise ValueError("step_scale must be > 0")
        if self.max_iters < 1 or self.feasibility_patience < 1:
            raise ValueError("max_iters and feasibility_patience must be >= 1")

    def step(self, k: int) -> float:
        if self.step_rule == "constant":
            return self.step_scale
        return self.step_scale / np.sqrt(k)


@dataclass(frozen=True)
class EtaResult:
    """A feasible direction: eta, its objective ||Gram^{1/2} eta||, the
    constraint level lam = rho * width / sqrt(n) it satisfies, and the
    iteration/rho bookkeeping."""

    eta: np.ndarray
    objective: float
    lam: float
    feasible: bool
    iterations: int
    rho_final: float


@dataclass(frozen=True)
class PsiEval:
    """One evaluation of the constraint function psi at eta.

    value = max(||Pi_T(w)||, ||Pi_{-T}(w)||) - lam with w = Gram eta -
    target. phi0/phi1 are the normalized projections (None when the
    projection vanishes); branch picks the subgradient side by the sign
    test w'(phi0 - phi1) < 0 and is None when both branches vanish.
    """

    value: float
    phi0: np.ndarray | None
    phi1: np.ndarray | None
    branch: int | None


def psi(
    eta: np.ndarray,
    gram: np.ndarray,
    target: np.ndarray,
    cone: TangentConeAt,
    lam: float,
) -> PsiEval:
    """Constraint function and subgradient data at eta."""
    w = gram @ eta - target
    p_plus = project_tangent_cone(w, cone)
    p_minus = project_negative_cone(w, cone)
    n0 = float(np.linalg.norm(p_plus))
    n1 = float(np.linalg.norm(p_minus))
    phi0 = p_plus / n0 if n0 >= _PHI_GUARD else None
    phi1 = p_minus / n1 if n1 >= _PHI_GUARD else None
    if phi0 is None and phi1 is None:
        return PsiEval(value=-lam, phi0=None, phi1=None, branch=None)
    if phi0 is None:
        return PsiEval(value=n1 - lam, phi0=None, phi1=phi1, branch=1)
    if phi1 is None:
        return PsiEval(value=n0 - lam, phi0=phi0, phi1=None, branch=0)
    branch = 1 if float(w @ (phi0 - phi1)) < 0.0 else 0
    return PsiEval(value=max(n0, n1) - lam, phi0=phi0, phi1=phi1, branch=branch)


def _objective(eta: np.ndarray, gram: np.ndarray) -> float:
    return float(np.sqrt(max(eta @ (gram @ eta), 0.0)))


class _Trace:
    def __init__(self, path):
        self.fh = open(path, "w") if path is not None else None
        if self.fh:
            self.fh.write("iter,objective,psi,rho\n")

    def row(self, k, obj, psi_val, rho):
        if self.fh:
            self.fh.write(f"{k},{obj!r},{psi_val!r},{rho!r}\n")

    def close(self):
        if self.fh:
            self.fh.close()


def solve_eta(
    gram: np.ndarray,
    target: np.ndarray,
    cone: TangentConeAt,
    width: float,
    n: int,
    cfg: EtaConfig = EtaConfig(),
    trace=None,
) -> EtaResult:
    """Projected-subgradient search for the minimum-variance direction.

    Feasible iterates step along the objective gradient Gram eta /
    ||Gram^{1/2} eta|| (eta = 0 feasible terminates immediately: it is
    optimal); infeasible iterates step along Gram phi_branch. The best
    feasible iterate is tracked and returned. While no feasible point has
    been seen, rho doubles every feasibility_patience iterations.

    Raises EtaInfeasibleError (carrying the final rho) when max_iters pass
    without any feasible point.
    """
    if width <= 0:
        raise ValueError("width must be > 0")
    target = np.asarray(target, dtype=float).ravel()
    rho = cfg.rho
    lam = rho * width / np.sqrt(n)
    eta = np.zeros(len(target)) if cfg.eta0 is None else np.asarray(cfg.eta0, dtype=float).copy()

    best_eta = None
    best_obj = np.inf
    streak = 0
    tr = _Trace(trace)
    k = 0
    try:
        for k in range(1, cfg.max_iters + 1):
            ev = psi(eta, gram, target, cone, lam)
            if ev.value <= 0.0:
                obj = _objective(eta, gram)
                if obj <= best_obj:
                    best_eta, best_obj = eta.copy(), obj
                tr.row(k, obj, ev.value, rho)
                if obj <= _PHI_GUARD:
                    break  # zero-objective feasible point is globally optimal
                g = (gram @ eta) / obj
            else:
                tr.row(k, np.nan, ev.value, rho)
                if best_eta is None:
                    streak += 1
                    if streak >= cfg.feasibility_patience and rho * cfg.rho_growth <= cfg.rho_cap:
                        rho *= cfg.rho_growth
                        lam = rho * width / np.sqrt(n)
                        streak = 0
                phi = ev.phi0 if ev.branch == 0 else ev.phi1
                g = gram @ phi
            eta = eta - cfg.step(k) * g
    finally:
        tr.close()

    if best_eta is None:
        raise EtaInfeasibleError(
            f"no feasible direction after {cfg.max_iters} iterations (rho={rho:g})",
            rho_final=rho,
        )
    return EtaResult(
        eta=best_eta,
        objective=best_obj,
        lam=lam,
        feasible=True,
        iterations=k,
        rho_final=rho,
    )


def solve_eta_subgaussian(
    gram: np.ndarray,
    target: np.ndarray,
    cone: TangentConeAt,
    width: float,
    n: int,
    X_second: np.ndarray,
    cfg: EtaConfig = EtaConfig(),
    trace=None,
) -> EtaResult:
    """Direction search with the extra row-wise constraint
    ||X_second eta||_inf <= rho' sqrt(log n) for sub-Gaussian noise.

    A violated sup constraint takes priority; otherwise the row with the
    largest |x_i' eta| supplies the subgradient sign(x_i*' eta) x_i*.
    While no feasible point has been seen, the constraint whose violation
    is observed when patience runs out has its level doubled.
    """
    if width <= 0:
        raise ValueError("width must be > 0")
    target = np.asarray(target, dtype=float).ravel()
    X_second = np.atleast_2d(np.asarray(X_second, dtype=float))
    rho, rho_prime = cfg.rho, cfg.rho_prime
    sqrt_log_n = np.sqrt(np.log(n))
    lam = rho * width / np.sqrt(n)
    lam2 = rho_prime * sqrt_log_n
    eta = np.zeros(len(target)) if cfg.eta0 is None else np.asarray(cfg.eta0, dtype=float).copy()

    best_eta = None
    best_obj = np.inf
    streak = 0
    tr = _Trace(trace)
    k = 0
    try:
        for k in range(1, cfg.max_iters + 1):
            ev = psi(eta, gram, target, cone, lam)
            rows = X_second @ eta
            i_star = int(np.argmax(np.abs(rows)))
            psi_prime = float(np.abs(rows[i_star])) - lam2
            if ev.value > 0.0:
                tr.row(k, np.nan, ev.value, rho)
                phi = ev.phi0 if ev.branch == 0 else ev.phi1
                g = gram @ phi
            elif psi_prime > 0.0:
                tr.row(k, np.nan, psi_prime, rho)
                g = np.sign(rows[i_star]) * X_second[i_star]
            else:
                obj = _objective(eta, gram)
                if obj <= best_obj:
                    best_eta, best_obj = eta.copy(), obj
                tr.row(k, obj, ev.value, rho)
                if obj <= _PHI_GUARD:
                    break
                g = (gram @ eta) / obj
            if best_eta is None and (ev.value > 0.0 or psi_prime > 0.0):
                streak += 1
                if streak >= cfg.feasibility_patience:
                    if ev.value > 0.0 and rho * cfg.rho_growth <= cfg.rho_cap:
                        rho *= cfg.rho_growth
                        lam = rho * width / np.sqrt(n)
                    elif psi_prime > 0.0 and rho_prime * cfg.rho_growth <= cfg.rho_cap:
                        rho_prime *= cfg.rho_growth
                        lam2 = rho_prime * sqrt_log_n
                    streak = 0
            eta = eta - cfg.step(k) * g
    finally:
        tr.close()

    if best_eta is None:
        raise EtaInfeasibleError(
            f"no feasible direction after {cfg.max_iters} iterations "
            f"(rho={rho:g}, rho'={rho_prime:g})",
            rho_final=rho,
        )
    return EtaResult(
        eta=best_eta,
        objective=best_obj,
        lam=lam,
        feasible=True,
        iterations=k,
        rho_final=rho,
    )


def debias_target(v: np.ndarray, eta: np.ndarray, second: Dataset, target: np.ndarray) -> float:
    """Debiased contrast value target'v + eta' X'(y - X v) / n on the
    second split."""
    v = np.asarray(v, dtype=float).ravel()
    eta = np.asarray(eta, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    resid = second.y - second.X @ v
    return float(target @ v + eta @ (second.X.T @ resid) / second.n)


def debias_known_sigma(beta_hat: np.ndarray, sigma_inv: np.ndarray, second: Dataset) -> np.ndarray:
    """Full-vector debiasing with the true inverse covariance:
    beta_hat + Sigma^{-1} X'(y - X beta_hat) / n. Oracle baseline."""
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    resid = second.y - second.X @ beta_hat
    return beta_hat + sigma_inv @ (second.X.T @ resid) / second.n


@dataclass(frozen=True)
class DeltaDiagnostic:
    """Simulation-only bias term sqrt(n)(eta' Gram - target')(beta* - v)
    and its feasibility bound lam * sqrt(n) * ||beta* - v||."""

    delta: float
    bound: float


@dataclass(frozen=True)
class DebiasOutput:
    """A debiased target with its direction and spread.

    sd_hat is sqrt(eta' Gram eta), the standard-deviation factor before
    the noise scale and 1/sqrt(n); delta_diag is present only when the
    true coefficient vector was supplied (simulation mode).
    """

    target: np.ndarray
    value: float
    eta: EtaResult
    sd_hat: float
    delta_diag: DeltaDiagnostic | None = None


def debias_output(
    v: np.ndarray,
    res: EtaResult,
    second: Dataset,
    target: np.ndarray,
    gram: np.ndarray,
    beta_star: np.ndarray | None = None,
) -> DebiasOutput:
    """Assemble the debiased value and its metadata from a solved direction."""
    target = np.asarray(target, dtype=float).ravel()
    value = debias_target(v, res.eta, second, target)
    sd_hat = float(np.sqrt(max(res.eta @ (gram @ res.eta), 0.0)))
    diag = None
    if beta_star is not None:
        diag = delta_diagnostic(res.eta, gram, target, v, beta_star, second.n, res.lam)
    return DebiasOutput(target=target, value=value, eta=res, sd_hat=sd_hat, delta_diag=diag)


def delta_diagnostic(
    eta: np.ndarray,
    gram: np.ndarray,
    target: np.ndarray,
    v: np.ndarray,
    beta_star: np.ndarray,
    n: int,
    lam: float,
) -> DeltaDiagnostic:
    """Exact bias remainder of the debiased estimate when beta* is known."""
    eta = np.asarray(eta, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    diff = np.asarray(beta_star, dtype=float).ravel() - np.asarray(v, dtype=float).ravel()
    delta = float(np.sqrt(n) * ((gram @ eta - target) @ diff))
    bound = float(lam * np.sqrt(n) * np.linalg.norm(diff))
    return DeltaDiagnostic(delta=delta, bound=bound)
