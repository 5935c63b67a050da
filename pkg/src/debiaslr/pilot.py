"""Step-1 selection: turn a pilot fit into (v, constraint set, width bound).

Each routine trades the distance ||beta_hat - v|| against the width bound
of the tangent cone at v, over a finite candidate family: piece counts for
monotone cones, zero counts for the orthant, support sizes for l1 balls.
The sorted-l1 route instead maximizes ||v||_1 over a ball around beta_hat
and has a closed-form solution.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cones import (
    ConstraintModel,
    TangentConeAt,
    monotone_piece_errors,
    pieces_of,
    project_monotone,
    project_monotone_pieces,
)


@dataclass(frozen=True)
class PilotSelection:
    """Output of step 1: the pilot point v, its constraint set, the tangent
    cone descriptor at v, the (floored) width bound, and the criterion
    value that selected v."""

    v: np.ndarray
    model: ConstraintModel
    cone_at_v: TangentConeAt
    width: float
    objective: float


def width_floor(n: int) -> float:
    """Slowly diverging floor sqrt(log log max(n, 3)) applied to widths."""
    return float(np.sqrt(np.log(np.log(max(n, 3)))))


def _monotone_widths(p: int, ls: np.ndarray) -> np.ndarray:
    return np.sqrt(ls * np.log(np.e * p / ls))


def _select_monotone_core(u: np.ndarray, n: int) -> tuple:
    """Shared monotone/positive-monotone enumeration over piece counts."""
    p = len(u)
    errors = monotone_piece_errors(u)
    dists = np.sqrt(np.maximum(errors, 0.0))
    ls = np.arange(1, len(dists) + 1)
    criteria = dists + _monotone_widths(p, ls) / np.sqrt(n)
    l_hat = int(np.argmin(criteria)) + 1
    v = project_monotone_pieces(u, l_hat)
    width = max(float(_monotone_widths(p, np.array([l_hat]))[0]), width_floor(n))
    # recompute the distance from the reconstructed v: the DP's prefix-sum
    # costs can drift from it by cancellation at the 1e-8 level
    objective = float(np.linalg.norm(u - v)) + width / np.sqrt(n)
    return v, width, objective


def select_v_monotone(beta_hat: np.ndarray, n: int) -> PilotSelection:
    """Pick the piece count minimizing ||beta_hat - Pi_l(beta_hat)|| +
    sqrt((l/n) log(ep/l)) and return the corresponding projection.

    beta_hat may violate monotonicity by up to 1e-8 (solver noise); it is
    re-projected before the enumeration.
    """
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    if np.max(-np.diff(beta_hat), initial=0.0) > 1e-8:
        raise ValueError("beta_hat violates monotonicity beyond tolerance")
    u = project_monotone(beta_hat)
    v, width, objective = _select_monotone_core(u, n)
    return PilotSelection(
        v=v,
        model=ConstraintModel("monotone", p=len(v)),
        cone_at_v=TangentConeAt.monotone(pieces_of(v), p=len(v)),
        width=width,
        objective=objective,
    )


def select_v_positive_monotone(beta_hat: np.ndarray, n: int) -> PilotSelection:
    """Monotone selection restricted to nonnegative nondecreasing pilots.

    The first constant piece of v being exactly zero changes the tangent
    cone (its first block is a positive monotone cone), which the returned
    descriptor records.
    """
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    if np.min(beta_hat, initial=0.0) < -1e-8:
        raise ValueError("beta_hat has negative entries beyond tolerance")
    if np.max(-np.diff(beta_hat), initial=0.0) > 1e-8:
        raise ValueError("beta_hat violates monotonicity beyond tolerance")
    u = np.maximum(project_monotone(beta_hat), 0.0)
    v, width, objective = _select_monotone_core(u, n)
    return PilotSelection(
        v=v,
        model=ConstraintModel("positive_monotone", p=len(v)),
        cone_at_v=TangentConeAt.positive_monotone(pieces_of(v), first_piece_is_zero=(v[0] == 0.0)),
        width=width,
        objective=objective,
    )


def select_v_nonneg(beta_hat: np.ndarray, n: int) -> PilotSelection:
    """Zero out the s smallest entries, s chosen to minimize the distance
    plus the orthant width sqrt((p - s/2)/n). Ties in magnitude are
    zeroed lowest index first."""
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    if np.min(beta_hat, initial=0.0) < -1e-8:
        raise ValueError("beta_hat has negative entries beyond tolerance")
    beta_hat = np.maximum(beta_hat, 0.0)
    p = len(beta_hat)
    order = np.argsort(beta_hat, kind="stable")  # ascending, ties by index
    sq = np.concatenate([[0.0], np.cumsum(beta_hat[order] ** 2)])
    dists = np.sqrt(sq)
    s_grid = np.arange(p + 1)
    criteria = dists + np.sqrt((p - s_grid / 2.0) / n)
    s_hat = int(np.argmin(criteria))
    v = beta_hat.copy()
    v[order[:s_hat]] = 0.0
    width = max(float(np.sqrt(p - s_hat / 2.0)), width_floor(n))
    objective = float(dists[s_hat]) + width / np.sqrt(n)
    return PilotSelection(
        v=v,
        model=ConstraintModel("nonneg", p=p),
        cone_at_v=TangentConeAt.nonneg(np.flatnonzero(v == 0.0), p=p),
        width=width,
        objective=objective,
    )


def l1_sparse_projection(beta_hat: np.ndarray, s: int, Lambda: float) -> np.ndarray:
    """Projection of beta_hat onto {s-sparse vectors with l1 norm Lambda}.

    Keeps the s largest-magnitude entries (ties toward the lower index)
    and spreads the remaining l1 budget equally across them, away from
    zero.
    """
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    order = np.argsort(-np.abs(beta_hat), kind="stable")
    S = order[:s]
    top_sum = float(np.abs(beta_hat[S]).sum())
    add = (Lambda - top_sum) / s
    v = np.zeros_like(beta_hat)
    v[S] = beta_hat[S] + np.sign(beta_hat[S]) * add
    return v


def select_v_l1(beta_hat: np.ndarray, Lambda: float, n: int) -> PilotSelection:
    """Support-size selection on the l1 ball of radius Lambda.

    For each s in [1, ||beta_hat||_0], the candidate v_s redistributes the
    unused budget over the s largest entries; the winner minimizes
    ||beta_hat - v_s|| + sqrt(s log(ep/s) / n). The result sits exactly on
    the ball boundary.
    """
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    p = len(beta_hat)
    l1 = float(np.abs(beta_hat).sum())
    if l1 > Lambda + 1e-9 * max(1.0, Lambda):
        raise ValueError(f"Lambda={Lambda} is below ||beta_hat||_1={l1}")
    k0 = int(np.count_nonzero(beta_hat))
    if k0 == 0:
        raise ValueError("beta_hat is identically zero; no support to select")
    best = None
    for s in range(1, k0 + 1):
        v_s = l1_sparse_projection(beta_hat, s, Lambda)
        dist = float(np.linalg.norm(beta_hat - v_s))
        crit = dist + np.sqrt(s * np.log(np.e * p / s) / n)
        if best is None or crit < best[0]:
            best = (crit, s, v_s, dist)
    _, s_hat, v, dist = best
    support = np.flatnonzero(v != 0.0)
    width = max(float(np.sqrt(s_hat * np.log(np.e * p / s_hat))), width_floor(n))
    return PilotSelection(
        v=v,
        model=ConstraintModel("l1_ball", p=p, Lambda=Lambda),
        cone_at_v=TangentConeAt.l1_boundary(support, np.sign(v[support]), p=p),
        width=width,
        objective=dist + width / np.sqrt(n),
    )


def select_v_slope(beta_hat: np.ndarray, s_u: int, C: float, n: int) -> PilotSelection:
    """Adaptive-ball selection for sorted-l1 pilots with sparsity bound s_u.

    Maximizes ||v||_1 over s_u-sparse vectors within a radius
    C sqrt(s_u log(2ep/s_u) / n) of beta_hat: keep the s_u largest entries
    and push each away from zero by the slack c. The constraint set is the
    l1 ball of radius ||v||_1.
    """
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    p = len(beta_hat)
    if not 1 <= s_u <= p:
        raise ValueError("need 1 <= s_u <= p")
    radius_sq = C * C * s_u * np.log(2.0 * np.e * p / s_u) / n
    order = np.argsort(-np.abs(beta_hat), kind="stable")
    S = order[:s_u]
    tail_sq = float(np.sum(beta_hat[order[s_u:]] ** 2))
    radicand = (radius_sq - tail_sq) / s_u
    if radicand < 0:
        raise ValueError(
            "C is too small for this pilot: need "
            f"C >= sqrt(n * tail^2 / (s_u log(2ep/s_u))) = "
            f"{np.sqrt(n * tail_sq / (s_u * np.log(2.0 * np.e * p / s_u))):.6g}"
        )
    c = float(np.sqrt(radicand))
    signs = np.sign(beta_hat[S])
    signs[signs == 0.0] = 1.0  # zero entries gain +c; any sign attains the max
    v = np.zeros_like(beta_hat)
    v[S] = beta_hat[S] + signs * c
    support = np.flatnonzero(v != 0.0)
    if len(support) == 0:
        raise ValueError("selected pilot is identically zero; nothing to debias")
    s = len(support)
    width = max(float(np.sqrt(s * np.log(np.e * p / s))), width_floor(n))
    dist = float(np.linalg.norm(beta_hat - v))
    return PilotSelection(
        v=v,
        model=ConstraintModel("slope_ball", p=p, s_u=s_u, C=C),
        cone_at_v=TangentConeAt.l1_boundary(support, np.sign(v[support]), p=p),
        width=width,
        objective=dist + width / np.sqrt(n),
    )


def choose_C_slope(n: int, p: int, s_u: int, gamma: float) -> float:
    """Slack constant (sqrt(n) / (s_u log(ep/s_u)))^gamma for small gamma.

    Warns when s_u log(ep/s_u) >= sqrt(n): the resulting C falls below 1
    and the sparsity bound is too large for this sample size.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    arg = np.sqrt(n) / (s_u * np.log(np.e * p / s_u))
    if arg <= 1.0:
        warnings.warn(
            "s_u log(ep/s_u) >= sqrt(n): the slack constant falls below 1; "
            "consider a smaller sparsity bound",
            RuntimeWarning,
        )
    return float(arg**gamma)
