"""Constraint-set geometry: exact projections, tangent/normal cones, width bounds.

The constraint families are the monotone cone (nondecreasing vectors), the
positive monotone cone, the non-negative orthant, and l1 balls (fixed-radius
or built adaptively around a sorted-l1 pilot). Projections onto tangent
cones at a point drive the feasibility checks and subgradients of the
debiasing solver; every projection here is exact.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

MODEL_VARIANTS = ("monotone", "positive_monotone", "nonneg", "l1_ball", "slope_ball")
CONE_VARIANTS = ("monotone", "positive_monotone", "nonneg", "l1_boundary", "full_space")


@dataclass(frozen=True)
class ConstraintModel:
    """Which constraint set the pilot estimator lives in.

    l1_ball carries its radius `Lambda`; slope_ball carries the sparsity
    bound `s_u` and slack constant `C` used to construct the ball around a
    sorted-l1 pilot (its radius is only known once the pilot is selected).
    """

    variant: str
    p: int
    Lambda: float = 0.0
    s_u: int = 1
    C: float = 1.0

    def __post_init__(self):
        if self.variant not in MODEL_VARIANTS:
            raise ValueError(f"unknown constraint variant {self.variant!r}")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.variant == "l1_ball" and self.Lambda < 0:
            raise ValueError("Lambda must be >= 0")
        if self.variant == "slope_ball":
            if not 1 <= self.s_u <= self.p:
                raise ValueError("need 1 <= s_u <= p")
            if self.C <= 0:
                raise ValueError("C must be > 0")


@dataclass(frozen=True)
class TangentConeAt:
    """Descriptor of the tangent cone of a constraint set at a point v.

    monotone / positive_monotone: `pieces` holds the lengths of the
    constant pieces of v (first_piece_is_zero marks a leading zero piece
    of a positive monotone v). nonneg: `zero_set` holds the coordinates
    where v is zero. l1_boundary: `support` and `signs` describe v on the
    l1-ball boundary. full_space: v is interior, the cone is all of R^p.
    """

    variant: str
    p: int
    pieces: tuple = ()
    first_piece_is_zero: bool = False
    zero_set: tuple = ()
    support: tuple = ()
    signs: tuple = ()

    def __post_init__(self):
        if self.variant not in CONE_VARIANTS:
            raise ValueError(f"unknown cone variant {self.variant!r}")
        if self.variant in ("monotone", "positive_monotone"):
            if sum(self.pieces) != self.p or any(k < 1 for k in self.pieces):
                raise ValueError("piece lengths must be positive and sum to p")
        if self.variant == "nonneg":
            if any(not 0 <= i < self.p for i in self.zero_set):
                raise ValueError("zero_set indices out of range")
        if self.variant == "l1_boundary":
            if len(self.support) == 0:
                raise ValueError("l1 boundary cone needs a nonempty support")
            if len(self.signs) != len(self.support):
                raise ValueError("signs must match support")
            if any(s not in (-1.0, 1.0) for s in self.signs):
                raise ValueError("signs must be +-1")
            if any(not 0 <= i < self.p for i in self.support):
                raise ValueError("support indices out of range")

    @classmethod
    def monotone(cls, pieces, p=None):
        pieces = tuple(int(k) for k in pieces)
        return cls(variant="monotone", p=p if p is not None else sum(pieces), pieces=pieces)

    @classmethod
    def positive_monotone(cls, pieces, first_piece_is_zero):
        pieces = tuple(int(k) for k in pieces)
        return cls(
            variant="positive_monotone",
            p=sum(pieces),
            pieces=pieces,
            first_piece_is_zero=bool(first_piece_is_zero),
        )

    @classmethod
    def nonneg(cls, zero_set, p):
        return cls(variant="nonneg", p=p, zero_set=tuple(sorted(int(i) for i in zero_set)))

    @classmethod
    def l1_boundary(cls, support, signs, p):
        return cls(
            variant="l1_boundary",
            p=p,
            support=tuple(int(i) for i in support),
            signs=tuple(float(s) for s in signs),
        )

    @classmethod
    def full_space(cls, p):
        return cls(variant="full_space", p=p)


def project_monotone(u: np.ndarray) -> np.ndarray:
    """Euclidean projection onto nondecreasing vectors (PAVA).

    Pooled means are exact running averages (block sum over block length),
    so coordinates in the same pooled block come out bit-identical and
    means of adjacent blocks are strictly increasing.
    """
    u = np.asarray(u, dtype=float).ravel()
    sums: list[float] = []
    lens: list[int] = []
    for x in u:
        cs, cl = float(x), 1
        while sums and sums[-1] * cl >= cs * lens[-1]:
            cs += sums.pop()
            cl += lens.pop()
        sums.append(cs)
        lens.append(cl)
    out = np.empty(len(u))
    pos = 0
    for s, l in zip(sums, lens):
        out[pos : pos + l] = s / l
        pos += l
    return out


def project_positive_monotone(u: np.ndarray) -> np.ndarray:
    """Projection onto nondecreasing nonnegative vectors.

    Equals isotonic regression followed by clamping negatives at zero.
    """
    return np.maximum(project_monotone(u), 0.0)


def pieces_of(v: np.ndarray) -> tuple:
    """Lengths of the constant pieces of v (exact equality defines a piece)."""
    v = np.asarray(v, dtype=float).ravel()
    if len(v) == 0:
        return ()
    lengths = []
    run = 1
    for i in range(1, len(v)):
        if v[i] == v[i - 1]:
            run += 1
        else:
            lengths.append(run)
            run = 1
    lengths.append(run)
    return tuple(lengths)


def _compress_runs(u: np.ndarray):
    """Distinct run values and their lengths for a nondecreasing u."""
    lens = pieces_of(u)
    vals = []
    pos = 0
    for l in lens:
        vals.append(u[pos])
        pos += l
    return np.asarray(vals, dtype=float), np.asarray(lens, dtype=float)


def _segment_dp(vals: np.ndarray, wts: np.ndarray):
    """All-l segmentation DP over weighted run values.

    Returns (errors, back) where errors[l-1] is the minimal within-segment
    SSE using exactly l segments of the m runs, and back[l-1][j] is the
    start index of the last segment in the optimal l-segmentation of runs
    0..j. Costs come from prefix sums, so the whole table is O(m^3).
    """
    m = len(vals)
    w = np.concatenate([[0.0], np.cumsum(wts)])
    s = np.concatenate([[0.0], np.cumsum(wts * vals)])
    q = np.concatenate([[0.0], np.cumsum(wts * vals * vals)])
    # cost[i, j]: SSE of pooling runs i..j to their weighted mean
    wij = w[None, 1:] - w[:-1, None]
    sij = s[None, 1:] - s[:-1, None]
    qij = q[None, 1:] - q[:-1, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = qij - sij * sij / wij
    cost = np.where(wij > 0, np.maximum(cost, 0.0), np.inf)

    errors = np.empty((m, m))
    back = np.zeros((m, m), dtype=int)
    errors[0] = cost[0]
    for l in range(1, m):
        # candidate[i, j] = errors[l-1, i-1] + cost[i, j], for i <= j
        cand = errors[l - 1, :-1, None] + cost[1:, :]
        cand = np.where(np.arange(1, m)[:, None] <= np.arange(m)[None, :], cand, np.inf)
        back[l] = np.argmin(cand, axis=0) + 1
        errors[l] = np.min(cand, axis=0)
    return errors, back


def _segment_boundaries(back: np.ndarray, l: int, m: int) -> list:
    """Recover segment start indices for the optimal l-segmentation."""
    starts = []
    j = m - 1
    for level in range(l - 1, -1, -1):
        i = back[level, j] if level > 0 else 0
        starts.append(i)
        j = i - 1
    return starts[::-1]


def monotone_piece_errors(u: np.ndarray) -> np.ndarray:
    """Squared distances from u to its best approximations with 1..m pieces.

    u must be nondecreasing; m is the number of distinct constant pieces.
    Entry l-1 is ||u - Pi_{M_l}(u)||^2.
    """
    u = np.asarray(u, dtype=float).ravel()
    vals, wts = _compress_runs(u)
    errors, _ = _segment_dp(vals, wts)
    return errors[:, len(vals) - 1].copy()


def project_monotone_pieces(u: np.ndarray, l: int) -> np.ndarray:
    """Best l2 approximation of a nondecreasing u among nondecreasing
    vectors with at most l constant pieces.

    Dynamic programming over segment boundaries of the distinct runs of u,
    with within-segment weighted means. Means of an optimally segmented
    nondecreasing vector are themselves nondecreasing, so the result stays
    in the monotone cone.
    """
    u = np.asarray(u, dtype=float).ravel()
    if np.any(np.diff(u) < 0):
        raise ValueError("u must be nondecreasing")
    vals, wts = _compress_runs(u)
    m = len(vals)
    if not 1 <= l <= m:
        raise ValueError(f"l must be in [1, {m}] (number of distinct pieces)")
    _, back = _segment_dp(vals, wts)
    starts = _segment_boundaries(back, l, m)
    bounds = starts + [m]
    out = np.empty(len(u))
    run_offsets = np.concatenate([[0], np.cumsum(wts)]).astype(int)
    for a, b in zip(bounds[:-1], bounds[1:]):
        mean = np.dot(wts[a:b], vals[a:b]) / np.sum(wts[a:b])
        out[run_offsets[a] : run_offsets[b]] = mean
    return out


def project_l1_ball(u: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball of the given radius.

    Sorted-thresholding: soft-threshold at the level that makes the result
    hit the budget exactly (identity when u is already inside).
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    u = np.asarray(u, dtype=float).ravel()
    if radius == 0.0:
        return np.zeros_like(u)
    a = np.abs(u)
    if a.sum() <= radius:
        return u.copy()
    mu = np.sort(a)[::-1]
    css = np.cumsum(mu)
    k = np.arange(1, len(u) + 1)
    ok = mu - (css - radius) / k > 0
    k_star = k[ok][-1]
    theta = (css[k_star - 1] - radius) / k_star
    return np.sign(u) * np.maximum(a - theta, 0.0)


def project_constraint(model: ConstraintModel, u: np.ndarray) -> np.ndarray:
    """Projection onto the constraint set described by `model`."""
    u = np.asarray(u, dtype=float).ravel()
    if model.variant == "monotone":
        return project_monotone(u)
    if model.variant == "positive_monotone":
        return project_positive_monotone(u)
    if model.variant == "nonneg":
        return np.maximum(u, 0.0)
    if model.variant == "l1_ball":
        return project_l1_ball(u, model.Lambda)
    raise ValueError("slope_ball has no fixed radius before pilot selection")


def constraint_violation(model: ConstraintModel, x: np.ndarray) -> float:
    """How far x is from satisfying the constraints (0 when feasible)."""
    x = np.asarray(x, dtype=float).ravel()
    if model.variant == "monotone":
        return float(np.maximum(-np.diff(x), 0.0).max(initial=0.0))
    if model.variant == "positive_monotone":
        lo = float(np.maximum(-x[:1], 0.0).max(initial=0.0))
        return max(lo, float(np.maximum(-np.diff(x), 0.0).max(initial=0.0)))
    if model.variant == "nonneg":
        return float(np.maximum(-x, 0.0).max(initial=0.0))
    if model.variant == "l1_ball":
        return max(0.0, float(np.abs(x).sum() - model.Lambda))
    raise ValueError("slope_ball has no fixed radius before pilot selection")


def tangent_cone_at(model: ConstraintModel, v: np.ndarray, radius: float | None = None) -> TangentConeAt:
    """Tangent cone descriptor of the constraint set at the point v.

    For l1 balls, `radius` overrides model.Lambda (used by the adaptive
    slope ball whose radius is ||v||_1). An interior point of an l1 ball
    yields the full_space descriptor.
    """
    v = np.asarray(v, dtype=float).ravel()
    p = len(v)
    if model.variant == "monotone":
        return TangentConeAt.monotone(pieces_of(v), p=p)
    if model.variant == "positive_monotone":
        return TangentConeAt.positive_monotone(pieces_of(v), first_piece_is_zero=(v[0] == 0.0))
    if model.variant == "nonneg":
        return TangentConeAt.nonneg(np.flatnonzero(v == 0.0), p=p)
    lam = model.Lambda if radius is None else radius
    l1 = np.abs(v).sum()
    if l1 < lam - 1e-9 * max(1.0, lam):
        return TangentConeAt.full_space(p)
    support = np.flatnonzero(v != 0.0)
    return TangentConeAt.l1_boundary(support, np.sign(v[support]), p=p)


def _project_blockwise_monotone(x: np.ndarray, cone: TangentConeAt) -> np.ndarray:
    out = np.empty(len(x))
    pos = 0
    for k, length in enumerate(cone.pieces):
        block = x[pos : pos + length]
        if k == 0 and cone.variant == "positive_monotone" and cone.first_piece_is_zero:
            out[pos : pos + length] = project_positive_monotone(block)
        else:
            out[pos : pos + length] = project_monotone(block)
        pos += length
    return out


def project_normal_l1ball(
    z: np.ndarray,
    cone: TangentConeAt,
    method: str = "exact",
    tol: float = 1e-12,
) -> np.ndarray:
    """Projection onto the normal cone of an l1 ball at a boundary point.

    The normal cone at v is {w : w_i = t sign(v_i) on the support, |w_i| <=
    t elsewhere, t >= 0}. The squared distance from z is a piecewise
    quadratic in t; "exact" minimizes it by scanning the breakpoints (the
    off-support |z_i| values), "golden" runs golden-section search down to
    `tol` instead.
    """
    if cone.variant != "l1_boundary":
        raise ValueError("normal-cone projection needs an l1 boundary descriptor")
    z = np.asarray(z, dtype=float).ravel()
    support = np.asarray(cone.support, dtype=int)
    signs = np.asarray(cone.signs, dtype=float)
    mask = np.zeros(len(z), dtype=bool)
    mask[support] = True
    b = z[support] * signs
    a = np.abs(z[~mask])

    t_hi = np.abs(z).max(initial=0.0)

    def dist2(t):
        return np.sum((t - b) ** 2) + np.sum(np.maximum(a - t, 0.0) ** 2)

    if method == "golden":
        t_hat = _golden_section(dist2, 0.0, t_hi, tol)
    elif method == "exact":
        bp = np.unique(np.concatenate([[0.0], a, [t_hi]]))
        bp = bp[(bp >= 0.0) & (bp <= t_hi)]
        if len(bp) == 1:
            t_hat = float(bp[0])
        else:
            lows, highs = bp[:-1], bp[1:]
            a_sorted = np.sort(a)
            suf_a = np.concatenate([np.cumsum(a_sorted[::-1])[::-1], [0.0]])
            suf_a2 = np.concatenate([np.cumsum((a_sorted[::-1]) ** 2)[::-1], [0.0]])
            # on [lo, hi) the active hinges are those with a_i >= hi, so
            # F(t) = A t^2 - 2 B t + C per interval, from suffix sums
            first = np.searchsorted(a_sorted, highs, side="left")
            A = len(b) + (len(a) - first)
            B = b.sum() + suf_a[first]
            C = float(b @ b) + suf_a2[first]
            with np.errstate(divide="ignore", invalid="ignore"):
                vertex = np.where(A > 0, B / np.maximum(A, 1), lows)
            ts = np.clip(vertex, lows, highs)
            vals = A * ts * ts - 2.0 * B * ts + C
            k = int(np.argmin(vals))
            t_hat = float(ts[k])
    else:
        raise ValueError(f"unknown method {method!r}")

    out = np.empty(len(z))
    out[support] = t_hat * signs
    off = ~mask
    out[off] = np.sign(z[off]) * np.minimum(t_hat, np.abs(z[off]))
    return out


def _golden_section(f, lo, hi, tol):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    return (lo + hi) / 2.0


def project_tangent_cone(x: np.ndarray, cone: TangentConeAt) -> np.ndarray:
    """Projection onto a tangent cone described by `cone`.

    Monotone cones project blockwise via PAVA; the orthant cone clamps
    the zero-set coordinates at zero; l1 boundary cones subtract the
    normal-cone projection (Moreau); the full space is the identity.
    """
    x = np.asarray(x, dtype=float).ravel()
    if len(x) != cone.p:
        raise ValueError(f"x has length {len(x)}, cone expects {cone.p}")
    if cone.variant == "full_space":
        return x.copy()
    if cone.variant in ("monotone", "positive_monotone"):
        return _project_blockwise_monotone(x, cone)
    if cone.variant == "nonneg":
        out = x.copy()
        zs = list(cone.zero_set)
        out[zs] = np.maximum(out[zs], 0.0)
        return out
    return x - project_normal_l1ball(x, cone)


def project_negative_cone(x: np.ndarray, cone: TangentConeAt) -> np.ndarray:
    """Projection onto the negated tangent cone: -Pi_T(-x)."""
    x = np.asarray(x, dtype=float).ravel()
    return -project_tangent_cone(-x, cone)


def width_bound(model: ConstraintModel, cone: TangentConeAt, a_n: float = 0.0) -> float:
    """Computable upper bound on the Gaussian complexity of T cap S^{p-1}.

    sqrt(l log(ep/l)) for (positive) monotone cones with l pieces,
    sqrt(p - |Z|/2) for the orthant, sqrt(s log(ep/s)) for l1/slope with
    support size s, all floored at a_n. A full_space descriptor means the
    l1 pilot landed in the interior, which is a configuration error
    upstream; it is flagged with a warning and yields the floor alone.
    """
    if a_n < 0:
        raise ValueError("a_n must be >= 0")
    p = cone.p
    if cone.variant == "full_space":
        warnings.warn(
            "width bound requested for a full-space tangent cone; "
            "the l1 pilot is interior (configuration error upstream)",
            RuntimeWarning,
        )
        return a_n
    if cone.variant in ("monotone", "positive_monotone"):
        l = len(cone.pieces)
        bound = np.sqrt(l * np.log(np.e * p / l))
    elif cone.variant == "nonneg":
        bound = np.sqrt(p - len(cone.zero_set) / 2.0)
    else:
        s = len(cone.support)
        bound = np.sqrt(s * np.log(np.e * p / s))
    return float(max(bound, a_n))
