"""Tour of the constraint-set geometry: projections, tangent cones, widths.

Run: python3 demos/01_cone_projections.py
"""

import numpy as np

from debiaslr import (
    ConstraintModel,
    TangentConeAt,
    pieces_of,
    project_l1_ball,
    project_monotone,
    project_monotone_pieces,
    project_normal_l1ball,
    project_positive_monotone,
    project_tangent_cone,
    tangent_cone_at,
    width_bound,
)

rng = np.random.default_rng(0)

print("== Isotonic projection (monotone cone) ==")
u = np.array([0.3, -0.6, 1.9, 1.2, 2.5])
v = project_monotone(u)
print(f"u          = {u}")
print(f"Pi_M(u)    = {np.round(v, 4)}   pieces: {pieces_of(v)}")

print("\n== Few-piece approximations of a monotone vector ==")
w = np.array([1.0, 2.0, 4.0, 8.0])
for l in (1, 2, 3, 4):
    wl = project_monotone_pieces(w, l)
    cost = np.sum((w - wl) ** 2)
    print(f"l={l}: {np.round(wl, 4)}   squared distance {cost:.4f}")

print("\n== Positive monotone and l1-ball projections ==")
print("clamp+pool:", project_positive_monotone([-2.0, 0.5, 0.1]))
print("l1 ball r=1:", np.round(project_l1_ball(np.array([2.0, -0.5, 0.1]), 1.0), 4))

print("\n== Tangent cones at a pilot point ==")
model = ConstraintModel("monotone", p=6)
point = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 2.5])
cone = tangent_cone_at(model, point)
print(f"pilot {point} -> cone pieces {cone.pieces}")
x = rng.standard_normal(6)
px = project_tangent_cone(x, cone)
print(f"x        = {np.round(x, 3)}")
print(f"Pi_T(x)  = {np.round(px, 3)}")
print(f"projection identity <Pi(x),x> - ||Pi(x)||^2 = {px @ x - px @ px:.2e}")

print("\n== Normal cone of an l1 ball (Moreau split) ==")
bcone = TangentConeAt.l1_boundary(support=[0, 2], signs=[1.0, -1.0], p=4)
z = np.array([0.8, -0.3, -1.4, 0.2])
pn = project_normal_l1ball(z, bcone)
pt = project_tangent_cone(z, bcone)
print(f"z        = {z}")
print(f"Pi_N(z)  = {np.round(pn, 4)}")
print(f"Pi_T(z)  = {np.round(pt, 4)}")
print(f"Pi_T + Pi_N - z = {np.round(pt + pn - z, 12)}   <Pi_T, Pi_N> = {pt @ pn:.2e}")

print("\n== Width bounds (with the slowly diverging floor) ==")
for desc, m, c in [
    ("monotone, 2 pieces, p=100", ConstraintModel("monotone", 100), TangentConeAt.monotone([70, 30])),
    ("orthant, 25 zeros, p=50", ConstraintModel("nonneg", 50), TangentConeAt.nonneg(range(25), 50)),
    ("l1, support 5, p=1000", ConstraintModel("l1_ball", 1000, Lambda=1.0),
     TangentConeAt.l1_boundary(range(5), [1.0] * 5, 1000)),
]:
    print(f"{desc:28s} -> {width_bound(m, c, a_n=1.2):.4f}")
