"""Pilot fits and step-1 selection on synthetic data.

Each block draws a sample, fits the matching constrained/regularized
estimator, and shows how the selection trades distance against the
tangent-cone width. Run: python3 demos/02_pilot_estimators.py
"""

import numpy as np

from debiaslr import (
    ConstraintModel,
    CovarianceSpec,
    FitConfig,
    NoiseSpec,
    choose_C_slope,
    fit_constrained_lasso,
    fit_constrained_ls,
    fit_slope,
    fit_sqrt_slope,
    generate_dataset,
    select_v_l1,
    select_v_monotone,
    select_v_slope,
    slope_lambda,
)

cfg = FitConfig()

print("== Monotone regression, n=200, p=12 ==")
beta_star = np.concatenate([-np.ones(8), np.ones(4)])
cov = CovarianceSpec(kind="toeplitz", p=12, rho=0.4)
d = generate_dataset(beta_star, cov, NoiseSpec(sigma=0.5), n=200, seed=1)
beta_hat = fit_constrained_ls(d, ConstraintModel("monotone", p=12), cfg)
sel = select_v_monotone(beta_hat, d.n)
print("beta*    :", beta_star.astype(int))
print("pilot fit:", np.round(beta_hat, 3))
print("v        :", np.round(sel.v, 3))
print(f"pieces {sel.cone_at_v.pieces}, width {sel.width:.3f}, criterion {sel.objective:.4f}")

print("\n== Constrained lasso with a known l1 budget ==")
p = 40
beta_star = np.zeros(p)
beta_star[[3, 17, 31]] = [1.0, -0.7, 0.4]
budget = float(np.abs(beta_star).sum())
cov = CovarianceSpec(kind="identity", p=p)
d = generate_dataset(beta_star, cov, NoiseSpec(sigma=0.3), n=300, seed=2)
beta_hat = fit_constrained_lasso(d, budget, cfg)
sel = select_v_l1(beta_hat, budget, d.n)
print(f"nonzeros in fit: {np.count_nonzero(beta_hat)}, selected support {sel.cone_at_v.support}")
print(f"||v||_1 = {np.abs(sel.v).sum():.6f} (budget {budget})")

print("\n== SLOPE and square-root SLOPE ==")
p, n = 60, 400
beta_star = np.zeros(p)
beta_star[-3:] = [1.0, 2.0, 3.0]
cov = CovarianceSpec(kind="identity", p=p)
d = generate_dataset(beta_star, cov, NoiseSpec(sigma=1.0), n=n, seed=3)

lam = slope_lambda(p, n, sigma=1.0, A=2 * (4 + np.sqrt(2)))
print("weights lambda_1..lambda_4:", np.round(lam.values[:4], 4))
beta_slope = fit_slope(d, lam, cfg)
print("SLOPE fit top entries:", np.round(np.sort(np.abs(beta_slope))[::-1][:4], 3))

lam1 = slope_lambda(p, n, sigma=1.0, A=1.1 * (4 + np.sqrt(2)))
beta_sq, sigma_sq = fit_sqrt_slope(d, lam1, cfg)
print(f"sqrt-SLOPE scale estimate: {sigma_sq:.3f} (truth 1.0)")

s_u = 3
C = choose_C_slope(n, p, s_u, gamma=0.25)
sel = select_v_slope(beta_sq, s_u=s_u, C=C, n=n)
print(f"C = {C:.3f}; adaptive ball radius ||v||_1 = {np.abs(sel.v).sum():.3f}")
print("v on its support:", np.round(sel.v[np.flatnonzero(sel.v)], 3))
