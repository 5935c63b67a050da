import numpy as np
import pytest

from debiaslr.cones import ConstraintModel, constraint_violation, project_l1_ball
from debiaslr.data import CovarianceSpec, Dataset, NoiseSpec, generate_dataset
from debiaslr.estimators import (
    ConvergenceWarning,
    DegenerateFitError,
    FitConfig,
    SlopeLambdas,
    fit_constrained_lasso,
    fit_constrained_ls,
    fit_slope,
    fit_sqrt_slope,
    prox_sorted_l1,
    slope_lambda,
)
from oracles import constrained_lasso_oracle

CFG = FitConfig(max_iters=200_000, tol=1e-13)


def _ols(X, y):
    return np.linalg.lstsq(X, y, rcond=None)[0]


class TestConstrainedLs:
    def test_inactive_l1_ball_recovers_ols(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((30, 4))
        y = rng.standard_normal(30)
        ols = _ols(X, y)
        model = ConstraintModel("l1_ball", p=4, Lambda=float(np.abs(ols).sum()))
        beta = fit_constrained_ls(Dataset(X=X, y=y), model, CFG)
        np.testing.assert_allclose(beta, ols, atol=1e-6)

    def test_nonneg_boundary(self):
        d = Dataset(X=np.ones((3, 1)), y=np.array([-1.0, -2.0, -3.0]))
        beta = fit_constrained_ls(d, ConstraintModel("nonneg", p=1), CFG)
        np.testing.assert_allclose(beta, [0.0], atol=1e-12)

    def test_monotone_noiseless_recovery(self):
        rng = np.random.default_rng(1)
        q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
        X = q * np.sqrt(8)
        beta_star = np.array([-1.0, -1.0, 0.0, 0.0, 0.5, 0.5, 2.0, 2.0])
        d = Dataset(X=X, y=X @ beta_star)
        beta = fit_constrained_ls(d, ConstraintModel("monotone", p=8), CFG)
        np.testing.assert_allclose(beta, beta_star, atol=1e-6)

    def test_output_feasible(self):
        rng = np.random.default_rng(2)
        for variant in ("monotone", "positive_monotone", "nonneg"):
            X = rng.standard_normal((20, 5))
            y = rng.standard_normal(20)
            beta = fit_constrained_ls(Dataset(X=X, y=y), ConstraintModel(variant, p=5), CFG)
            assert constraint_violation(ConstraintModel(variant, p=5), beta) <= 1e-8

    def test_nonconvergence_warns_and_reports(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((40, 6))
        y = rng.standard_normal(40)
        cfg = FitConfig(max_iters=3, tol=1e-16)
        with pytest.warns(ConvergenceWarning):
            beta, info = fit_constrained_ls(
                Dataset(X=X, y=y), ConstraintModel("nonneg", p=6), cfg, return_info=True
            )
        assert not info.converged
        assert info.iterations == 3
        assert info.stationarity > 0


class TestConstrainedLasso:
    def test_zero_budget(self):
        rng = np.random.default_rng(4)
        d = Dataset(X=rng.standard_normal((10, 3)), y=rng.standard_normal(10))
        np.testing.assert_array_equal(fit_constrained_lasso(d, 0.0, CFG), np.zeros(3))

    def test_inactive_budget_gives_ols(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((25, 3))
        y = rng.standard_normal(25)
        ols = _ols(X, y)
        beta = fit_constrained_lasso(Dataset(X=X, y=y), 10 * float(np.abs(ols).sum()), CFG)
        np.testing.assert_allclose(beta, ols, atol=1e-7)

    def test_orthonormal_design_closed_form(self):
        rng = np.random.default_rng(6)
        n, p = 16, 4
        q, _ = np.linalg.qr(rng.standard_normal((n, p)))
        X = q * np.sqrt(n)  # X'X/n = I
        y = rng.standard_normal(n)
        Lam = 0.8
        beta = fit_constrained_lasso(Dataset(X=X, y=y), Lam, CFG)
        np.testing.assert_allclose(beta, project_l1_ball(X.T @ y / n, Lam), atol=1e-7)

    def test_budget_respected(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((12, 5))
        y = 3 * rng.standard_normal(12)
        beta = fit_constrained_lasso(Dataset(X=X, y=y), 0.75, CFG)
        assert np.abs(beta).sum() <= 0.75 + 1e-10

    def test_matches_signpattern_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(8):
            n, p = int(rng.integers(5, 9)), int(rng.integers(2, 5))
            X = rng.standard_normal((n, p))
            y = rng.standard_normal(n)
            Lam = float(rng.uniform(0.1, 1.5))
            beta = fit_constrained_lasso(Dataset(X=X, y=y), Lam, CFG)
            _, oracle_obj = constrained_lasso_oracle(X, y, Lam)
            mine = float(np.sum((y - X @ beta) ** 2))
            assert mine <= oracle_obj + 1e-4


class TestSlopeLambda:
    def test_last_value(self):
        lam = slope_lambda(p=6, n=100, sigma=2.0, A=3.0)
        assert abs(lam.values[-1] - 3.0 * 2.0 * np.sqrt(np.log(2.0) / 100)) < 1e-14

    def test_paper_scale_value(self):
        lam = slope_lambda(p=1000, n=1000, sigma=1.0, A=2 * (4 + np.sqrt(2)))
        assert abs(lam.values[0] - 0.9441) < 5e-5

    def test_strictly_decreasing(self):
        lam = slope_lambda(p=10, n=50, sigma=1.0, A=1.0)
        assert np.all(np.diff(lam.values) < 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            slope_lambda(p=5, n=10, sigma=1.0, A=0.0)
        with pytest.raises(ValueError):
            SlopeLambdas(values=np.array([1.0, 2.0]), A=1.0)


class TestProxSortedL1:
    def test_zero_weights_identity(self):
        v = np.array([3.0, -1.0, 2.0])
        lam = SlopeLambdas(values=np.zeros(3), A=1.0)
        np.testing.assert_array_equal(prox_sorted_l1(v, lam, 1.0), v)

    def test_scalar_soft_threshold(self):
        lam = SlopeLambdas(values=np.array([2.0]), A=1.0)
        np.testing.assert_allclose(prox_sorted_l1(np.array([5.0]), lam, 1.0), [3.0])

    def test_equal_weights_soft_threshold(self):
        lam = SlopeLambdas(values=np.array([1.0, 1.0]), A=1.0)
        np.testing.assert_allclose(prox_sorted_l1(np.array([3.0, 1.0]), lam, 1.0), [2.0, 0.0])

    def test_sorted_magnitudes_nonincreasing(self):
        rng = np.random.default_rng(9)
        for _ in range(40):
            p = int(rng.integers(1, 12))
            lam = SlopeLambdas(values=np.sort(rng.uniform(0, 1, p))[::-1], A=1.0)
            out = prox_sorted_l1(rng.standard_normal(p) * 2, lam, float(rng.uniform(0.1, 2)))
            mags = np.sort(np.abs(out))[::-1]
            assert np.all(np.diff(mags) <= 1e-12)

    def test_prox_objective_optimal_side(self):
        # objective at the output beats the objective at v and at 0
        rng = np.random.default_rng(10)
        for _ in range(40):
            p = int(rng.integers(1, 10))
            lam = SlopeLambdas(values=np.sort(rng.uniform(0, 1, p))[::-1], A=1.0)
            v = rng.standard_normal(p) * 2
            h = float(rng.uniform(0.1, 2))

            def obj(x):
                return 0.5 * np.sum((x - v) ** 2) + h * float(
                    lam.values @ np.sort(np.abs(x))[::-1]
                )

            out = prox_sorted_l1(v, lam, h)
            assert obj(out) <= obj(v) + 1e-12
            assert obj(out) <= obj(np.zeros(p)) + 1e-12


class TestFitSlope:
    def test_zero_penalty_gives_ols(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((30, 4))
        y = rng.standard_normal(30)
        lam = SlopeLambdas(values=np.zeros(4), A=1.0)
        beta = fit_slope(Dataset(X=X, y=y), lam, CFG)
        np.testing.assert_allclose(beta, _ols(X, y), atol=1e-6)

    def test_huge_penalty_gives_zero(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((20, 4))
        y = rng.standard_normal(20)
        lam = SlopeLambdas(values=np.full(4, 1e6), A=1.0)
        np.testing.assert_allclose(fit_slope(Dataset(X=X, y=y), lam, CFG), np.zeros(4), atol=1e-12)

    def test_orthonormal_reduction_to_prox(self):
        rng = np.random.default_rng(13)
        n, p = 25, 5
        q, _ = np.linalg.qr(rng.standard_normal((n, p)))
        X = q * np.sqrt(n)
        y = rng.standard_normal(n)
        lam = SlopeLambdas(values=np.sort(rng.uniform(0.05, 0.3, p))[::-1], A=1.0)
        beta = fit_slope(Dataset(X=X, y=y), lam, CFG)
        # for X'X/n = I the optimum is the prox at the OLS point with h = 1/2
        expected = prox_sorted_l1(X.T @ y / n, lam, 0.5)
        np.testing.assert_allclose(beta, expected, atol=1e-7)

    def test_objective_monotone_under_auto_step(self):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((30, 6))
        y = rng.standard_normal(30)
        d = Dataset(X=X, y=y)
        lam = SlopeLambdas(values=np.sort(rng.uniform(0, 0.5, 6))[::-1], A=1.0)
        G, b = X.T @ X / 30, X.T @ y / 30

        def obj(beta):
            return float(beta @ G @ beta - 2 * b @ beta + y @ y / 30) + float(
                lam.values @ np.sort(np.abs(beta))[::-1]
            )

        objods = []
        beta = np.zeros(6)
        h = 1.0 / (2 * np.linalg.eigvalsh(G)[-1])
        for _ in range(300):
            beta = prox_sorted_l1(beta - h * 2 * (G @ beta - b), lam, h)
            objods.append(obj(beta))
        assert np.all(np.diff(objods) <= 1e-12)


class TestDescentMonotonicity:
    def test_projected_gradient_objective_nonincreasing(self):
        rng = np.random.default_rng(21)
        X = rng.standard_normal((25, 7))
        y = rng.standard_normal(25)
        G, b = X.T @ X / 25, X.T @ y / 25
        h = 1.0 / (2 * np.linalg.eigvalsh(G)[-1])
        model = ConstraintModel("monotone", p=7)
        from debiaslr.cones import project_constraint

        beta = np.zeros(7)
        objs = []
        for _ in range(400):
            beta = project_constraint(model, beta - h * 2 * (G @ beta - b))
            objs.append(float(beta @ G @ beta - 2 * b @ beta))
        assert np.all(np.diff(objs) <= 1e-12)


class TestFitSqrtSlope:
    def test_zero_penalty(self):
        rng = np.random.default_rng(15)
        X = rng.standard_normal((30, 3))
        y = rng.standard_normal(30)
        lam = SlopeLambdas(values=np.zeros(3), A=1.0)
        beta, sigma = fit_sqrt_slope(Dataset(X=X, y=y), lam, CFG)
        ols = _ols(X, y)
        np.testing.assert_allclose(beta, ols, atol=1e-5)
        assert abs(sigma - np.linalg.norm(y - X @ ols) / np.sqrt(30)) < 1e-5

    def test_huge_penalty_fixed_point(self):
        rng = np.random.default_rng(16)
        X = rng.standard_normal((20, 3))
        y = rng.standard_normal(20)
        lam = SlopeLambdas(values=np.full(3, 1e5), A=1.0)
        beta, sigma = fit_sqrt_slope(Dataset(X=X, y=y), lam, CFG)
        np.testing.assert_allclose(beta, np.zeros(3), atol=1e-12)
        assert abs(sigma - np.linalg.norm(y) / np.sqrt(20)) < 1e-12

    def test_termination_is_a_fixed_point(self):
        cov = CovarianceSpec(kind="identity", p=5)
        d = generate_dataset(np.array([0, 0, 0, 1.0, 2.0]), cov, NoiseSpec(sigma=0.5), 40, seed=17)
        lam = slope_lambda(5, 40, 1.0, 4 * (4 + np.sqrt(2)))
        beta, sigma = fit_sqrt_slope(d, lam, CFG)
        rescaled = SlopeLambdas(values=sigma * lam.values, A=lam.A)
        beta2 = fit_slope(d, rescaled, CFG, beta0=beta)
        sigma2 = float(np.linalg.norm(d.y - d.X @ beta2)) / np.sqrt(d.n)
        assert np.max(np.abs(beta2 - beta)) <= 1e-6
        assert abs(sigma2 - sigma) <= 1e-6

    def test_degenerate_scale_raises(self):
        X = np.eye(4)
        with pytest.raises(DegenerateFitError):
            fit_sqrt_slope(
                Dataset(X=X, y=np.zeros(4)),
                SlopeLambdas(values=np.zeros(4), A=1.0),
                CFG,
            )
