"""Command-line entry points.

Subcommands:
  run     execute a replicated experiment from a flat key=value config file
          and write rows.csv / summary.json / qq.csv
  qq      regenerate qq.csv from an existing rows.csv
  debias  debias one coordinate of one dataset CSV and print the interval

Exit codes: 0 success, 2 config/usage error, 3 batch-level failure (every
replication failed).

Config keys (one `key = value` per line, '#' starts a comment):
  scenario        monotone | positive_monotone | nonneg | lasso | slope | sqrt_slope
  n, p, reps      integers (n is the per-split sample size)
  covariance      identity | toeplitz | bounded_eig
  cov_rho         Toeplitz parameter in (0, 1)
  lambda_min, lambda_max   bounded_eig spectrum range
  noise           gaussian | rademacher | uniform
  sigma           noise standard deviation
  alpha, seed     interval level and experiment seed
  target_index    1-based coordinate (default p)
  contrast        comma-separated floats (overrides target_index)
  sub_gaussian    true/false: extra row constraint + floored interval
  ci_form         half_power | full_power
  c_floor         sub-Gaussian interval floor
  fit_max_iters, fit_tol, eta_max_iters, eta_patience, eta_step_rule,
  eta_step_scale, rho, rho_prime, rho_growth    solver knobs
  slope_A, s_u, gamma_c, lasso_budget           pilot knobs
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .cones import ConstraintModel
from .data import CovarianceSpec, NoiseSpec, gram_matrix, load_dataset_csv, split_sample
from .engine import EtaConfig, EtaInfeasibleError, debias_target, solve_eta, solve_eta_subgaussian
from .estimators import (
    FitConfig,
    fit_constrained_lasso,
    fit_constrained_ls,
    fit_sqrt_slope,
    slope_lambda,
)
from .harness import (
    SCENARIOS,
    SQRT_SLOPE_A_DEFAULT,
    ExperimentConfig,
    emit_report,
    run_experiment,
)
from .intervals import confidence_interval, confidence_interval_subgaussian, estimate_sigma
from .pilot import (
    choose_C_slope,
    select_v_l1,
    select_v_monotone,
    select_v_nonneg,
    select_v_positive_monotone,
    select_v_slope,
)


class ConfigError(Exception):
    pass


def _parse_kv_file(path) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.lower()] = value
    return out


def _as_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def _experiment_config(kv: dict) -> ExperimentConfig:
    try:
        scenario = kv["scenario"]
        n = int(kv["n"])
        p = int(kv["p"])
    except KeyError as exc:
        raise ConfigError(f"missing required config key: {exc.args[0]}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    cov_kind = kv.get("covariance", "identity")
    try:
        cov = CovarianceSpec(
            kind=cov_kind,
            p=p,
            rho=float(kv.get("cov_rho", 0.4)),
            lambda_min=float(kv.get("lambda_min", 0.5)),
            lambda_max=float(kv.get("lambda_max", 2.0)),
            seed=int(kv.get("seed", 0)),
        )
        noise = NoiseSpec(kind=kv.get("noise", "gaussian"), sigma=float(kv.get("sigma", 1.0)))
        fit = FitConfig(
            max_iters=int(kv.get("fit_max_iters", FitConfig.max_iters)),
            tol=float(kv.get("fit_tol", FitConfig.tol)),
        )
        eta = EtaConfig(
            rho=float(kv.get("rho", 1.0)),
            rho_prime=float(kv.get("rho_prime", 1.0)),
            rho_growth=float(kv.get("rho_growth", 2.0)),
            step_rule=kv.get("eta_step_rule", "inverse_sqrt"),
            step_scale=float(kv.get("eta_step_scale", 1.0)),
            max_iters=int(kv.get("eta_max_iters", EtaConfig.max_iters)),
            feasibility_patience=int(kv.get("eta_patience", EtaConfig.feasibility_patience)),
        )
        contrast = None
        if "contrast" in kv:
            contrast = np.array([float(x) for x in kv["contrast"].split(",")])
        return ExperimentConfig(
            scenario=scenario,
            n=n,
            p=p,
            covariance=cov,
            noise=noise,
            reps=int(kv.get("reps", 100)),
            alpha=float(kv.get("alpha", 0.05)),
            seed=int(kv.get("seed", 0)),
            target_index=int(kv["target_index"]) if "target_index" in kv else None,
            contrast=contrast,
            sub_gaussian=_as_bool(kv.get("sub_gaussian", "false")),
            ci_form=kv.get("ci_form", "half_power"),
            c_floor=float(kv.get("c_floor", 0.05)),
            fit=fit,
            eta=eta,
            slope_A=float(kv["slope_a"]) if "slope_a" in kv else None,
            s_u=int(kv["s_u"]) if "s_u" in kv else None,
            gamma_c=float(kv.get("gamma_c", 0.25)),
            lasso_budget=float(kv["lasso_budget"]) if "lasso_budget" in kv else None,
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_run(args) -> int:
    try:
        cfg = _experiment_config(_parse_kv_file(args.config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = run_experiment(cfg)
    paths = emit_report(report, args.out)
    print(json.dumps(report.summary, indent=2, sort_keys=True))
    for name, path in paths.items():
        print(f"{name}: {path}")
    if report.summary["n_ok"] == 0:
        print("batch failure: every replication failed", file=sys.stderr)
        return 3
    return 0


def _cmd_qq(args) -> int:
    from scipy.stats import norm

    try:
        with open(args.rows) as fh:
            reader = csv.DictReader(fh)
            stats = [
                (float(row["stat_half"]), float(row["stat_full"]))
                for row in reader
                if row["failed"] == "0"
            ]
    except (OSError, KeyError, ValueError) as exc:
        print(f"config error: cannot read rows csv {args.rows}: {exc}", file=sys.stderr)
        return 2
    half = np.sort([s[0] for s in stats])
    full = np.sort([s[1] for s in stats])
    m = len(stats)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theoretical", "stat_half", "stat_full"])
        if m:
            theo = norm.ppf((np.arange(1, m + 1) - 0.5) / m)
            for t, a, b in zip(theo, half, full):
                writer.writerow([repr(float(t)), repr(float(a)), repr(float(b))])
    print(f"qq: {args.out} ({m} points)")
    return 0


def _pilot_for_cli(args, first, p, n):
    """Fit + select on the first split for the one-shot debias command."""
    scenario = args.scenario
    fit_cfg = FitConfig()
    if scenario in ("monotone", "positive_monotone", "nonneg"):
        beta_hat = fit_constrained_ls(first, ConstraintModel(scenario, p=p), fit_cfg)
        select = {
            "monotone": select_v_monotone,
            "positive_monotone": select_v_positive_monotone,
            "nonneg": select_v_nonneg,
        }[scenario]
        return beta_hat, select(beta_hat, n)
    if scenario == "lasso":
        if args.l1_budget is None:
            raise ConfigError("--l1-budget is required for the lasso scenario")
        beta_hat = fit_constrained_lasso(first, args.l1_budget, fit_cfg)
        return beta_hat, select_v_l1(beta_hat, args.l1_budget, n)
    # slope / sqrt_slope: the scale is estimated jointly, so both use the
    # square-root variant for the pilot on real data
    lambdas = slope_lambda(p, n, 1.0, SQRT_SLOPE_A_DEFAULT)
    beta_hat, _sigma = fit_sqrt_slope(first, lambdas, fit_cfg)
    s_u = args.sparsity_bound or max(1, int(np.ceil(np.sqrt(p))))
    C = choose_C_slope(n, p, s_u, 0.25)
    return beta_hat, select_v_slope(beta_hat, s_u, C, n)


def _cmd_debias(args) -> int:
    try:
        if args.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {args.scenario!r}")
        data = load_dataset_csv(args.data, center=True)
        if data.n < 4:
            raise ConfigError("need at least 4 rows")
        sp = split_sample(data, args.seed)
        first, second = sp.first, sp.second
        n, p = first.n, first.p
        j = args.target if args.target is not None else p
        if not 1 <= j <= p:
            raise ConfigError(f"--target must lie in [1, {p}]")
        beta_hat, sel = _pilot_for_cli(args, first, p, n)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    target = np.zeros(p)
    target[j - 1] = 1.0
    gram = gram_matrix(second.X)
    eta_cfg = EtaConfig(rho=args.rho)
    try:
        if args.sub_gaussian:
            res = solve_eta_subgaussian(gram, target, sel.cone_at_v, sel.width, n, second.X, eta_cfg)
        else:
            res = solve_eta(gram, target, sel.cone_at_v, sel.width, n, eta_cfg)
    except EtaInfeasibleError as exc:
        print(f"batch failure: {exc}", file=sys.stderr)
        return 3
    beta_d = debias_target(sel.v, res.eta, second, target)
    sigma_hat = estimate_sigma(first, beta_hat)
    if args.sub_gaussian:
        ci = confidence_interval_subgaussian(
            beta_d, res.eta, gram, sigma_hat, args.alpha, n, args.c_floor
        )
    else:
        ci = confidence_interval(beta_d, res.eta, gram, sigma_hat, args.alpha, n)
    result = {
        "scenario": args.scenario,
        "target_index": j,
        "debiased": beta_d,
        "pilot": float(beta_hat[j - 1]),
        "ci_lower": ci.lower,
        "ci_upper": ci.upper,
        "alpha": args.alpha,
        "sigma_hat": sigma_hat,
        "sd_used": ci.sd_used,
        "rho_final": res.rho_final,
        "iterations": res.iterations,
        "n": n,
        "p": p,
    }
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="debiaslr",
        description="Debiased estimates and confidence intervals for constrained regression.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a replicated experiment from a config file")
    p_run.add_argument("config", help="flat key=value config file")
    p_run.add_argument("--out", default=".", help="output directory (default: cwd)")
    p_run.set_defaults(func=_cmd_run)

    p_qq = sub.add_parser("qq", help="emit a Q-Q csv from an existing rows.csv")
    p_qq.add_argument("rows", help="rows.csv from a previous run")
    p_qq.add_argument("--out", default="qq.csv", help="output csv path")
    p_qq.set_defaults(func=_cmd_qq)

    p_d = sub.add_parser("debias", help="debias one coordinate of one dataset csv")
    p_d.add_argument("data", help="csv with header y,x1,...,xp")
    p_d.add_argument("--scenario", required=True, choices=SCENARIOS)
    p_d.add_argument("--target", type=int, default=None, help="1-based coordinate (default p)")
    p_d.add_argument("--alpha", type=float, default=0.05)
    p_d.add_argument("--sub-gaussian", action="store_true", dest="sub_gaussian")
    p_d.add_argument("--rho", type=float, default=1.0)
    p_d.add_argument("--seed", type=int, default=0)
    p_d.add_argument("--out", default=None, help="also write the result json here")
    p_d.add_argument("--l1-budget", type=float, default=None, dest="l1_budget")
    p_d.add_argument("--sparsity-bound", type=int, default=None, dest="sparsity_bound")
    p_d.add_argument("--c-floor", type=float, default=0.05, dest="c_floor")
    p_d.set_defaults(func=_cmd_debias)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize --version/help to 0
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
