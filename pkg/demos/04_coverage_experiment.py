"""A small replicated coverage experiment through the harness.

Runs the non-negative scenario at reduced scale, prints the summary, and
writes rows.csv / summary.json / qq.csv to demo_output/.

Run: python3 demos/04_coverage_experiment.py
"""

import json
import warnings

from debiaslr import (
    CovarianceSpec,
    EtaConfig,
    ExperimentConfig,
    NoiseSpec,
    emit_report,
    run_experiment,
)

cfg = ExperimentConfig(
    scenario="nonneg",
    n=400,
    p=25,
    covariance=CovarianceSpec(kind="identity", p=25),
    noise=NoiseSpec(sigma=1.0),
    reps=50,
    alpha=0.05,
    seed=21,
    eta=EtaConfig(rho=0.5, max_iters=2000),
)

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    report = run_experiment(cfg)

s = report.summary
print(f"scenario {s['scenario']}  n={s['n']} p={s['p']}  reps={s['reps']}")
print(f"coverage (nominal 0.95): {s['coverage']:.3f}  failed reps: {s['n_failed']}")
print(f"standardized stat: mean {s['mean_stat_half']:+.3f}, sd {s['sd_stat_half']:.3f}")
print(f"KS vs N(0,1): distance {s['ks_half']:.4f}, p-value {s['ks_half_pvalue']:.3f}")
print(f"mean pilot bias {s['mean_bias_pilot']:+.4f} -> debiased {s['mean_bias_debiased']:+.4f}")

paths = emit_report(report, "demo_output")
print("\nwrote:", json.dumps(paths, indent=2))
