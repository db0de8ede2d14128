"""Reduced-scale rate experiments with log-log fits and an SVG plot.

Runs trimmed versions of the three named experiments (fewer replications
than the acceptance suite, same machinery): the improper-vs-proper gap on
a shrinking two-point instance, the p=3 fast rate on a 16-member class
with the packing-bound comparison, and logistic regression with the
regularized star pipeline. Writes plot.svg for the gap experiment.
"""

import pathlib

from starloc import ExperimentConfig, bound_vs_empirical, run_rate_experiment
from starloc.svg import rate_plot_svg

REPS = 40  # acceptance runs use 200; this keeps the demo under a minute


def show(result):
    for est, rep in sorted(result.reports.items()):
        print(f"  {est:5s} slope {rep.slope:+.3f}  r2 {rep.r_squared:.3f}")
        for row in rep.rows:
            print(f"        n={row.n:5d}  mean excess {row.mean:10.3e}  (se {row.se:.1e})")


print("two-point gap instance: the mixture rate beats member selection")
cfg = ExperimentConfig(name="nonconvex_gap", n_grid=(64, 128, 256, 512, 1024),
                       replications=REPS, seed=0, oracle_size=200_000)
result = run_rate_experiment(cfg)
show(result)
out = pathlib.Path(__file__).with_name("plot.svg")
out.write_text(rate_plot_svg("nonconvex_gap (demo scale)", result.reports))
print(f"  wrote {out.name}")

print("\np=3 aggregation over 16 constants, with the finite-class bound")
cfg = ExperimentConfig(name="ploss_rate", n_grid=(32, 64, 128, 256, 512),
                       replications=REPS, seed=0, oracle_size=200_000)
result = run_rate_experiment(cfg)
show(result)
for n, q95, bound in bound_vs_empirical(cfg, result):
    print(f"        n={n:5d}  empirical q95 {q95:9.3e}  <=  bound {bound:8.3f}")

print("\nlogistic regression, d=2, k=2, delta = 1/n")
cfg = ExperimentConfig(name="logistic_rate", n_grid=(128, 256, 512, 1024),
                       replications=REPS, seed=0, oracle_size=200_000,
                       delta="1/n", B=3.0)
result = run_rate_experiment(cfg)
show(result)
