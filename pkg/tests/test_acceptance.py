"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion
lines as they complete. The experiment fixtures run the full desk-scale
configurations, so this module takes several minutes.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from starloc.bounds import BoundInputs, chaining_bound, glm_bound, packing_bound
from starloc.cli import main
from starloc.complexity import (
    constant_profile,
    offset_complexity_mc,
    parametric_profile,
    power_law_profile,
)
from starloc.estimators import erm_segment, star_fit
from starloc.experiments import (
    ExperimentConfig,
    bound_vs_empirical,
    run_rate_experiment,
)
from starloc.losses import (
    eval_loss,
    glm_loss,
    grad_loss,
    log_loss,
    p_loss,
    sandwich_threshold,
    sandwich_upper_slack,
    square_loss,
)
from starloc.margins import bregman_gap, star_margin_check
from starloc.predictors import Constant, FiniteClass, Sample, SegmentClass, Tabular
from starloc.verify import run_suite


def _line(num: int, ok: bool, detail: str) -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    return ok


# --- heavy shared runs ------------------------------------------------------


@pytest.fixture(scope="module")
def logistic_run():
    cfg = ExperimentConfig(
        name="logistic_rate",
        n_grid=tuple(2**k for k in range(7, 14)),
        replications=200,
        seed=0,
        oracle_size=1_000_000,
        delta="1/n",
        B=3.0,
        d=2,
        k=2,
    )
    t0 = time.time()
    result = run_rate_experiment(cfg)
    return cfg, result, time.time() - t0


@pytest.fixture(scope="module")
def ploss_run():
    cfg = ExperimentConfig(
        name="ploss_rate",
        n_grid=tuple(2**k for k in range(5, 12)),
        replications=200,
        seed=0,
        oracle_size=1_000_000,
        p=3.0,
        B=1.0,
        members=16,
    )
    return cfg, run_rate_experiment(cfg)


@pytest.fixture(scope="module")
def nonconvex_run():
    cfg = ExperimentConfig(
        name="nonconvex_gap",
        n_grid=tuple(2**k for k in range(7, 14)),
        replications=200,
        seed=0,
        oracle_size=1_000_000,
        c=1.0,
        sigma=1.0,
    )
    return cfg, run_rate_experiment(cfg)


# --- criteria ---------------------------------------------------------------


def test_criterion_1_margin_suite():
    t0 = time.time()
    reports = run_suite("all", trials=10_000, grid=100, seed=0, tol=1e-8)
    elapsed = time.time() - t0
    violations = sum(r.violations for r in reports)
    saturation = [r for r in reports if "saturation" in r.inequality_id]
    ok = (
        violations == 0
        and elapsed < 60.0
        and len(saturation) >= 1
        and all(r.tolerance <= 1e-12 and r.worst_slack >= -1e-12 for r in saturation)
    )
    assert _line(
        1, ok, f"margin suite: {len(reports)} checks, {violations} violations, {elapsed:.1f}s"
    )


def test_criterion_2_star_margin_500_classes():
    violations = 0
    worst = math.inf
    classes = 0
    for tag, kind in enumerate(("square", "log")):
        for trial in range(250):
            rng = np.random.default_rng((20, trial, tag))
            m = int(rng.integers(2, 33))
            n = int(rng.integers(8, 129))
            if kind == "square":
                model = square_loss(1.0)
                cls = FiniteClass([Constant(v) for v in rng.uniform(-1, 1, m)])
                sample = Sample(np.zeros((n, 1)), rng.uniform(-1, 1, n))
                targets = sample.y
            else:
                delta = float(rng.uniform(0.05, 0.5))
                model = log_loss(delta)
                cls = FiniteClass([Constant(v) for v in rng.uniform(0, 1, m)], delta=delta)
                sample = Sample(np.zeros((n, 1)), np.zeros(n))
                targets = None
            fit = star_fit(model, cls, sample)
            rep = star_margin_check(
                model, cls.prediction_matrix(sample), targets, fit.star_preds,
                fit.star_risk, tolerance=1e-8,
            )
            violations += rep.violations
            worst = min(worst, rep.worst_slack)
            classes += 1
    ok = violations == 0 and classes == 500
    assert _line(2, ok, f"star margin over {classes} classes: {violations} violations, worst slack {worst:.2e}")


def test_criterion_3_convex_coincidence():
    worst = 0.0
    for trial in range(100):
        rng = np.random.default_rng((30, trial))
        model = square_loss(1.0) if trial % 2 == 0 else log_loss(0.1)
        lo, hi = model.domain
        n = int(rng.integers(8, 65))
        seg = SegmentClass(rng.uniform(lo, hi, n), rng.uniform(lo, hi, n), resolution=1e-3)
        targets = None if model.is_likelihood else rng.uniform(-1, 1, n)
        sample = Sample(np.zeros((n, 1)), np.zeros(n) if targets is None else targets)
        members = [Tabular(row) for row in seg.materialize()]
        fit = star_fit(model, FiniteClass(members), sample)
        _, seg_risk, _ = erm_segment(model, seg, sample)
        worst = max(worst, abs(fit.star_risk - seg_risk))
    ok = worst <= 1e-8
    assert _line(3, ok, f"star vs segment-ERM risk over 100 segments: worst gap {worst:.2e}")


def test_criterion_4_offset_sanity():
    sq = square_loss(1.0)
    sample0 = Sample(np.zeros((8, 1)), np.linspace(-0.5, 0.5, 8))
    singleton = FiniteClass([Constant(0.25)])
    exact_zero = True
    for kind, ref in (("mu_d", Constant(0.25)), ("exp_concave", None), ("uniform_convex", Constant(0.25))):
        est = offset_complexity_mc(sq, singleton, ref, sample0, kind, draws=8, seed=1)
        exact_zero &= est.mean == 0.0 and np.all(est.per_draw_sup == 0.0)

    monotone = True
    for inst in range(100):
        rng = np.random.default_rng((40, inst))
        n = int(rng.integers(8, 33))
        sample = Sample(np.zeros((n, 1)), rng.uniform(-1, 1, n))
        vals = rng.uniform(-1, 1, 5)
        small = FiniteClass([Constant(v) for v in vals[:3]])
        big = FiniteClass([Constant(v) for v in vals])
        a = offset_complexity_mc(sq, small, None, sample, "exp_concave", draws=8, seed=inst)
        b = offset_complexity_mc(sq, big, None, sample, "exp_concave", draws=8, seed=inst)
        monotone &= bool(np.all(b.per_draw_sup >= a.per_draw_sup - 1e-12))

    max_rel = 0.0
    for inst in range(20):
        rng = np.random.default_rng((41, inst))
        m = int(rng.integers(3, 6))
        cls = FiniteClass([Constant(v) for v in rng.uniform(-1, 1, m)])
        sample = Sample(np.zeros((32, 1)), rng.uniform(-1, 1, 32))
        a = offset_complexity_mc(sq, cls, None, sample, "exp_concave", draws=20, seed=inst, lambda_levels=20)
        b = offset_complexity_mc(sq, cls, None, sample, "exp_concave", draws=20, seed=inst, lambda_levels=40)
        max_rel = max(max_rel, abs(b.mean - a.mean) / abs(a.mean))

    ok = exact_zero and monotone and max_rel < 0.01
    assert _line(
        4, ok,
        f"offset sanity: singleton exact zero={exact_zero}, "
        f"nested monotone={monotone}, level-doubling drift {max_rel:.2e} < 1%",
    )


def test_criterion_5_logistic_fast_rate(logistic_run):
    cfg, result, elapsed = logistic_run
    rep = result.reports["star"]
    ok = -1.35 <= rep.slope <= -0.75 and rep.r_squared >= 0.9 and elapsed <= 900.0
    detail = (
        f"logistic star slope {rep.slope:.3f} in [-1.35, -0.75], "
        f"r2 {rep.r_squared:.3f} >= 0.9, single-thread {elapsed:.0f}s <= 900s"
    )
    if os.cpu_count() and os.cpu_count() >= 8:
        t0 = time.time()
        par = run_rate_experiment(cfg, n_jobs=8)
        par_elapsed = time.time() - t0
        ok = ok and par_elapsed <= 240.0 and par.records == result.records
        detail += f", 8-way {par_elapsed:.0f}s <= 240s"
    else:
        detail += f" (8-way clause skipped: {os.cpu_count()} CPU(s) available)"
    assert _line(5, ok, detail)


def test_criterion_6_ploss_fast_rate(ploss_run):
    _, result = ploss_run
    rep = result.reports["star"]
    ok = rep.slope <= -0.8 and rep.r_squared >= 0.9 and rep.slope < -0.75
    assert _line(
        6, ok,
        f"p=3 star slope {rep.slope:.3f} <= -0.8 (beats the 0.75 uniform-convexity "
        f"exponent), r2 {rep.r_squared:.3f} >= 0.9",
    )


def test_criterion_7_nonconvex_gap(nonconvex_run):
    _, result = nonconvex_run
    erm = result.reports["erm"]
    star = result.reports["star"]
    pairwise = all(
        s.mean <= e.mean + 3 * math.hypot(s.se, e.se)
        for s, e in zip(star.rows, erm.rows)
    )
    ok = (
        erm.slope >= -0.65
        and star.slope <= -0.8
        and erm.r_squared >= 0.85
        and star.r_squared >= 0.85
        and pairwise
    )
    assert _line(
        7, ok,
        f"gap instance: erm slope {erm.slope:.3f} >= -0.65 (r2 {erm.r_squared:.3f}), "
        f"star slope {star.slope:.3f} <= -0.8 (r2 {star.r_squared:.3f}), "
        f"star <= erm + 3se at every n: {pairwise}",
    )


def test_criterion_8_bound_dominance(ploss_run):
    cfg, result = ploss_run
    rows = bound_vs_empirical(cfg, result)
    ok = all(bound >= q95 for _, q95, bound in rows) and len(rows) == len(cfg.n_grid)
    margin = min(bound / max(q95, 1e-300) for _, q95, bound in rows)
    assert _line(
        8, ok,
        f"packing bound dominates q95 star excess at all {len(rows)} sizes "
        f"(min bound/empirical ratio {margin:.1f})",
    )


def test_criterion_9_bound_evaluators():
    packing = packing_bound(
        BoundInputs(n=1000, rho=0.05, m=1.0, eta=1.0, eps=0.01, entropy=constant_profile(10.0))
    )
    packing_oracle = 0.01 + 72.0 * (10.0 + math.log(20.0)) / 1000.0
    chaining = chaining_bound(
        BoundInputs(n=10**4, rho=1 - 1e-15, m=1.0, eta=1.0, alpha=0.0, gamma=1.0,
                    entropy=power_law_profile(1.0, 1.0))
    )
    chaining_oracle = 0.24 + 72.0 / 10**4 + 1.0 / math.sqrt(1.0 + 10**8)
    glm = glm_bound(BoundInputs(n=1000, rho=0.05), 2, 2, 1.0, 3.0)
    glm_oracle = 4.0 * math.log(3000.0) ** 2 * math.log(20.0) / 1000.0
    six_figs = (
        abs(packing - packing_oracle) <= 1e-6 * packing_oracle
        and abs(chaining - chaining_oracle) <= 1e-6 * chaining_oracle
        and abs(glm - glm_oracle) <= 1e-6 * glm_oracle
    )
    rng = np.random.default_rng(90)
    infimum_ok = True
    for prof in (
        power_law_profile(1.0, 1.0),
        power_law_profile(0.5, 1.5),
        parametric_profile(2, 2, 1.0, 3.0),
        constant_profile(4.0, star_hull_correction=True),
    ):
        free = chaining_bound(BoundInputs(n=2000, rho=0.3, m=2.0, eta=0.5, gamma=1.0, entropy=prof))
        for _ in range(20):
            alpha = float(rng.uniform(0.0, 1.0))
            pinned = chaining_bound(
                BoundInputs(n=2000, rho=0.3, m=2.0, eta=0.5, alpha=alpha, gamma=1.0, entropy=prof)
            )
            infimum_ok &= free <= pinned + 1e-9 * (1.0 + abs(free))
    ok = six_figs and infimum_ok
    assert _line(
        9, ok,
        f"worked bounds to 6 significant figures (packing {packing:.6g}, "
        f"chaining {chaining:.6g}, glm {glm:.6g}); infimum below 20 random alphas: {infimum_ok}",
    )


def test_criterion_10_gradients_identities():
    rel_ok = True
    for tag, model in enumerate(
        (square_loss(1.0), p_loss(3.0, 1.0), log_loss(0.01), glm_loss(2, 0.02))
    ):
        rng = np.random.default_rng((100, tag))
        lo, hi = model.domain
        if model.is_likelihood:
            x = rng.uniform(lo * (1 + 1e-3), hi - 1e-4, 10_000)
            t = None
            h = 6e-6 * x
        else:
            span = hi - lo
            t = rng.uniform(model.target_lo, model.target_hi, 10_000)
            off = rng.uniform(1e-3, span, 10_000) * rng.choice([-1.0, 1.0], 10_000)
            x = np.clip(t + off, lo + 5e-5 * span, hi - 5e-5 * span)
            z = np.abs(x - t)
            x, t, z = x[z > 1e-4], t[z > 1e-4], (np.abs(x - t))[z > 1e-4]
            h = 6e-6 * z
        fd = (eval_loss(model, x + h, t) - eval_loss(model, x - h, t)) / (2 * h)
        g = grad_loss(model, x, t)
        rel = np.abs(fd - g) / np.maximum(np.abs(g), 1e-12)
        rel_ok &= bool(rel.max() < 1e-6)

    lg = log_loss(1e-4)
    rng = np.random.default_rng(101)
    x = rng.uniform(1e-4, 1.0, 10_000)
    y = rng.uniform(1e-4, 1.0, 10_000)
    z = np.log(y) - np.log(x)
    ident = np.expm1(-z) + z
    gap_err = np.abs(bregman_gap(lg, x, y) - ident) / np.maximum(1.0, np.abs(ident))
    identity_ok = bool(gap_err.max() <= 1e-12)

    sandwich_ok = True
    for k in (1, 2, 3):
        deltas = np.linspace(1e-4, 0.5, 100)
        fs = np.linspace(0.0, 1.0, 100)
        for d in deltas:
            reg_loss = -np.log((1 - d) * fs + d / k)
            with np.errstate(divide="ignore"):
                raw = -np.log(fs)
            upper_ok = np.all(reg_loss <= raw + sandwich_upper_slack(d, k) + 1e-12)
            mask = fs >= sandwich_threshold(d, k)
            lower_ok = np.all(reg_loss[mask] >= raw[mask] - 2 * d - 1e-12)
            sandwich_ok &= bool(upper_ok and lower_ok)

    ok = rel_ok and identity_ok and sandwich_ok
    assert _line(
        10, ok,
        f"gradients vs central differences < 1e-6: {rel_ok}; log gap identity "
        f"<= 1e-12: {identity_ok}; regularization sandwich on the simplex "
        f"regularizer grid: {sandwich_ok}",
    )


def test_criterion_11_reproducibility(tmp_path):
    data = tmp_path / "data.csv"
    data.write_text("x1,y\n0.0,0.5\n0.0,-0.3\n0.0,0.8\n0.0,0.1\n")
    cls = tmp_path / "cls.json"
    cls.write_text(json.dumps({
        "variant": "finite",
        "members": [{"type": "constant", "value": 0.6}, {"type": "constant", "value": -0.2}],
    }))
    ok = True
    # verify twice
    v1, v2 = tmp_path / "v1.json", tmp_path / "v2.json"
    for out in (v1, v2):
        assert main(["verify", "--suite", "losses", "--trials", "1000", "--seed", "5",
                     "--out", str(out)]) == 0
    ok &= v1.read_bytes() == v2.read_bytes()
    # offset twice
    o1, o2 = tmp_path / "o1.json", tmp_path / "o2.json"
    for out in (o1, o2):
        assert main(["offset", str(data), "--class-spec", str(cls), "--loss", "square",
                     "--kind", "exp_concave", "--draws", "8", "--seed", "9", "--full",
                     "--out", str(out)]) == 0
    ok &= o1.read_bytes() == o2.read_bytes()
    # experiment rerun and parallel execution
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"n_grid": [32, 64, 128], "replications": 6,
                               "seed": 3, "oracle_size": 100000}))
    dirs = []
    for name, jobs in (("e1", "1"), ("e2", "1"), ("e3", "2")):
        out_dir = tmp_path / name
        assert main(["experiment", "--name", "nonconvex_gap", "--config", str(cfg),
                     "--out-dir", str(out_dir), "--jobs", jobs]) == 0
        dirs.append(out_dir)
    for artifact in ("results.csv", "summary.json", "plot.svg"):
        ok &= dirs[0].joinpath(artifact).read_bytes() == dirs[1].joinpath(artifact).read_bytes()
        ok &= dirs[0].joinpath(artifact).read_bytes() == dirs[2].joinpath(artifact).read_bytes()
    assert _line(11, ok, "byte-identical reruns for verify/offset/experiment, serial and 2-way parallel")
