"""Synthetic rate experiments with seeded Monte Carlo excess-risk estimation.

Population risks are estimated on a large held-out oracle sample shared by
all predictors in a replication (common random numbers), and per-sample-size
means are fitted by least squares on the log-log scale.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .bounds import BoundInputs, packing_bound
from .complexity import finite_empirical_profile
from .estimators import erm_finite, regularized_star_glm, star_fit
from .losses import LossModel, eval_loss, glm_loss, link_softmax, p_loss, square_loss
from .predictors import Constant, FiniteClass, LinearBall, Predictor, Sample, prediction_vector

__all__ = [
    "ExperimentConfig",
    "RateRow",
    "RateReport",
    "ExperimentResult",
    "gen_logistic_data",
    "gen_twopoint_data",
    "gen_ploss_data",
    "population_excess_risk",
    "fit_rate",
    "run_rate_experiment",
    "bound_vs_empirical",
    "results_csv",
    "summary_dict",
]

EXPERIMENT_NAMES = ("logistic_rate", "ploss_rate", "nonconvex_gap", "bound_vs_empirical")

_ORACLE_TAG = 777
_DATA_TAG = 101


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration for one named experiment.

    delta may be a float or the string "1/n" (resolved per sample size).
    W_true defaults to a fixed well-specified parameter inside the ball.
    """

    name: str
    n_grid: tuple[int, ...]
    replications: int = 200
    seed: int = 0
    oracle_size: int = 1_000_000
    p: float = 3.0
    B: float = 1.0
    d: int = 2
    k: int = 2
    delta: float | str | None = None
    sigma: float = 1.0
    c: float = 1.0
    noise: float = 0.2
    center: float = 0.2
    members: int = 16
    n_candidates: int = 64
    W_true: tuple | None = None
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.name not in EXPERIMENT_NAMES:
            raise ValueError(f"unknown experiment {self.name!r}")
        if any(b >= a for a, b in zip(self.n_grid[1:], self.n_grid)):
            raise ValueError("n_grid must be strictly increasing")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.oracle_size < 100_000:
            raise ValueError("oracle_size must be at least 1e5")

    def delta_at(self, n: int) -> float:
        if self.delta == "1/n":
            return 1.0 / n
        if self.delta is None:
            return 0.01
        return float(self.delta)

    def w_true(self) -> np.ndarray:
        if self.W_true is not None:
            return np.asarray(self.W_true, dtype=float)
        base = np.zeros((self.k, self.d))
        base[0, 0], base[0, min(1, self.d - 1)] = 1.0, 0.5
        base[1, 0], base[1, min(1, self.d - 1)] = -1.0, -0.5
        return base


@dataclass(frozen=True)
class RateRow:
    n: int
    mean: float
    se: float


@dataclass(frozen=True)
class RateReport:
    rows: tuple[RateRow, ...]
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    reports: dict
    # (estimator, n, replication, excess) sorted by (estimator, n, replication)
    records: tuple


def _rng(*keys) -> np.random.Generator:
    return np.random.default_rng(tuple(int(k) for k in keys))


def gen_logistic_data(n: int, d: int, k: int, B: float, W_true, seed) -> Sample:
    """Standard-normal features clipped to radius 10; labels from softmax(W x)."""
    W = np.asarray(W_true, dtype=float)
    if np.any(np.linalg.norm(W, axis=1) > B + 1e-9):
        raise ValueError("W_true rows must respect the norm bound")
    rng = _rng(*(seed if isinstance(seed, tuple) else (seed,)))
    X = rng.standard_normal((n, d))
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    X *= np.minimum(1.0, 10.0 / np.maximum(norms, 1e-300))
    probs = link_softmax(X @ W.T)
    u = rng.random(n)
    y = (probs.cumsum(axis=1) < u[:, None]).sum(axis=1).clip(0, k - 1)
    return Sample(X, y.astype(int))


def gen_twopoint_data(n: int, c: float, b: float, sigma: float, seed):
    """Gaussian target around b with the two-constant class {+c, -c}.

    The normal draw is clipped at 8 sigma (mass ~1e-15) so targets stay in
    the square-loss domain used by the experiment.
    """
    if not abs(b) < c:
        raise ValueError("|b| must be smaller than c")
    rng = _rng(*(seed if isinstance(seed, tuple) else (seed,)))
    y = b + sigma * np.clip(rng.standard_normal(n), -8.0, 8.0)
    sample = Sample(np.zeros((n, 1)), y)
    cls = FiniteClass([Constant(c), Constant(-c)])
    return sample, cls


def gen_ploss_data(n: int, center: float, scale: float, seed) -> Sample:
    """Two-atom noise around `center`: +2*scale w.p. 1/5, -scale w.p. 4/5.

    E[eps^2 sgn eps] = 0, so `center` is the population p=3 risk minimizer,
    while the mean sits at center - 0.4*scale (off the class grid).
    """
    rng = _rng(*(seed if isinstance(seed, tuple) else (seed,)))
    eps = np.where(rng.random(n) < 0.2, 2.0 * scale, -scale)
    return Sample(np.zeros((n, 1)), center + eps)


def ploss_members(config: ExperimentConfig) -> FiniteClass:
    """Evenly spaced constant predictors spanning [-B, B]."""
    vals = np.linspace(-config.B, config.B, config.members)
    return FiniteClass([Constant(float(v)) for v in vals])


def population_excess_risk(
    model: LossModel,
    predictor,
    oracle_sample: Sample,
    cls: FiniteClass | None = None,
    f_star: Predictor | None = None,
) -> float:
    """Oracle-sample risk of the predictor minus the comparator's.

    The comparator is f_star when the true minimizer is known analytically,
    otherwise the class member with the smallest oracle risk.
    """
    if isinstance(predictor, Predictor):
        preds = prediction_vector(predictor, oracle_sample)
    else:
        preds = np.asarray(predictor, dtype=float)
    target = None if model.is_likelihood else np.asarray(oracle_sample.y, dtype=float)
    risk = float(np.mean(eval_loss(model, preds, target)))
    if f_star is not None:
        ref = float(np.mean(eval_loss(model, prediction_vector(f_star, oracle_sample), target)))
    elif cls is not None:
        mat = cls.prediction_matrix(oracle_sample)
        ref = float(eval_loss(model, mat, target).mean(axis=1).min())
    else:
        raise ValueError("need a class or an explicit comparator")
    return risk - ref


def fit_rate(rows) -> tuple[float, float, float]:
    """Least squares of ln(mean) on ln(n); nonpositive means are dropped.

    Returns (slope, intercept, r_squared); r_squared is 1.0 when the
    residuals vanish (including the degenerate all-equal case).
    """
    pts = []
    for n, mean in rows:
        if mean <= 0.0:
            warnings.warn(f"dropping nonpositive mean excess at n={n}")
            continue
        pts.append((math.log(n), math.log(mean)))
    if len(pts) < 3:
        raise ValueError("need at least 3 rows with positive means")
    x = np.array([p[0] for p in pts])
    z = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(x, z, 1)
    resid = z - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((z - z.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


# ---------------------------------------------------------------------------
# per-replication runners (module level so process pools can pickle the work)


def _twopoint_oracle(config: ExperimentConfig, n: int, b: float) -> Sample:
    rng = _rng(config.seed, n, _ORACLE_TAG)
    y = b + config.sigma * np.clip(rng.standard_normal(config.oracle_size), -8.0, 8.0)
    return Sample(np.zeros((config.oracle_size, 1)), y)


def _ploss_oracle(config: ExperimentConfig) -> Sample:
    rng = _rng(config.seed, _ORACLE_TAG)
    eps = np.where(rng.random(config.oracle_size) < 0.2, 2.0 * config.noise, -config.noise)
    return Sample(np.zeros((config.oracle_size, 1)), config.center + eps)


def _logistic_oracle(config: ExperimentConfig):
    W = config.w_true()
    rng = _rng(config.seed, _ORACLE_TAG)
    X = rng.standard_normal((config.oracle_size, config.d))
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    X *= np.minimum(1.0, 10.0 / np.maximum(norms, 1e-300))
    probs = link_softmax(X @ W.T)
    u = rng.random(config.oracle_size)
    y = (probs.cumsum(axis=1) < u[:, None]).sum(axis=1).clip(0, config.k - 1)
    lik_true = probs[np.arange(config.oracle_size), y]
    ref_loss = float(np.mean(-np.log(lik_true)))
    return X, y.astype(int), ref_loss


def _block_nonconvex(config: ExperimentConfig, n: int, reps: range) -> list:
    b = config.sigma / (4.0 * math.sqrt(n))
    model = square_loss(config.c + 8.0 * config.sigma)
    oracle = _twopoint_oracle(config, n, b)
    best_member = Constant(config.c)
    hull_opt = Constant(b)
    out = []
    for rep in reps:
        sample, cls = gen_twopoint_data(n, config.c, b, config.sigma, (config.seed, n, rep, _DATA_TAG))
        idx, _ = erm_finite(model, cls, sample)
        fit = star_fit(model, cls, sample)
        e_erm = population_excess_risk(model, cls.members[idx], oracle, f_star=best_member)
        e_star = population_excess_risk(model, fit.combined, oracle, f_star=hull_opt)
        out.append(("erm", n, rep, e_erm))
        out.append(("star", n, rep, e_star))
    return out


def _block_ploss(config: ExperimentConfig, n: int, reps: range) -> list:
    model = p_loss(config.p, config.B)
    cls = ploss_members(config)
    oracle = _ploss_oracle(config)
    # The comparator is the oracle-risk-minimizing member, fixed per config.
    mat = cls.prediction_matrix(oracle)
    member_risks = eval_loss(model, mat, np.asarray(oracle.y, dtype=float)).mean(axis=1)
    ref = float(member_risks.min())
    target = np.asarray(oracle.y, dtype=float)
    out = []
    for rep in reps:
        sample = gen_ploss_data(n, config.center, config.noise, (config.seed, n, rep, _DATA_TAG))
        fit = star_fit(model, cls, sample)
        # Mixes of constants are constant, so one scalar risk eval suffices.
        star_val = float(fit.star_preds[0])
        risk = float(np.mean(np.abs(star_val - target) ** config.p))
        out.append(("star", n, rep, risk - ref))
    return out


def _regularized_likelihoods(W, X, y_idx, delta: float, k: int) -> np.ndarray:
    """Observed-label likelihoods of (1-d) softmax(Wx) + d/k without full probs.

    Score gaps are bounded by 2 B max||x||, so the direct exp is safe.
    """
    Z = X @ np.asarray(W, dtype=float).T
    Zy = Z[np.arange(Z.shape[0]), y_idx]
    lik = 1.0 / np.exp(Z - Zy[:, None]).sum(axis=1)
    return (1.0 - delta) * lik + delta / k


def _block_logistic(config: ExperimentConfig, n: int, reps: range) -> list:
    delta = config.delta_at(n)
    model = glm_loss(config.k, delta)
    ball = LinearBall(config.d, config.k, config.B, "softmax", None)
    Xor, yor, ref_loss = _logistic_oracle(config)
    W_true = config.w_true()
    out = []
    for rep in reps:
        sample = gen_logistic_data(
            n, config.d, config.k, config.B, W_true, (config.seed, n, rep, _DATA_TAG)
        )
        fit, star_pred = regularized_star_glm(
            model, ball, sample, delta, n_candidates=config.n_candidates, seed=_mix_seed(config.seed, n, rep)
        )
        q_left = _regularized_likelihoods(star_pred.left.W, Xor, yor, delta, config.k)
        q_right = _regularized_likelihoods(star_pred.right.W, Xor, yor, delta, config.k)
        lik_star = star_pred.lam * q_left + (1.0 - star_pred.lam) * q_right
        e_star = float(np.mean(-np.log(lik_star))) - ref_loss
        e_erm = float(np.mean(-np.log(q_left))) - ref_loss
        out.append(("erm", n, rep, e_erm))
        out.append(("star", n, rep, e_star))
    return out


def _mix_seed(seed: int, n: int, rep: int) -> int:
    # single int for APIs that take one; SeedSequence-mixed for independence
    return int(np.random.SeedSequence((int(seed), int(n), int(rep))).generate_state(1)[0])


_BLOCKS = {
    "nonconvex_gap": _block_nonconvex,
    "ploss_rate": _block_ploss,
    "logistic_rate": _block_logistic,
    "bound_vs_empirical": _block_ploss,
}


def _run_block(config_dict: dict, n: int, lo: int, hi: int) -> list:
    config = ExperimentConfig(**config_dict)
    return _BLOCKS[config.name](config, n, range(lo, hi))


def run_rate_experiment(config: ExperimentConfig, n_jobs: int | None = None) -> ExperimentResult:
    """Run every (n, replication) cell and fit the log-log rates.

    Deterministic for a fixed config and seed: replication seeds derive from
    (seed, n, rep) and aggregation folds in (n, rep) order regardless of
    scheduling, so parallel and serial runs emit identical results.
    """
    jobs = config.jobs if n_jobs is None else n_jobs
    cfg = asdict(config)
    tasks = []
    if jobs > 1:
        per = max(1, math.ceil(config.replications / jobs))
        for n in config.n_grid:
            for lo in range(0, config.replications, per):
                tasks.append((n, lo, min(lo + per, config.replications)))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_block, cfg, *t) for t in tasks]
            blocks = [f.result() for f in futures]
    else:
        blocks = [
            _run_block(cfg, n, 0, config.replications) for n in config.n_grid
        ]
    records = [rec for block in blocks for rec in block]
    records.sort(key=lambda r: (r[0], r[1], r[2]))
    estimators = sorted({r[0] for r in records})
    reports = {}
    for est in estimators:
        rows = []
        for n in config.n_grid:
            ex = np.array([r[3] for r in records if r[0] == est and r[1] == n])
            mean = float(ex.mean())
            se = float(ex.std(ddof=1) / math.sqrt(len(ex))) if len(ex) > 1 else 0.0
            if mean < -max(1e-12, 3.0 * se):
                raise RuntimeError(
                    f"negative mean excess {mean:.3e} beyond 3 SE at n={n} "
                    f"({est}): oracle inconsistency"
                )
            rows.append(RateRow(n, mean, se))
        slope, intercept, r2 = fit_rate([(r.n, r.mean) for r in rows])
        reports[est] = RateReport(tuple(rows), slope, intercept, r2)
    return ExperimentResult(config, reports, tuple(records))


def bound_vs_empirical(config: ExperimentConfig, result: ExperimentResult | None = None):
    """Per sample size: empirical 95th-percentile star excess and the packing bound.

    The entropy profile covers the finite class's loss vectors on a seeded
    size-n sample, with the mixture-class correction; rho = 0.05, eps = 1/n.
    """
    if result is None:
        result = run_rate_experiment(config)
    model = p_loss(config.p, config.B)
    cls = ploss_members(config)
    rows = []
    for n in config.n_grid:
        ex = np.array([r[3] for r in result.records if r[0] == "star" and r[1] == n])
        q95 = float(np.quantile(ex, 0.95))
        sample = gen_ploss_data(n, config.center, config.noise, (config.seed, n, 0, _DATA_TAG))
        loss_vectors = eval_loss(
            model, cls.prediction_matrix(sample), np.asarray(sample.y, dtype=float)
        )
        profile = finite_empirical_profile(vectors=loss_vectors, star_hull_correction=True)
        inputs = BoundInputs(
            n=n, rho=0.05, m=model.m, eta=model.eta, eps=1.0 / n, entropy=profile
        )
        rows.append((n, q95, packing_bound(inputs)))
    return rows


def results_csv(result: ExperimentResult) -> str:
    """RFC-4180-style CSV of the raw records."""
    lines = ["experiment,estimator,n,replication,excess_risk"]
    for est, n, rep, excess in result.records:
        lines.append(f"{result.config.name},{est},{n},{rep},{excess!r}")
    return "\n".join(lines) + "\n"


def summary_dict(result: ExperimentResult) -> dict:
    """JSON-ready summary: per-estimator fits, rows, and the config echo.

    The echo drops the worker count: results are scheduling-invariant, so
    artifacts must not depend on it.
    """
    cfg = asdict(result.config)
    cfg.pop("jobs", None)
    cfg["n_grid"] = list(result.config.n_grid)
    if cfg.get("W_true") is not None:
        cfg["W_true"] = np.asarray(cfg["W_true"]).tolist()
    estimators = {}
    for est, report in sorted(result.reports.items()):
        estimators[est] = {
            "slope": report.slope,
            "intercept": report.intercept,
            "r_squared": report.r_squared,
            "rows": [[row.n, row.mean, row.se] for row in report.rows],
        }
    return {"config": cfg, "seed": result.config.seed, "estimators": estimators}
