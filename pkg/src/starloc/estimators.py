"""Empirical risk minimization and two-stage star aggregation.

The star fit minimizes empirical risk over the class, then over the union
of segments from that minimizer to every class member. Segments are
searched by golden section (the risk is convex along a segment whenever
the loss is convex in its prediction argument).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import LossModel, eval_loss, glm_loss
from .predictors import (
    FiniteClass,
    Linear,
    LinearBall,
    Predictor,
    Sample,
    SegmentClass,
    SimplexClass,
    StarMix,
    prediction_vector,
)

__all__ = [
    "StarFit",
    "empirical_risk",
    "erm_finite",
    "erm_linear",
    "line_search_segment",
    "star_fit",
    "erm_segment",
    "erm_simplex",
    "regularized_star_glm",
    "GlmStarPredictor",
]

GOLDEN_TOL = 1e-10
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class StarFit:
    """Result of the two-stage procedure.

    combined evaluates pointwise to lam * erm + (1 - lam) * partner in
    prediction (likelihood) space; star_risk <= erm_risk always, because
    the search segment contains lam = 1.
    """

    erm: Predictor
    partner: Predictor
    lam: float
    combined: Predictor
    erm_risk: float
    star_risk: float
    erm_index: int = 0
    partner_index: int = 0
    erm_preds: np.ndarray | None = None
    star_preds: np.ndarray | None = None


def empirical_risk(model: LossModel, predictor_or_preds, sample: Sample) -> float:
    """Mean loss over the sample; rejects out-of-domain predictions by index."""
    if isinstance(predictor_or_preds, Predictor):
        preds = prediction_vector(predictor_or_preds, sample)
    else:
        preds = np.asarray(predictor_or_preds, dtype=float)
    lo, hi = model.domain
    bad = np.nonzero((preds < lo - 1e-12) | (preds > hi + 1e-12))[0]
    if bad.size:
        raise ValueError(
            f"prediction at example {int(bad[0])} ({preds[bad[0]]!r}) "
            f"outside the {model.kind} loss domain [{lo}, {hi}]"
        )
    target = None if model.is_likelihood else np.asarray(sample.y, dtype=float)
    return float(np.mean(eval_loss(model, preds, target)))


def _risk_rows(model: LossModel, pred_matrix: np.ndarray, sample: Sample) -> np.ndarray:
    target = None if model.is_likelihood else np.asarray(sample.y, dtype=float)
    return eval_loss(model, pred_matrix, target).mean(axis=1)


def erm_finite(model: LossModel, cls: FiniteClass, sample: Sample):
    """Index and risk of the minimal-empirical-risk member; ties -> lowest index."""
    if len(cls) == 0:
        raise ValueError("empty class")
    preds = cls.prediction_matrix(sample)
    risks = _risk_rows(model, preds, sample)
    idx = int(np.argmin(risks))
    return idx, float(risks[idx])


def _golden_batch(risk_fn, n_segments: int, tol: float = GOLDEN_TOL):
    """Golden-section search over lam in [0, 1], run in lockstep per segment.

    risk_fn(lams) evaluates the per-segment risks at a vector of lams; one
    such call is made per iteration. The result is compared against both
    endpoints, so risk <= min(risk(0), risk(1)) up to roundoff.
    """
    lo = np.zeros(n_segments)
    hi = np.ones(n_segments)
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1 = risk_fn(x1)
    f2 = risk_fn(x2)
    while float(np.max(hi - lo)) > tol:
        left = f1 <= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x1 = hi - _INVPHI * (hi - lo)
        x2 = lo + _INVPHI * (hi - lo)
        vals = risk_fn(np.where(left, x1, x2))
        f1, f2 = np.where(left, vals, f2), np.where(left, f1, vals)
    lam = 0.5 * (lo + hi)
    candidates = np.stack([lam, np.zeros(n_segments), np.ones(n_segments)])
    risks = np.stack([risk_fn(candidates[i]) for i in range(3)])
    best = np.argmin(risks, axis=0)
    take = np.arange(n_segments)
    return candidates[best, take], risks[best, take]


def line_search_segment(model: LossModel, preds_a, preds_b, targets=None):
    """Minimize lam -> mean psi(lam a + (1 - lam) b) by golden section.

    Returns (lam, risk); for identical endpoints returns lam = 1.
    """
    a = np.asarray(preds_a, dtype=float)
    b = np.asarray(preds_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("segment endpoints must share a shape")
    if model.is_likelihood:
        t = None
    elif targets is None:
        raise ValueError(f"{model.kind} loss requires targets")
    else:
        t = np.asarray(targets, dtype=float)
    if np.array_equal(a, b):
        return 1.0, float(np.mean(eval_loss(model, a, t)))

    def risk_fn(lams):
        mix = lams[0] * a + (1.0 - lams[0]) * b
        return np.array([np.mean(eval_loss(model, mix, t))])

    lam, risk = _golden_batch(risk_fn, 1)
    return float(lam[0]), float(risk[0])


def _star_over_matrix(model: LossModel, preds: np.ndarray, sample: Sample):
    """Two-stage minimization over the rows of a prediction matrix.

    Returns (erm_index, erm_risk, partner_index, lam, star_preds, star_risk).
    """
    target = None if model.is_likelihood else np.asarray(sample.y, dtype=float)
    risks = _risk_rows(model, preds, sample)
    erm_idx = int(np.argmin(risks))
    erm_risk = float(risks[erm_idx])
    a = preds[erm_idx]

    if model.is_likelihood:
        # Mixes of in-domain likelihoods stay positive; skip the wrapper checks.
        def risk_fn(lams):
            mix = lams[:, None] * a[None, :] + (1.0 - lams[:, None]) * preds
            return -np.log(mix).mean(axis=1)

    else:

        def risk_fn(lams):
            mix = lams[:, None] * a[None, :] + (1.0 - lams[:, None]) * preds
            return eval_loss(model, mix, target).mean(axis=1)

    lams, seg_risks = _golden_batch(risk_fn, preds.shape[0])
    # The self-segment is degenerate: every mix reproduces the stage-1
    # minimizer (up to float mixing noise), so pin it exactly.
    lams[erm_idx] = 1.0
    seg_risks[erm_idx] = erm_risk
    partner_idx = int(np.argmin(seg_risks))
    star_risk = float(seg_risks[partner_idx])
    lam = float(lams[partner_idx])
    if star_risk > erm_risk:
        partner_idx, lam, star_risk = erm_idx, 1.0, erm_risk
    star_preds = lam * a + (1.0 - lam) * preds[partner_idx]
    return erm_idx, erm_risk, partner_idx, lam, star_preds, star_risk


def star_fit(model: LossModel, cls: FiniteClass, sample: Sample) -> StarFit:
    """Stage 1: ERM over the class; stage 2: best segment from the ERM."""
    members = cls.effective_members()
    preds = cls.prediction_matrix(sample)
    erm_idx, erm_risk, partner_idx, lam, star_preds, star_risk = _star_over_matrix(
        model, preds, sample
    )
    erm = members[erm_idx]
    partner = members[partner_idx]
    return StarFit(
        erm=erm,
        partner=partner,
        lam=lam,
        combined=StarMix(lam, erm, partner),
        erm_risk=erm_risk,
        star_risk=star_risk,
        erm_index=erm_idx,
        partner_index=partner_idx,
        erm_preds=preds[erm_idx],
        star_preds=star_preds,
    )


def _stationary_lambda(model: LossModel, a, b, target) -> float:
    """Root of the (increasing) segment risk derivative, to float resolution.

    Golden section alone localizes the minimizer only to ~sqrt(eps) because
    risk comparisons near the optimum are float noise; margin checks at
    1e-8 need genuine stationarity, and the derivative is exact.
    """
    from .losses import grad_loss

    diff = a - b
    if np.array_equal(a, b):
        return 1.0

    def deriv(lam):
        mix = lam * a + (1.0 - lam) * b
        return float(np.mean(grad_loss(model, mix, target) * diff))

    if deriv(0.0) >= 0.0:
        return 0.0
    if deriv(1.0) <= 0.0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if deriv(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def erm_segment(model: LossModel, seg: SegmentClass, sample: Sample):
    """Continuous ERM over a segment class.

    The minimizing weight comes from derivative bisection (stationary to
    float resolution); returns (preds, risk, lam).
    """
    target = None if model.is_likelihood else np.asarray(sample.y, dtype=float)
    lam = _stationary_lambda(model, seg.a, seg.b, target)
    preds = lam * seg.a + (1.0 - lam) * seg.b
    risk = float(np.mean(eval_loss(model, preds, target)))
    return preds, risk, lam


def erm_simplex(model: LossModel, simplex: SimplexClass, sample: Sample, rounds: int = 100):
    """Continuous ERM over a 2-simplex by coordinate-wise descent.

    The objective is convex in the barycentric weights; each sweep solves
    the two 1-D slices exactly (derivative bisection), so the sweep limit
    is rarely reached.
    """
    target = None if model.is_likelihood else np.asarray(sample.y, dtype=float)

    def risk_at(w1, w2):
        return float(np.mean(eval_loss(model, simplex.point(w1, w2), target)))

    w1, w2 = 1.0 / 3.0, 1.0 / 3.0
    for _ in range(rounds):
        prev = (w1, w2)
        cap = 1.0 - w2
        if cap > 0:
            # slice point: lam * (cap * a + w2 * b + (1 - cap - w2) c) + (1 - lam) * (w2 * b + (1 - w2) c)
            end1 = simplex.point(cap, w2)
            end0 = simplex.point(0.0, w2)
            w1 = cap * _stationary_lambda(model, end1, end0, target)
        cap = 1.0 - w1
        if cap > 0:
            end1 = simplex.point(w1, cap)
            end0 = simplex.point(w1, 0.0)
            w2 = cap * _stationary_lambda(model, end1, end0, target)
        if abs(w1 - prev[0]) + abs(w2 - prev[1]) < 1e-14:
            break
    return simplex.point(w1, w2), risk_at(w1, w2), (w1, w2)


def _glm_risk_and_grad(W, X, y_idx, want_grad: bool = True):
    """Raw multiclass log loss logsumexp(z) - z_y, convex in W."""
    n = X.shape[0]
    Z = X @ W.T
    zmax = Z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(Z - zmax).sum(axis=1))
    risk = float(np.mean(lse - Z[np.arange(n), y_idx]))
    if not want_grad:
        return risk, None
    P = np.exp(Z - zmax)
    P /= P.sum(axis=1, keepdims=True)
    R = P.copy()
    R[np.arange(n), y_idx] -= 1.0
    grad = R.T @ X / n
    return risk, grad


def _square_risk_and_grad(W, X, y, want_grad: bool = True):
    u = X @ W.T
    r = u[:, 0] - y
    risk = float(np.mean(r * r))
    if not want_grad:
        return risk, None
    grad = (2.0 / X.shape[0]) * (r @ X)[None, :]
    return risk, grad


def erm_linear(
    model: LossModel,
    ball: LinearBall,
    sample: Sample,
    steps: int = 500,
    step_size: float | None = None,
    seed: int = 0,
    init: str = "zeros",
    return_history: bool = False,
):
    """Projected gradient descent over the row-norm ball.

    Backtracking (halve on non-decrease) keeps the risk monotone; the
    initial step is curvature-scaled unless step_size is given. init
    'random' draws the starting point from the ball with the given seed.
    """
    X = sample.X
    if X.shape[1] != ball.d:
        raise ValueError("sample dimension does not match the ball")
    if model.kind in ("glm", "log"):
        y_idx = np.asarray(sample.y, dtype=int)

        def objective(W, want_grad=True):
            return _glm_risk_and_grad(W, X, y_idx, want_grad)

    elif model.kind == "square":
        y = np.asarray(sample.y, dtype=float)

        def objective(W, want_grad=True):
            return _square_risk_and_grad(W, X, y, want_grad)

    else:
        raise ValueError(f"erm_linear supports glm/square, not {model.kind}")

    if init == "random":
        W = np.random.default_rng((int(seed), 7001)).standard_normal((ball.k, ball.d))
        W = ball.project(W * ball.B / max(np.linalg.norm(W), 1e-300))
    else:
        W = np.zeros((ball.k, ball.d))
    risk, grad = objective(W)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient at the initial point")
    h = step_size if step_size is not None else 1.0 / max(np.mean(np.sum(X * X, axis=1)), 1e-12)
    history = [risk]
    stalled = 0
    for _ in range(steps):
        accepted = False
        for _ in range(60):
            W_new = ball.project(W - h * grad)
            risk_new, _ = objective(W_new, want_grad=False)
            if risk_new <= risk:
                accepted = True
                break
            h *= 0.5
        if not accepted or h < 1e-18:
            break
        moved = float(np.max(np.abs(W_new - W)))
        drop = risk - risk_new
        W = W_new
        risk, grad = objective(W)
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("non-finite gradient during descent")
        history.append(risk)
        h *= 1.3
        stalled = stalled + 1 if drop < 1e-12 * (1.0 + abs(risk)) else 0
        if stalled >= 8 or moved < 1e-13 * (1.0 + float(np.max(np.abs(W)))):
            break
    fitted = Linear(ball.project(W), ball.B, ball.link, ball.delta)
    if return_history:
        return fitted, np.asarray(history)
    return fitted


@dataclass(frozen=True, eq=False)
class GlmStarPredictor:
    """Mixture of two regularized softmax predictors, plus its score transform.

    prob(x) = lam * q_left(x) + (1 - lam) * q_right(x) stays on the simplex
    with components >= delta/k; scores(x) = ln prob(x) maps it back through
    the link's right inverse, giving an (improper) score-space predictor.
    """

    lam: float
    left: Linear
    right: Linear

    def probs(self, X: np.ndarray) -> np.ndarray:
        return self.lam * self.left.probs(X) + (1.0 - self.lam) * self.right.probs(X)

    def scores(self, X: np.ndarray) -> np.ndarray:
        return np.log(self.probs(X))

    def likelihoods(self, X: np.ndarray, y_idx: np.ndarray) -> np.ndarray:
        p = self.probs(X)
        return p[np.arange(p.shape[0]), np.asarray(y_idx, dtype=int)]

    def describe(self) -> dict:
        return {
            "type": "glm_star",
            "lam": self.lam,
            "left": self.left.describe(),
            "right": self.right.describe(),
        }


def _partner_polish(ball, sample, f_hat_lik, lam, W, delta, steps=25):
    """Descent on the partner weights with the mixture likelihood fixed at lam."""
    X = sample.X
    n = sample.n
    y_idx = np.asarray(sample.y, dtype=int)
    k = ball.k

    def mixed_risk_grad(Wp, want_grad=True):
        Z = X @ Wp.T
        zmax = Z.max(axis=1, keepdims=True)
        P = np.exp(Z - zmax)
        P /= P.sum(axis=1, keepdims=True)
        q = (1.0 - delta) * P[np.arange(n), y_idx] + delta / k
        mix = lam * f_hat_lik + (1.0 - lam) * q
        risk = float(np.mean(-np.log(mix)))
        if not want_grad:
            return risk, None
        w = -(1.0 - lam) * (1.0 - delta) / (mix * n)
        py = P[np.arange(n), y_idx]
        R = -P * (w * py)[:, None]
        R[np.arange(n), y_idx] += w * py
        return risk, R.T @ X
    W = np.atleast_2d(W).copy()
    risk, grad = mixed_risk_grad(W)
    h = 1.0 / max(np.mean(np.sum(X * X, axis=1)), 1e-12)
    for _ in range(steps):
        ok = False
        for _ in range(40):
            W_new = ball.project(W - h * grad)
            r_new, _ = mixed_risk_grad(W_new, want_grad=False)
            if r_new <= risk:
                ok = True
                break
            h *= 0.5
        if not ok:
            break
        W = W_new
        risk, grad = mixed_risk_grad(W)
        h *= 1.3
    return W, risk


def regularized_star_glm(
    model_log: LossModel,
    ball: LinearBall,
    sample: Sample,
    delta: float,
    n_candidates: int = 64,
    seed: int = 0,
    refine_rounds: int = 3,
):
    """Star aggregation in the delta-regularized likelihood class.

    Candidates are the projected-gradient ERM plus seeded uniform draws from
    the ball; every candidate's probability vector is mixed toward uniform
    before the log-loss star fit. Returns (StarFit, GlmStarPredictor).
    """
    if not 0.0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 1/2]")
    if model_log.kind not in ("log", "glm"):
        raise ValueError("regularized star aggregation expects a likelihood loss")
    model = glm_loss(ball.k, delta)
    raw_ball = LinearBall(ball.d, ball.k, ball.B, ball.link, None)
    reg_ball = LinearBall(ball.d, ball.k, ball.B, ball.link, delta)
    erm_pred = erm_linear(model, raw_ball, sample, seed=seed)
    rng = np.random.default_rng((int(seed), 7002))
    candidates = [Linear(erm_pred.W, ball.B, ball.link, delta)]
    candidates += [reg_ball.random_member(rng) for _ in range(n_candidates)]

    cls = FiniteClass(candidates)
    fit = star_fit(model, cls, sample)
    lam = fit.lam
    f_hat_lik = fit.erm_preds
    partner = fit.partner
    star_risk = fit.star_risk
    y_idx = np.asarray(sample.y, dtype=int)

    for _ in range(refine_rounds):
        W_p, _ = _partner_polish(reg_ball, sample, f_hat_lik, lam, partner.W, delta)
        cand = Linear(W_p, ball.B, ball.link, delta)
        cand_lik = prediction_vector(cand, sample)
        new_lam, new_risk = line_search_segment(model, f_hat_lik, cand_lik)
        if new_risk < star_risk - 1e-15:
            partner, lam, star_risk = cand, new_lam, new_risk
        else:
            break

    erm_member = candidates[0]
    star_preds = lam * f_hat_lik + (1.0 - lam) * prediction_vector(partner, sample)
    final = StarFit(
        erm=erm_member,
        partner=partner,
        lam=lam,
        combined=StarMix(lam, erm_member, partner),
        erm_risk=fit.erm_risk,
        star_risk=star_risk,
        erm_index=0,
        partner_index=fit.partner_index,
        erm_preds=f_hat_lik,
        star_preds=star_preds,
    )
    return final, GlmStarPredictor(lam, erm_member, partner)
