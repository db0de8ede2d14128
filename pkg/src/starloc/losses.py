"""Scalar loss families with certified curvature constants.

Four families are supported: the square loss, the p-loss (p > 1), the
log loss on likelihood values, and the multiclass GLM likelihood loss.
Each model carries a range bound m, an exp-concavity modulus eta, a
Lipschitz bound, and a canonical convexity modulus mu(d(x, y)) that the
margin checks and offset estimators consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ModulusDescriptor",
    "LossModel",
    "square_loss",
    "p_loss",
    "log_loss",
    "glm_loss",
    "eval_loss",
    "grad_loss",
    "second_deriv_loss",
    "exp_concavity_eta",
    "lipschitz_bound",
    "range_bound",
    "canonical_modulus",
    "power_modulus",
    "uniform_convexity_alpha",
    "loss_increment_modulus",
    "with_delta",
    "regularize_likelihood",
    "regularize_probs",
    "link_softmax",
    "link_right_inverse",
    "sandwich_threshold",
    "sandwich_upper_slack",
]

# Likelihoods below this floor are outside every supported log-loss domain.
LOG_DOMAIN_FLOOR = 1e-12

# Absolute slack allowed when checking domain membership of float inputs
# (mixes of in-domain predictions can drift by a few ulp).
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class ModulusDescriptor:
    """Convexity modulus mu composed with a (pseudo)metric d.

    mu_kind: 'quadratic' (coef * z^2), 'power' (alpha * z^p), or
        'omega' (z - ln(1 + z)).
    d_kind: 'absolute', 'log_metric', 'loss_increment', or 'local_norm'.
    """

    mu_kind: str
    d_kind: str
    coef: float = 1.0
    power: float = 2.0
    alpha: float = 1.0

    def mu(self, z):
        z = np.asarray(z, dtype=float)
        if self.mu_kind == "quadratic":
            return self.coef * z * z
        if self.mu_kind == "power":
            return self.alpha * np.abs(z) ** self.power
        if self.mu_kind == "omega":
            return z - np.log1p(z)
        raise ValueError(f"unknown mu_kind {self.mu_kind!r}")

    def mu_inv(self, w):
        """Closed-form inverse of mu; defined for quadratic and power kinds."""
        w = np.asarray(w, dtype=float)
        if np.any(w < -_DOMAIN_SLACK):
            raise ValueError("mu_inv requires nonnegative input")
        w = np.maximum(w, 0.0)
        if self.mu_kind == "quadratic":
            return np.sqrt(w / self.coef)
        if self.mu_kind == "power":
            return (w / self.alpha) ** (1.0 / self.power)
        raise ValueError(f"mu_inv not available in closed form for {self.mu_kind!r}")


@dataclass(frozen=True)
class LossModel:
    """A scalar loss with its certified constants.

    domain is the closed prediction (or likelihood) interval, m the range
    bound (0 <= psi <= m on the domain), eta the exp-concavity modulus,
    lip the Lipschitz bound (may be inf), and modulus the canonical
    (mu, d) descriptor.
    """

    kind: str  # 'square' | 'p_loss' | 'log' | 'glm'
    domain: tuple[float, float]
    m: float
    eta: float
    lip: float
    modulus: ModulusDescriptor
    p: float | None = None
    B: float | None = None
    delta: float | None = None  # likelihood floor for log/glm
    k: int | None = None  # number of classes for glm
    target_lo: float | None = None
    target_hi: float | None = None

    @property
    def is_likelihood(self) -> bool:
        return self.kind in ("log", "glm")

    def check_pred(self, pred) -> None:
        pred = np.asarray(pred, dtype=float)
        lo, hi = self.domain
        if not np.all(np.isfinite(pred)):
            raise ValueError(f"{self.kind} loss: non-finite prediction")
        if np.any(pred < lo - _DOMAIN_SLACK) or np.any(pred > hi + _DOMAIN_SLACK):
            bad = float(pred.flat[int(np.argmax((pred < lo) | (pred > hi)))])
            raise ValueError(
                f"{self.kind} loss: prediction {bad} outside domain [{lo}, {hi}]"
            )

    def check_target(self, target) -> None:
        if self.is_likelihood or target is None:
            return
        target = np.asarray(target, dtype=float)
        lo, hi = self.target_lo, self.target_hi
        if np.any(target < lo - _DOMAIN_SLACK) or np.any(target > hi + _DOMAIN_SLACK):
            raise ValueError(f"{self.kind} loss: target outside [{lo}, {hi}]")

    def distance(self, x, y, target=None):
        """Canonical metric d(x, y) for this model."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        kind = self.modulus.d_kind
        if kind == "absolute":
            return np.abs(x - y)
        if kind == "log_metric":
            return np.abs(np.log(x) - np.log(y))
        if kind == "loss_increment":
            return np.abs(eval_loss(self, x, target) - eval_loss(self, y, target))
        raise ValueError(f"distance not defined for d_kind {kind!r}")


def exp_concavity_eta(kind: str, p: float | None = None, B: float | None = None) -> float:
    """Exp-concavity modulus eta for a loss family.

    p-loss (and square via p = 2): eta = (p - 1) / (p 2^p B^p); log: eta = 1.
    """
    if kind in ("log", "glm"):
        return 1.0
    if kind == "square":
        p = 2.0
    if p is None or p <= 1.0:
        raise ValueError("p-loss requires p > 1")
    if B is None or B <= 0.0:
        raise ValueError("p-loss requires B > 0")
    return (p - 1.0) / (p * 2.0**p * B**p)


def lipschitz_bound(
    kind: str,
    p: float | None = None,
    B: float | None = None,
    delta: float | None = None,
) -> float:
    """Lipschitz bound: p 2^p B^(p-1) for the p-loss, 1/delta for log on [delta, 1]."""
    if kind in ("log", "glm"):
        if delta is None or not 0.0 < delta <= 1.0:
            raise ValueError("log loss Lipschitz bound requires delta in (0, 1]")
        return 1.0 / delta
    if kind == "square":
        p = 2.0
    if p is None or p <= 1.0 or B is None or B <= 0.0:
        raise ValueError("p-loss requires p > 1 and B > 0")
    return p * 2.0**p * B ** (p - 1.0)


def range_bound(
    kind: str,
    p: float | None = None,
    B: float | None = None,
    delta: float | None = None,
) -> float:
    """Range bound m: 2^p B^p for the p-loss, ln(1/delta) for log on [delta, 1]."""
    if kind in ("log", "glm"):
        if delta is None or not 0.0 < delta <= 1.0:
            raise ValueError("log loss range bound requires delta in (0, 1]")
        return math.log(1.0 / delta)
    if kind == "square":
        p = 2.0
    if p is None or p <= 1.0 or B is None or B <= 0.0:
        raise ValueError("p-loss requires p > 1 and B > 0")
    return 2.0**p * B**p


def _log_quadratic_coef(floor: float) -> float:
    # mu(z) = z^2 / (2 ln(1/floor) v 4) on the log metric
    return 1.0 / max(2.0 * math.log(1.0 / floor), 4.0)


def square_loss(B: float = 1.0) -> LossModel:
    """Square loss (x - a)^2 on predictions and targets in [-B, B]."""
    if B <= 0:
        raise ValueError("B must be positive")
    return LossModel(
        kind="square",
        domain=(-B, B),
        m=range_bound("square", B=B),
        eta=exp_concavity_eta("square", B=B),
        lip=lipschitz_bound("square", B=B),
        modulus=ModulusDescriptor("quadratic", "absolute", coef=1.0),
        p=2.0,
        B=B,
        target_lo=-B,
        target_hi=B,
    )


def p_loss(p: float, B: float = 1.0) -> LossModel:
    """p-loss |x - a|^p, p > 1, on predictions and targets in [-B, B]."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    if B <= 0:
        raise ValueError("B must be positive")
    m = range_bound("p_loss", p=p, B=B)
    eta = exp_concavity_eta("p_loss", p=p, B=B)
    coef = 1.0 / max(2.0 * m, 4.0 / eta)
    return LossModel(
        kind="p_loss",
        domain=(-B, B),
        m=m,
        eta=eta,
        lip=lipschitz_bound("p_loss", p=p, B=B),
        modulus=ModulusDescriptor("quadratic", "loss_increment", coef=coef),
        p=p,
        B=B,
        target_lo=-B,
        target_hi=B,
    )


def log_loss(delta: float = LOG_DOMAIN_FLOOR) -> LossModel:
    """Log loss -ln(x) on likelihoods in [delta, 1]."""
    if not LOG_DOMAIN_FLOOR <= delta <= 1.0:
        raise ValueError(f"delta must lie in [{LOG_DOMAIN_FLOOR}, 1]")
    return LossModel(
        kind="log",
        domain=(delta, 1.0),
        m=range_bound("log", delta=delta),
        eta=1.0,
        lip=lipschitz_bound("log", delta=delta),
        modulus=ModulusDescriptor("quadratic", "log_metric", coef=_log_quadratic_coef(delta)),
        delta=delta,
    )


def glm_loss(k: int, delta: float) -> LossModel:
    """GLM likelihood loss -ln<phi(scores), y> with the uniform-mix floor.

    Probability vectors regularized by p -> (1-delta) p + delta/k keep every
    observed-label likelihood in [delta/k, 1], so the effective floor is delta/k.
    """
    if k < 2:
        raise ValueError("glm loss requires k >= 2 classes")
    if not 0.0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 1/2]")
    floor = delta / k
    return LossModel(
        kind="glm",
        domain=(floor, 1.0),
        m=range_bound("glm", delta=floor),
        eta=1.0,
        lip=lipschitz_bound("glm", delta=floor),
        modulus=ModulusDescriptor("quadratic", "log_metric", coef=_log_quadratic_coef(floor)),
        delta=delta,
        k=k,
    )


def with_delta(model: LossModel, delta: float) -> LossModel:
    """Rebuild a likelihood model with a new regularization floor."""
    if model.kind == "log":
        return log_loss(delta)
    if model.kind == "glm":
        return glm_loss(model.k, delta)
    return replace(model)


def eval_loss(model: LossModel, pred, target=None):
    """Evaluate the loss at a prediction (scalar or array)."""
    model.check_pred(pred)
    model.check_target(target)
    pred = np.asarray(pred, dtype=float)
    if model.is_likelihood:
        out = -np.log(np.clip(pred, model.domain[0], model.domain[1]))
    else:
        if target is None:
            raise ValueError(f"{model.kind} loss requires a target")
        target = np.asarray(target, dtype=float)
        out = np.abs(pred - target) ** model.p
    return out if out.ndim else float(out)


def grad_loss(model: LossModel, pred, target=None):
    """Subgradient of the loss in its prediction argument.

    For the p-loss the subgradient at pred == target is 0 (the minimizer).
    """
    model.check_pred(pred)
    model.check_target(target)
    pred = np.asarray(pred, dtype=float)
    if model.is_likelihood:
        out = -1.0 / np.clip(pred, model.domain[0], model.domain[1])
    else:
        if target is None:
            raise ValueError(f"{model.kind} loss requires a target")
        z = pred - np.asarray(target, dtype=float)
        out = model.p * np.abs(z) ** (model.p - 1.0) * np.sign(z)
    return out if out.ndim else float(out)


def second_deriv_loss(model: LossModel, pred, target=None):
    """Second derivative psi'' where it exists (used by local-norm margins)."""
    model.check_pred(pred)
    pred = np.asarray(pred, dtype=float)
    if model.is_likelihood:
        out = 1.0 / np.clip(pred, model.domain[0], model.domain[1]) ** 2
    else:
        if target is None:
            raise ValueError(f"{model.kind} loss requires a target")
        z = np.abs(pred - np.asarray(target, dtype=float))
        with np.errstate(divide="ignore"):
            out = model.p * (model.p - 1.0) * z ** (model.p - 2.0)
    return out if out.ndim else float(out)


def canonical_modulus(model: LossModel, x, y, target=None):
    """mu(d(x, y)) for the model's canonical descriptor.

    square -> (x - y)^2; log/glm -> |ln x - ln y|^2 / (2 ln(1/floor) v 4);
    p-loss -> |psi(x) - psi(y)|^2 / (2m v 4/eta).
    """
    model.check_pred(x)
    model.check_pred(y)
    return_scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    d = model.distance(x, y, target)
    out = model.modulus.mu(d)
    return float(out) if return_scalar else out


def power_modulus(model: LossModel, x, y):
    """p-uniform-convexity modulus alpha |x - y|^p with alpha = 2^(1-p).

    Available for the p-loss with p >= 2; certified by the margin suite
    before the uniform-convexity offset uses it.
    """
    if model.kind not in ("square", "p_loss") or model.p < 2.0:
        raise ValueError("power modulus defined for p-loss with p >= 2")
    model.check_pred(x)
    model.check_pred(y)
    alpha = 2.0 ** (1.0 - model.p)
    out = alpha * np.abs(np.asarray(x, float) - np.asarray(y, float)) ** model.p
    return float(out) if np.ndim(x) == 0 and np.ndim(y) == 0 else out


def uniform_convexity_alpha(model: LossModel) -> float:
    if model.kind not in ("square", "p_loss") or model.p < 2.0:
        raise ValueError("uniform convexity modulus defined for p-loss with p >= 2")
    return 2.0 ** (1.0 - model.p)


def loss_increment_modulus(model: LossModel) -> ModulusDescriptor:
    """Exp-concave modulus |psi(x) - psi(y)|^2 / (2m v 4/eta) as a descriptor.

    For log/glm models this coincides with the canonical log-metric modulus
    (the log metric is the loss increment of -ln).
    """
    return ModulusDescriptor(
        "quadratic",
        "loss_increment",
        coef=1.0 / max(2.0 * model.m, 4.0 / model.eta),
    )


def regularize_likelihood(f, delta: float):
    """Scalar likelihood regularization f -> (1 - delta) f + delta in [delta, 1]."""
    if not 0.0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 1/2]")
    f = np.asarray(f, dtype=float)
    if np.any(f < -_DOMAIN_SLACK) or np.any(f > 1.0 + _DOMAIN_SLACK):
        raise ValueError("likelihood must lie in [0, 1]")
    out = (1.0 - delta) * np.clip(f, 0.0, 1.0) + delta
    return float(out) if out.ndim == 0 else out


def regularize_probs(p, delta: float):
    """Simplex regularization p -> (1 - delta) p + delta * uniform.

    Keeps probability vectors on the simplex with every component >= delta/k.
    """
    if not 0.0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 1/2]")
    p = np.asarray(p, dtype=float)
    k = p.shape[-1]
    return (1.0 - delta) * p + delta / k


def link_softmax(scores):
    """Softmax link: scores (..., k) -> probability vectors summing to 1."""
    scores = np.asarray(scores, dtype=float)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def link_right_inverse(probs):
    """Right inverse of the softmax link: probs -> ln(probs).

    softmax(link_right_inverse(p)) == p on the open simplex.
    """
    probs = np.asarray(probs, dtype=float)
    if np.any(probs <= 0.0):
        raise ValueError("right inverse requires strictly positive probabilities")
    return np.log(probs)


def sandwich_threshold(delta: float, k: int = 1) -> float:
    """Smallest f for which -ln f - 2 delta <= -ln((1-delta) f + delta/k).

    Equality holds exactly at the returned value.
    """
    return delta / (k * (math.expm1(2.0 * delta) + delta))


def sandwich_upper_slack(delta: float, k: int = 1) -> float:
    """Additive bound in -ln((1-d) f + d/k) <= -ln f + slack; zero when k = 1."""
    return max(0.0, math.log(k / (k - k * delta + delta)))
