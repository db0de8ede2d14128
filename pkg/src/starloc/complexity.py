"""Offset complexity estimation and empirical entropy.

The Monte Carlo estimator draws sign vectors, maximizes the offset
objective exactly over a discretized mixture class, and reports the
per-draw suprema. Entropy profiles feed the closed-form risk bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .losses import LossModel, eval_loss, uniform_convexity_alpha
from .predictors import FiniteClass, Predictor, Sample, StarMix, prediction_vector

__all__ = [
    "OffsetEstimate",
    "EntropyProfile",
    "discretize_fprime",
    "fprime_matrix",
    "offset_sup_one_draw",
    "offset_complexity_mc",
    "greedy_cover_indices",
    "entropy_eval",
    "finite_empirical_profile",
    "parametric_profile",
    "power_law_profile",
    "constant_profile",
]

DEFAULT_LAMBDA_LEVELS = 20
_PAIR_CHUNK = 512


@dataclass(frozen=True, eq=False)
class OffsetEstimate:
    """Monte Carlo estimate of an offset supremum.

    mean and q95 summarize per_draw_sup; coefficient records the constant
    multiplying the squared (or p-th power) offset term.
    """

    offset_kind: str
    draws: int
    per_draw_sup: np.ndarray
    mean: float
    q95: float
    coefficient: float


def _mix_enumeration(n_members: int, lambda_levels: int):
    """Deterministic enumeration of the mixture class: members, then pair mixes.

    Pairs run over i < j with interior mixing weights only (endpoints
    reproduce the members), so the member rows appear exactly once.
    """
    if lambda_levels < 2:
        # Levels 0/1 grids contain only the endpoints.
        interior = np.empty(0)
    else:
        interior = np.arange(1, lambda_levels) / lambda_levels
    singles = [(i, i, 1.0) for i in range(n_members)]
    pairs = [
        (i, j, float(lam))
        for i in range(n_members)
        for j in range(i + 1, n_members)
        for lam in interior
    ]
    return singles + pairs


def discretize_fprime(cls: FiniteClass, lambda_levels: int = DEFAULT_LAMBDA_LEVELS) -> FiniteClass:
    """All lam-mixes of member pairs at lam in {0, 1/L, ..., 1}.

    Contains the original class (the lam = 1 diagonal); size is at most
    M + M(M-1)(L-1)/2 <= M^2 (L+1).
    """
    if lambda_levels < 2 and lambda_levels != 1:
        raise ValueError("lambda_levels must be >= 1")
    members = cls.effective_members()
    out = []
    for i, j, lam in _mix_enumeration(len(members), lambda_levels):
        if i == j:
            out.append(members[i])
        else:
            out.append(StarMix(lam, members[i], members[j]))
    return FiniteClass(out)


def fprime_matrix(
    cls: FiniteClass, sample: Sample, lambda_levels: int = DEFAULT_LAMBDA_LEVELS
) -> np.ndarray:
    """Prediction matrix of the discretized mixture class, rows in enumeration order."""
    base = cls.prediction_matrix(sample)
    rows = []
    for i, j, lam in _mix_enumeration(base.shape[0], lambda_levels):
        if i == j:
            rows.append(base[i])
        else:
            rows.append(lam * base[i] + (1.0 - lam) * base[j])
    return np.asarray(rows)


def _check_signs(signs, n):
    signs = np.asarray(signs, dtype=float)
    if signs.shape != (n,) or not np.all(np.abs(signs) == 1.0):
        raise ValueError("signs must be a vector of +/-1 matching the sample size")
    return signs


def offset_sup_one_draw(
    model: LossModel,
    fprime_preds: np.ndarray,
    reference_preds: np.ndarray | None,
    sample: Sample,
    signs,
    offset_kind: str,
) -> float:
    """Exact enumeration supremum for one sign vector.

    mu_d and uniform_convex maximize over members against the fixed
    reference; exp_concave maximizes over ordered member pairs (the
    diagonal pair contributes 0, so the supremum is nonnegative).
    """
    F = np.atleast_2d(np.asarray(fprime_preds, dtype=float))
    if F.shape[0] == 0:
        raise ValueError("empty class")
    n = sample.n
    signs = _check_signs(signs, n)
    target = None if model.is_likelihood else np.asarray(sample.y, dtype=float)
    psi_f = eval_loss(model, F, target)

    if offset_kind == "exp_concave":
        coef = model.eta / max(18.0 * model.m * model.eta, 36.0)
        t = psi_f @ signs
        q = np.einsum("ij,ij->i", psi_f, psi_f)
        best = -np.inf
        for s0 in range(0, F.shape[0], _PAIR_CHUNK):
            s1 = min(s0 + _PAIR_CHUNK, F.shape[0])
            K = psi_f[s0:s1] @ psi_f.T
            sq = np.maximum(q[s0:s1, None] + q[None, :] - 2.0 * K, 0.0)
            # the diagonal pair is identically zero; keep it exact so the
            # supremum over pairs is never pulled below 0 by roundoff
            rows = np.arange(s0, s1)
            sq[rows - s0, rows] = 0.0
            vals = (4.0 / n) * (t[s0:s1, None] - t[None, :]) - (coef / n) * sq
            vals[rows - s0, rows] = 0.0
            best = max(best, float(vals.max()))
        return best

    if reference_preds is None:
        raise ValueError(f"{offset_kind} offset requires a reference predictor")
    r = np.asarray(reference_preds, dtype=float)
    psi_r = eval_loss(model, r, target)
    if offset_kind == "mu_d":
        inc = psi_f - psi_r[None, :]
        pen = model.modulus.mu(model.distance(F, r[None, :], target) / 3.0).mean(axis=1)
        vals = (4.0 / n) * (inc @ signs) - pen
        return float(vals.max())
    if offset_kind == "uniform_convex":
        alpha = uniform_convexity_alpha(model)
        diff = F - r[None, :]
        pen = (alpha * np.abs(diff) ** model.p / 3.0**model.p).mean(axis=1)
        vals = (4.0 * model.lip / n) * (diff @ signs) - pen
        return float(vals.max())
    raise ValueError(f"unknown offset kind {offset_kind!r}")


def _draw_signs(seed: int, draw: int, n: int) -> np.ndarray:
    rng = np.random.default_rng((int(seed), 9001, int(draw)))
    return rng.integers(0, 2, size=n).astype(float) * 2.0 - 1.0


def offset_complexity_mc(
    model: LossModel,
    cls: FiniteClass,
    reference: Predictor | np.ndarray | None,
    sample: Sample,
    offset_kind: str,
    draws: int,
    seed: int = 0,
    lambda_levels: int = DEFAULT_LAMBDA_LEVELS,
) -> OffsetEstimate:
    """Seeded Rademacher draws of the offset supremum over the mixture class.

    Sign vectors depend only on (seed, draw index), so nested classes
    evaluated under the same seed see identical draws.
    """
    if draws < 1:
        raise ValueError("draws must be at least 1")
    F = fprime_matrix(cls, sample, lambda_levels)
    if reference is None:
        ref = None
    elif isinstance(reference, Predictor):
        ref = prediction_vector(reference, sample)
    else:
        ref = np.asarray(reference, dtype=float)
    sups = np.empty(draws)
    for d in range(draws):
        signs = _draw_signs(seed, d, sample.n)
        sups[d] = offset_sup_one_draw(model, F, ref, sample, signs, offset_kind)
    if offset_kind == "exp_concave":
        coefficient = model.eta / max(18.0 * model.m * model.eta, 36.0)
    elif offset_kind == "uniform_convex":
        coefficient = uniform_convexity_alpha(model) / 3.0**model.p
    else:
        coefficient = model.modulus.coef if model.modulus.mu_kind == "quadratic" else model.modulus.alpha
    return OffsetEstimate(
        offset_kind=offset_kind,
        draws=draws,
        per_draw_sup=sups,
        mean=float(np.mean(sups)),
        q95=float(np.quantile(sups, 0.95)),
        coefficient=coefficient,
    )


def _l2pn_dist(V: np.ndarray, v: np.ndarray) -> np.ndarray:
    diff = V - v[None, :]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff) / V.shape[1])


def greedy_cover_indices(vectors: np.ndarray, eps: float) -> list[int]:
    """Farthest-point traversal cover in L2(P_n), seeded at row 0.

    Returns center indices such that every row lies within eps of a center.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    centers = [0]
    dmin = _l2pn_dist(V, V[0])
    while float(dmin.max()) > eps:
        j = int(np.argmax(dmin))
        centers.append(j)
        dmin = np.minimum(dmin, _l2pn_dist(V, V[j]))
    return centers


@dataclass(frozen=True, eq=False)
class EntropyProfile:
    """Log covering number H2(eps) in one of four parameterizations.

    star_hull_correction adds ln(1/eps) for eps < 1, the cost of passing
    from a class to its mixture enlargement.
    """

    variant: str  # 'finite_empirical' | 'parametric' | 'power_law' | 'constant'
    vectors: np.ndarray | None = None
    cls: FiniteClass | None = None
    k: int | None = None
    d: int | None = None
    A: float | None = None
    B: float | None = None
    q: float | None = None
    value: float | None = None
    star_hull_correction: bool = False


def finite_empirical_profile(
    cls: FiniteClass | None = None,
    vectors: np.ndarray | None = None,
    star_hull_correction: bool = False,
) -> EntropyProfile:
    if cls is None and vectors is None:
        raise ValueError("finite empirical profile needs a class or vectors")
    return EntropyProfile(
        "finite_empirical",
        vectors=None if vectors is None else np.atleast_2d(np.asarray(vectors, float)),
        cls=cls,
        star_hull_correction=star_hull_correction,
    )


def parametric_profile(k: int, d: int, A: float, B: float, star_hull_correction: bool = False) -> EntropyProfile:
    return EntropyProfile("parametric", k=k, d=d, A=A, B=B, star_hull_correction=star_hull_correction)


def power_law_profile(A: float, q: float, star_hull_correction: bool = False) -> EntropyProfile:
    return EntropyProfile("power_law", A=A, q=q, star_hull_correction=star_hull_correction)


def constant_profile(value: float, star_hull_correction: bool = False) -> EntropyProfile:
    return EntropyProfile("constant", value=value, star_hull_correction=star_hull_correction)


def entropy_eval(profile: EntropyProfile, eps: float, sample: Sample | None = None) -> float:
    """Evaluate H2(eps) for a profile; nonincreasing in eps by construction."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if profile.variant == "finite_empirical":
        if profile.vectors is not None:
            V = profile.vectors
        elif sample is None:
            raise ValueError("finite_empirical entropy requires a sample")
        else:
            V = profile.cls.prediction_matrix(sample)
        h = math.log(len(greedy_cover_indices(V, eps)))
    elif profile.variant == "parametric":
        h = max(profile.k * profile.d * math.log(profile.A * profile.B / eps), 0.0)
    elif profile.variant == "power_law":
        h = (profile.A / eps) ** profile.q
    elif profile.variant == "constant":
        h = float(profile.value)
    else:
        raise ValueError(f"unknown profile variant {profile.variant!r}")
    if profile.star_hull_correction and eps < 1.0:
        h += math.log(1.0 / eps)
    return float(h)
