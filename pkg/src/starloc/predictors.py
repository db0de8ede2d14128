"""Predictors, function classes, and samples.

Predictors are immutable; a fitted star combination is just another
predictor (a pointwise mix in prediction/likelihood space). Function
classes materialize per-sample prediction vectors, applying the class's
likelihood regularization at that boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import link_softmax, regularize_likelihood, regularize_probs

__all__ = [
    "Sample",
    "Predictor",
    "Constant",
    "Tabular",
    "Linear",
    "StarMix",
    "FiniteClass",
    "SegmentClass",
    "SimplexClass",
    "LinearBall",
    "predict",
    "prediction_vector",
]


@dataclass(frozen=True)
class Sample:
    """Features X (n, d) and targets y (n,); labels are 0-based ints for GLM."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", np.asarray(self.y))
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("features and targets must share the leading dimension")
        if self.n == 0:
            raise ValueError("sample must be nonempty")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


class Predictor:
    """Marker base class for predictors."""

    __slots__ = ()


@dataclass(frozen=True, eq=False)
class Constant(Predictor):
    """Constant prediction: a scalar, or a probability vector for GLM."""

    value: float | np.ndarray

    def describe(self) -> dict:
        v = self.value
        return {"type": "constant", "value": v.tolist() if isinstance(v, np.ndarray) else v}


@dataclass(frozen=True, eq=False)
class Tabular(Predictor):
    """Predictions indexed by example id (a materialized function on a sample)."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def describe(self) -> dict:
        return {"type": "tabular", "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class Linear(Predictor):
    """Linear scores x -> Wx with a row-norm bound.

    For GLM models the scores go through the softmax link; with delta set the
    probability vector is mixed toward uniform. For the square loss, k = 1 and
    the prediction is the scalar score.
    """

    W: np.ndarray
    bound: float
    link: str = "softmax"
    delta: float | None = None

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        object.__setattr__(self, "W", W)
        row_norms = np.linalg.norm(W, axis=1)
        if np.any(row_norms > self.bound * (1 + 1e-9) + 1e-12):
            raise ValueError(
                f"row norm {row_norms.max():.6g} exceeds bound {self.bound:.6g}"
            )

    @property
    def k(self) -> int:
        return self.W.shape[0]

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.W.shape[1]:
            raise ValueError(
                f"feature dimension {X.shape[1]} does not match weights {self.W.shape}"
            )
        return X @ self.W.T

    def probs(self, X: np.ndarray) -> np.ndarray:
        p = link_softmax(self.scores(X))
        if self.delta is not None:
            p = regularize_probs(p, self.delta)
        return p

    def describe(self) -> dict:
        return {
            "type": "linear",
            "weights": self.W.tolist(),
            "bound": self.bound,
            "link": self.link,
            "delta": self.delta,
        }


@dataclass(frozen=True, eq=False)
class StarMix(Predictor):
    """Pointwise mix lam * left + (1 - lam) * right in prediction space."""

    lam: float
    left: Predictor
    right: Predictor

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")

    def describe(self) -> dict:
        return {
            "type": "star_mix",
            "lam": self.lam,
            "left": self.left.describe(),
            "right": self.right.describe(),
        }


def predict(predictor: Predictor, x=None, example_id: int | None = None, label=None):
    """Evaluate one predictor on one example.

    GLM linear predictors return the observed-label likelihood when a label
    is supplied and the full probability vector otherwise.
    """
    if isinstance(predictor, Constant):
        v = predictor.value
        if isinstance(v, np.ndarray) and label is not None:
            return float(v[int(label)])
        return v
    if isinstance(predictor, Tabular):
        if example_id is None:
            raise ValueError("tabular predictors require an example id")
        return float(predictor.values[int(example_id)])
    if isinstance(predictor, Linear):
        if predictor.k == 1:
            return float(predictor.scores(np.atleast_2d(x))[0, 0])
        p = predictor.probs(np.atleast_2d(x))[0]
        if label is not None:
            return float(p[int(label)])
        return p
    if isinstance(predictor, StarMix):
        a = predict(predictor.left, x, example_id, label)
        b = predict(predictor.right, x, example_id, label)
        return predictor.lam * a + (1.0 - predictor.lam) * b
    raise TypeError(f"unknown predictor type {type(predictor).__name__}")


def prediction_vector(predictor: Predictor, sample: Sample) -> np.ndarray:
    """Vector of predictions (likelihoods for GLM) on a whole sample."""
    n = sample.n
    if isinstance(predictor, Constant):
        v = predictor.value
        if isinstance(v, np.ndarray):
            return v[np.asarray(sample.y, dtype=int)]
        return np.full(n, float(v))
    if isinstance(predictor, Tabular):
        if predictor.values.shape[0] != n:
            raise ValueError("tabular predictor does not match the sample size")
        return predictor.values.copy()
    if isinstance(predictor, Linear):
        if predictor.k == 1:
            return predictor.scores(sample.X)[:, 0]
        p = predictor.probs(sample.X)
        return p[np.arange(n), np.asarray(sample.y, dtype=int)]
    if isinstance(predictor, StarMix):
        a = prediction_vector(predictor.left, sample)
        b = prediction_vector(predictor.right, sample)
        return predictor.lam * a + (1.0 - predictor.lam) * b
    raise TypeError(f"unknown predictor type {type(predictor).__name__}")


@dataclass(frozen=True, eq=False)
class FiniteClass:
    """A finite list of predictors, optionally delta-regularized.

    With delta set, scalar likelihood members are mapped through
    (1 - delta) f + delta and probability-vector members through the
    uniform mix, so evaluated likelihoods respect the model's floor.
    """

    members: tuple
    delta: float | None = None

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("finite class must be nonempty")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    def effective_members(self) -> list[Predictor]:
        """Members with the class regularization baked in."""
        if self.delta is None:
            return list(self.members)
        out = []
        for m in self.members:
            if isinstance(m, Constant):
                v = m.value
                if isinstance(v, np.ndarray):
                    out.append(Constant(regularize_probs(v, self.delta)))
                else:
                    out.append(Constant(regularize_likelihood(v, self.delta)))
            elif isinstance(m, Tabular):
                out.append(Tabular(regularize_likelihood(m.values, self.delta)))
            elif isinstance(m, Linear) and m.k > 1:
                out.append(Linear(m.W, m.bound, m.link, self.delta))
            else:
                raise ValueError("delta regularization applies to likelihood members")
        return out

    def prediction_matrix(self, sample: Sample) -> np.ndarray:
        """(M, n) matrix of member predictions with regularization applied."""
        return np.vstack(
            [prediction_vector(m, sample) for m in self.effective_members()]
        )


@dataclass(frozen=True, eq=False)
class SegmentClass:
    """The convex segment between two prediction vectors, materialized on demand."""

    a: np.ndarray
    b: np.ndarray
    resolution: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        if self.a.shape != self.b.shape:
            raise ValueError("segment endpoints must share a shape")

    def materialize(self) -> np.ndarray:
        """(M, n) grid of lam*a + (1-lam)*b at the class resolution."""
        levels = int(round(1.0 / self.resolution))
        lam = np.linspace(0.0, 1.0, levels + 1)
        return lam[:, None] * self.a[None, :] + (1.0 - lam)[:, None] * self.b[None, :]


@dataclass(frozen=True, eq=False)
class SimplexClass:
    """The convex hull of three prediction vectors (a 2-simplex)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    resolution: float = 1e-2

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    def materialize(self) -> np.ndarray:
        levels = int(round(1.0 / self.resolution))
        rows = []
        for i in range(levels + 1):
            for j in range(levels + 1 - i):
                w1 = i / levels
                w2 = j / levels
                rows.append(w1 * self.a + w2 * self.b + (1.0 - w1 - w2) * self.c)
        return np.asarray(rows)

    def point(self, w1: float, w2: float) -> np.ndarray:
        return w1 * self.a + w2 * self.b + (1.0 - w1 - w2) * self.c


@dataclass(frozen=True)
class LinearBall:
    """Linear predictors with rows in the 2-norm ball of radius B."""

    d: int
    k: int
    B: float
    link: str = "softmax"
    delta: float | None = None

    def random_member(self, rng: np.random.Generator) -> Linear:
        """Uniform draw: each row uniform in the d-ball of radius B."""
        W = np.empty((self.k, self.d))
        for r in range(self.k):
            direction = rng.standard_normal(self.d)
            direction /= max(np.linalg.norm(direction), 1e-300)
            radius = self.B * rng.random() ** (1.0 / self.d)
            W[r] = radius * direction
        return Linear(W, self.B, self.link, self.delta)

    def project(self, W: np.ndarray) -> np.ndarray:
        """Project rows onto the ball (scale rows whose norm exceeds B)."""
        W = np.atleast_2d(np.asarray(W, dtype=float))
        norms = np.linalg.norm(W, axis=1, keepdims=True)
        scale = np.minimum(1.0, self.B / np.maximum(norms, 1e-300))
        return W * scale
