import itertools
import math

import numpy as np
import pytest

from starloc.complexity import (
    constant_profile,
    discretize_fprime,
    entropy_eval,
    finite_empirical_profile,
    fprime_matrix,
    greedy_cover_indices,
    offset_complexity_mc,
    offset_sup_one_draw,
    parametric_profile,
    power_law_profile,
)
from starloc.losses import eval_loss, p_loss, square_loss
from starloc.predictors import Constant, FiniteClass, Sample


def _const_sample(y):
    y = np.asarray(y, dtype=float)
    return Sample(np.zeros((len(y), 1)), y)


def test_discretize_fprime_sizes():
    single = FiniteClass([Constant(0.3)])
    assert len(discretize_fprime(single, 20)) == 1
    two = FiniteClass([Constant(0.0), Constant(1.0)])
    assert len(discretize_fprime(two, 1)) == 2  # lam in {0, 1} reproduces members
    f2 = discretize_fprime(two, 2)
    assert len(f2) == 3  # members plus the midpoint
    sample = _const_sample([0.0])
    mat = fprime_matrix(two, sample, 2)
    assert 0.5 in mat[:, 0]


def test_fprime_contains_class_and_bound():
    cls = FiniteClass([Constant(v) for v in (0.1, 0.4, 0.9)])
    levels = 7
    mat = fprime_matrix(cls, _const_sample([0.0, 0.0]), levels)
    m = len(cls)
    assert mat.shape[0] == m + m * (m - 1) // 2 * (levels - 1)
    assert mat.shape[0] <= m * m * (levels + 1)
    for v in (0.1, 0.4, 0.9):
        assert np.any(np.all(mat == v, axis=1))


def test_offset_sup_enumeration_oracle():
    # n = 1, members {0, 1}: the supremum is max over two explicit terms
    sq = square_loss(1.0)
    sample = _const_sample([0.5])
    F = np.array([[0.0], [1.0]])
    ref = np.array([0.0])
    signs = np.array([1.0])
    val = offset_sup_one_draw(sq, F, ref, sample, signs, "mu_d")
    psi0 = (0.0 - 0.5) ** 2
    psi1 = (1.0 - 0.5) ** 2
    expected = max(0.0, 4.0 * (psi1 - psi0) - (1.0 / 3.0) ** 2)
    assert val == pytest.approx(expected, abs=1e-15)


def test_offset_pair_symmetry(rng):
    sq = square_loss(1.0)
    n = 8
    sample = _const_sample(rng.uniform(-1, 1, n))
    F = rng.uniform(-1, 1, (5, n))
    signs = rng.choice([-1.0, 1.0], n)
    v1 = offset_sup_one_draw(sq, F, None, sample, signs, "exp_concave")
    v2 = offset_sup_one_draw(sq, F, None, sample, -signs, "exp_concave")
    assert v1 == pytest.approx(v2, abs=1e-12)
    assert v1 >= 0.0


def test_offset_singleton_exactly_zero():
    sq = square_loss(1.0)
    sample = _const_sample([0.2, -0.1, 0.4])
    cls = FiniteClass([Constant(0.3)])
    for kind in ("mu_d", "exp_concave", "uniform_convex"):
        ref = Constant(0.3) if kind != "exp_concave" else None
        est = offset_complexity_mc(sq, cls, ref, sample, kind, draws=6, seed=9)
        assert est.mean == 0.0
        assert est.q95 == 0.0


def test_offset_determinism_and_seed_prefix(rng):
    sq = square_loss(1.0)
    sample = _const_sample(rng.uniform(-1, 1, 12))
    cls = FiniteClass([Constant(v) for v in (-0.4, 0.2, 0.7)])
    a = offset_complexity_mc(sq, cls, None, sample, "exp_concave", draws=6, seed=3)
    b = offset_complexity_mc(sq, cls, None, sample, "exp_concave", draws=6, seed=3)
    assert np.array_equal(a.per_draw_sup, b.per_draw_sup)
    c = offset_complexity_mc(sq, cls, None, sample, "exp_concave", draws=12, seed=3)
    assert np.array_equal(c.per_draw_sup[:6], a.per_draw_sup)
    assert a.mean == pytest.approx(float(a.per_draw_sup.mean()))
    assert a.q95 == pytest.approx(float(np.quantile(a.per_draw_sup, 0.95)))


def test_offset_class_monotonicity(rng):
    sq = square_loss(1.0)
    sample = _const_sample(rng.uniform(-1, 1, 16))
    small = FiniteClass([Constant(v) for v in (-0.5, 0.3)])
    big = FiniteClass(list(small.members) + [Constant(0.9)])
    ref = Constant(-0.5)
    for kind in ("mu_d", "exp_concave", "uniform_convex"):
        r = None if kind == "exp_concave" else ref
        a = offset_complexity_mc(sq, small, r, sample, kind, draws=10, seed=4)
        b = offset_complexity_mc(sq, big, r, sample, kind, draws=10, seed=4)
        assert np.all(b.per_draw_sup >= a.per_draw_sup - 1e-12)


def test_offset_levels_monotone_under_doubling(rng):
    sq = square_loss(1.0)
    sample = _const_sample(rng.uniform(-1, 1, 16))
    cls = FiniteClass([Constant(v) for v in (-0.8, 0.1, 0.6)])
    a = offset_complexity_mc(sq, cls, None, sample, "exp_concave", draws=8, seed=5, lambda_levels=20)
    b = offset_complexity_mc(sq, cls, None, sample, "exp_concave", draws=8, seed=5, lambda_levels=40)
    assert np.all(b.per_draw_sup >= a.per_draw_sup - 1e-12)


def test_offset_coefficients():
    sq = square_loss(1.0)
    p3 = p_loss(3.0, 1.0)
    sample = _const_sample([0.1])
    cls = FiniteClass([Constant(0.2)])
    e = offset_complexity_mc(sq, cls, None, sample, "exp_concave", draws=1, seed=0)
    assert e.coefficient == pytest.approx(sq.eta / max(18 * sq.m * sq.eta, 36.0))
    u = offset_complexity_mc(p3, cls, Constant(0.2), sample, "uniform_convex", draws=1, seed=0)
    assert u.coefficient == pytest.approx(2.0 ** (1 - 3.0) / 27.0)
    m = offset_complexity_mc(sq, cls, Constant(0.2), sample, "mu_d", draws=1, seed=0)
    assert m.coefficient == 1.0


def test_greedy_cover_basics():
    V = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    # L2(P_n) distances: dist(0, 2) = 2, dist(0, 1) = 1
    assert greedy_cover_indices(V, 2.01) == [0]
    assert set(greedy_cover_indices(V, 1.01)) == {0, 2}
    assert len(greedy_cover_indices(V, 0.5)) == 3


def _brute_force_min_cover(V, eps):
    M = V.shape[0]
    d = np.sqrt(((V[:, None, :] - V[None, :, :]) ** 2).mean(axis=2))
    for size in range(1, M + 1):
        for centers in itertools.combinations(range(M), size):
            if np.all(d[:, list(centers)].min(axis=1) <= eps):
                return size
    return M


def test_greedy_cover_vs_brute_force(rng):
    # greedy is a valid cover; its centers are eps-separated, so its size is
    # at most the minimal cover size at eps/2 (packing argument)
    for _ in range(25):
        M = int(rng.integers(2, 9))
        V = rng.uniform(-1, 1, (M, 4))
        eps = float(rng.uniform(0.1, 1.0))
        centers = greedy_cover_indices(V, eps)
        d = np.sqrt(((V[:, None, :] - V[None, :, :]) ** 2).mean(axis=2))
        assert np.all(d[:, centers].min(axis=1) <= eps + 1e-12)
        assert len(centers) <= _brute_force_min_cover(V, eps / 2)


def test_greedy_cover_collinear_counterexample():
    # greedy seeded at an endpoint uses 2 centers where 1 suffices
    V = np.array([[0.0], [1.0], [2.0]])
    assert _brute_force_min_cover(V, 1.0) == 1
    assert len(greedy_cover_indices(V, 1.0)) == 2


def test_entropy_eval_variants(rng):
    prof = finite_empirical_profile(vectors=np.array([[0.0, 0.0]]))
    assert entropy_eval(prof, 0.5) == 0.0
    par = parametric_profile(2, 2, 1.0, 3.0)
    assert entropy_eval(par, 0.01) == pytest.approx(4 * math.log(300.0), rel=1e-12)
    assert entropy_eval(par, 1e9) == 0.0  # clamped at zero
    pl = power_law_profile(1.0, 1.0)
    assert entropy_eval(pl, 0.25) == 4.0
    cp = constant_profile(10.0, star_hull_correction=True)
    assert entropy_eval(cp, 0.5) == pytest.approx(10.0 + math.log(2.0))
    assert entropy_eval(cp, 2.0) == 10.0  # no correction above eps = 1
    with pytest.raises(ValueError):
        entropy_eval(finite_empirical_profile(cls=FiniteClass([Constant(0.1)])), 0.5)
    with pytest.raises(ValueError):
        entropy_eval(par, 0.0)


def test_entropy_nonincreasing(rng):
    V = rng.uniform(0, 1, (12, 6))
    profiles = [
        finite_empirical_profile(vectors=V),
        parametric_profile(2, 3, 1.0, 2.0),
        power_law_profile(0.5, 1.5),
        constant_profile(3.0, star_hull_correction=True),
    ]
    eps_grid = np.exp(np.linspace(math.log(1e-3), math.log(3.0), 40))
    for prof in profiles:
        vals = [entropy_eval(prof, float(e)) for e in eps_grid]
        assert np.all(np.diff(vals) <= 1e-12)


def test_entropy_eps_above_diameter(rng):
    V = rng.uniform(0, 1, (6, 4))
    d = np.sqrt(((V[:, None, :] - V[None, :, :]) ** 2).mean(axis=2))
    prof = finite_empirical_profile(vectors=V)
    assert entropy_eval(prof, float(d.max() + 1e-9)) == 0.0


def test_loss_composed_entropy_via_class(rng):
    sq = square_loss(1.0)
    sample = _const_sample(rng.uniform(-1, 1, 8))
    cls = FiniteClass([Constant(v) for v in rng.uniform(-1, 1, 5)])
    loss_vectors = eval_loss(sq, cls.prediction_matrix(sample), sample.y)
    prof = finite_empirical_profile(vectors=loss_vectors)
    assert entropy_eval(prof, 1e-9) == pytest.approx(math.log(5))
