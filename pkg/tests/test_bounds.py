import math

import numpy as np
import pytest

from starloc.bounds import (
    BoundInputs,
    bigglm_rate,
    chaining_bound,
    entropy_integral,
    glm_bound,
    packing_bound,
)
from starloc.complexity import constant_profile, parametric_profile, power_law_profile

H10 = constant_profile(10.0)


def test_packing_worked_example():
    inputs = BoundInputs(n=1000, rho=0.05, m=1.0, eta=1.0, eps=0.01, entropy=H10)
    expected = 0.01 + 72.0 * (10.0 + math.log(20.0)) / 1000.0
    assert packing_bound(inputs) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.945693, abs=5e-7)


def test_packing_limits():
    # H = 0 and rho -> 1: only eps survives
    inputs = BoundInputs(n=1000, rho=1 - 1e-12, m=1.0, eta=1.0, eps=0.01,
                         entropy=constant_profile(0.0))
    assert packing_bound(inputs) == pytest.approx(0.01, abs=1e-10)
    a = BoundInputs(n=500, rho=0.05, m=1.0, eta=1.0, eps=0.01, entropy=H10)
    b = BoundInputs(n=1000, rho=0.05, m=1.0, eta=1.0, eps=0.01, entropy=H10)
    assert packing_bound(a) - 0.01 == pytest.approx(2 * (packing_bound(b) - 0.01), rel=1e-12)


def test_packing_monotonicity_grid():
    for n in (100, 1000, 10000):
        for h in (0.0, 5.0, 20.0):
            lo = BoundInputs(n=n, rho=0.05, m=1.0, eta=1.0, eps=0.01, entropy=constant_profile(h))
            hi = BoundInputs(n=n, rho=0.05, m=1.0, eta=1.0, eps=0.01, entropy=constant_profile(h + 1.0))
            assert packing_bound(hi) >= packing_bound(lo)
            more_n = BoundInputs(n=2 * n, rho=0.05, m=1.0, eta=1.0, eps=0.01, entropy=constant_profile(h))
            assert packing_bound(more_n) <= packing_bound(lo)


def test_entropy_integral_closed_form_matches_quadrature():
    # independent oracle for the quadrature path: exact power-law integral
    prof_exact = power_law_profile(1.0, 1.0)
    exact = entropy_integral(prof_exact, 0.1, 1.0)
    assert exact == pytest.approx(2.0 * (1.0 - math.sqrt(0.1)), rel=1e-12)
    # force quadrature through the correction flag with a zero-size correction
    prof_quad = power_law_profile(1.0, 1.0, star_hull_correction=True)
    quad = entropy_integral(prof_quad, 1.0, 2.0)  # eps >= 1: correction inactive
    assert quad == pytest.approx(2.0 * (math.sqrt(2.0) - 1.0), rel=1e-6)


def test_entropy_integral_zero_lower_limit():
    assert entropy_integral(power_law_profile(1.0, 1.0), 0.0, 1.0) == pytest.approx(2.0, rel=1e-12)
    # sqrt(ln(1/s)) integrates to sqrt(pi)/2 on (0, 1)
    got = entropy_integral(constant_profile(0.0, star_hull_correction=True), 0.0, 1.0)
    assert got == pytest.approx(math.sqrt(math.pi) / 2.0, rel=2e-6)
    assert entropy_integral(power_law_profile(1.0, 2.0), 0.0, 1.0) == math.inf
    # corrected power law with a zero lower limit goes through the substitution
    got = entropy_integral(power_law_profile(1.0, 1.0, star_hull_correction=True), 0.0, 1.0)
    assert got > 2.0  # correction only adds entropy


def test_chaining_worked_example():
    inputs = BoundInputs(n=10**4, rho=1 - 1e-15, m=1.0, eta=1.0, alpha=0.0, gamma=1.0,
                         entropy=power_law_profile(1.0, 1.0))
    expected = 12.0 / 100.0 * 2.0 + 72.0 / 10**4 + 1.0 / math.sqrt(1.0 + 10**8)
    got = chaining_bound(inputs)
    assert got == pytest.approx(expected, rel=1e-9)
    assert got == pytest.approx(0.2473, abs=5e-5)


def test_chaining_h_zero():
    inputs = BoundInputs(n=100, rho=0.5, m=1.0, eta=1.0, gamma=2.0,
                         entropy=constant_profile(0.0))
    assert chaining_bound(inputs) == pytest.approx(0.5 / math.sqrt(4.0 + 10_000.0), rel=1e-12)


def test_chaining_monotone_in_n():
    prev = math.inf
    for n in (100, 400, 1600, 6400):
        inputs = BoundInputs(n=n, rho=0.5, m=1.0, eta=1.0, alpha=0.01, gamma=1.0,
                             entropy=power_law_profile(1.0, 1.0))
        val = chaining_bound(inputs)
        assert val <= prev
        prev = val


def test_chaining_infimum_beats_random_alphas(rng):
    profiles = [
        power_law_profile(1.0, 1.0),
        power_law_profile(0.5, 1.5),
        parametric_profile(2, 2, 1.0, 3.0),
        constant_profile(4.0, star_hull_correction=True),
    ]
    for prof in profiles:
        free = BoundInputs(n=2000, rho=0.3, m=2.0, eta=0.5, gamma=1.0, entropy=prof)
        inf_val = chaining_bound(free)
        for _ in range(20):
            alpha = float(rng.uniform(0.0, 1.0))
            pinned = BoundInputs(n=2000, rho=0.3, m=2.0, eta=0.5, alpha=alpha, gamma=1.0, entropy=prof)
            assert inf_val <= chaining_bound(pinned) + 1e-9 * (1 + abs(inf_val))


def test_chaining_rejects_bad_alpha():
    inputs = BoundInputs(n=100, rho=0.5, m=1.0, eta=1.0, alpha=2.0, gamma=1.0,
                         entropy=constant_profile(0.0))
    with pytest.raises(ValueError):
        chaining_bound(inputs)


def test_glm_bound_worked_example():
    inputs = BoundInputs(n=1000, rho=0.05)
    got = glm_bound(inputs, 2, 2, 1.0, 3.0)
    expected = 4.0 * math.log(3000.0) ** 2 * math.log(20.0) / 1000.0
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.768, abs=5e-4)
    double_c = BoundInputs(n=1000, rho=0.05, C=2.0)
    assert glm_bound(double_c, 2, 2, 1.0, 3.0) == pytest.approx(2 * got, rel=1e-12)
    near_one = BoundInputs(n=1000, rho=1 - 1e-15)
    assert glm_bound(near_one, 2, 2, 1.0, 3.0) == pytest.approx(0.0, abs=1e-12)


def test_bigglm_rate_table():
    assert bigglm_rate(1.0, "lipschitz_glm", 1.0, math.e) == pytest.approx(math.e ** (-2.0 / 3.0), rel=1e-12)
    n = 1024.0
    assert bigglm_rate(2.0, "lipschitz_glm", 2.0, n) == pytest.approx(4.0 * n**-0.5 * math.log(n), rel=1e-12)
    assert bigglm_rate(3.0, "lipschitz_glm", 2.0, n) == pytest.approx(8.0 * n ** (-1.0 / 3.0), rel=1e-12)
    assert bigglm_rate(4.0, "arbitrary_log", 1.0, n) == pytest.approx(n ** (-1.0 / 8.0), rel=1e-12)
    assert bigglm_rate(1.0, "arbitrary_log", 1.0, n) == pytest.approx(n ** (-1.0 / 2.5), rel=1e-12)
    assert bigglm_rate(2.0, "arbitrary_log", 1.0, n) == pytest.approx(n**-0.25 * math.log(n), rel=1e-12)
    with pytest.raises(ValueError):
        bigglm_rate(-1.0, "lipschitz_glm", 1.0, 100)
    with pytest.raises(ValueError):
        bigglm_rate(1.0, "bogus", 1.0, 100)


def test_bound_inputs_validation():
    with pytest.raises(ValueError):
        BoundInputs(n=0, rho=0.5)
    with pytest.raises(ValueError):
        BoundInputs(n=10, rho=1.5)
    with pytest.raises(ValueError):
        packing_bound(BoundInputs(n=10, rho=0.5, m=1.0, eta=1.0, entropy=H10))  # missing eps
