"""Numeric excess-risk bounds and their shapes.

Evaluates the finite-class bound eps + (36m v 72/eta)(H2 + ln(1/rho))/n,
the chaining bound with its entropy integral and alpha-infimum, the GLM
closed form C k d ln(ABn)^2 ln(1/rho)/n, and the polynomial-entropy rate
table. All unspecified leading constants are explicit inputs.
"""

import numpy as np

from starloc import (
    BoundInputs,
    bigglm_rate,
    chaining_bound,
    constant_profile,
    entropy_eval,
    finite_empirical_profile,
    glm_bound,
    packing_bound,
    parametric_profile,
    power_law_profile,
)

print("finite-class bound across sample sizes (m=1, eta=1, H=10, rho=0.05, eps=1/n)")
for n in (100, 1000, 10000, 100000):
    inputs = BoundInputs(n=n, rho=0.05, m=1.0, eta=1.0, eps=1.0 / n,
                         entropy=constant_profile(10.0))
    print(f"  n = {n:6d}: {packing_bound(inputs):.6f}")

print("\nentropy profiles at eps = 0.01")
profiles = {
    "parametric k=2,d=2,A=1,B=3": parametric_profile(2, 2, 1.0, 3.0),
    "power law (1/eps)^1": power_law_profile(1.0, 1.0),
    "five separated vectors": finite_empirical_profile(
        vectors=np.diag(np.arange(1.0, 6.0))),
}
for name, prof in profiles.items():
    print(f"  {name:28s} H2(0.01) = {entropy_eval(prof, 0.01):9.3f}")

print("\nchaining bound: alpha pinned vs the infimum over alpha")
prof = power_law_profile(1.0, 1.0)
free = BoundInputs(n=10**4, rho=0.5, m=1.0, eta=1.0, gamma=1.0, entropy=prof)
print(f"  infimum over alpha: {chaining_bound(free):.6f}")
for alpha in (0.0, 0.001, 0.01, 0.1):
    pinned = BoundInputs(n=10**4, rho=0.5, m=1.0, eta=1.0, alpha=alpha, gamma=1.0, entropy=prof)
    print(f"  alpha = {alpha:5.3f}:        {chaining_bound(pinned):.6f}")

print("\nGLM bound C k d ln(ABn)^2 ln(1/rho) / n")
for n in (1000, 10000, 100000):
    inputs = BoundInputs(n=n, rho=0.05)
    print(f"  n = {n:6d}: {glm_bound(inputs, 2, 2, 1.0, 3.0):.6f}")

print("\npolynomial-entropy rate table at n = 4096 (order of magnitude, constant 1)")
print(f"  {'q':>4s} {'lipschitz link':>16s} {'arbitrary class':>16s}")
for q in (0.5, 1.0, 2.0, 4.0):
    left = bigglm_rate(q, "lipschitz_glm", 1.0, 4096)
    right = bigglm_rate(q, "arbitrary_log", 1.0, 4096)
    print(f"  {q:4.1f} {left:16.6f} {right:16.6f}")
