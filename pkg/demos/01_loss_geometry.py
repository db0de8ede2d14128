"""Certified loss curvature, step by step.

Walks the four loss families through their certified constants and runs
the convexity-margin certificates that everything downstream relies on:
Bregman gap >= mu(d(x, y)) for each canonical modulus, the exp-concave
loss-increment margin, the self-concordance margin for -ln (tight for
x >= y), and the scalar inequality e^{-z} + z - 1 >= z^2 / (2c v 4).
"""

import numpy as np

from starloc import (
    bregman_gap,
    canonical_modulus,
    certify_mu_d_convexity,
    exp_concave_margin_check,
    glm_loss,
    log_loss,
    log_margin_scalar_check,
    p_loss,
    self_concordant_gap_check,
    square_loss,
)

models = {
    "square on [-1, 1]": square_loss(1.0),
    "p=3 loss on [-1, 1]": p_loss(3.0, 1.0),
    "log loss on [0.1, 1]": log_loss(0.1),
    "3-class glm, delta=0.1": glm_loss(3, 0.1),
}

print("certified constants")
print(f"{'model':26s} {'range m':>10s} {'eta':>10s} {'lipschitz':>10s}")
for name, model in models.items():
    print(f"{name:26s} {model.m:10.4f} {model.eta:10.4f} {model.lip:10.1f}")

print("\nexample: the square-loss gap is exactly the squared distance")
sq = models["square on [-1, 1]"]
x, y, target = 0.7, -0.2, 0.1
print(f"  gap({x}, {y}) = {bregman_gap(sq, x, y, target):.6f}"
      f" = (x - y)^2 = {canonical_modulus(sq, x, y, target):.6f}")

print("\nexample: the log-loss gap in closed form")
lg = models["log loss on [0.1, 1]"]
x, y = 0.5, 1.0
z = np.log(y / x)
print(f"  gap({x}, {y}) = {bregman_gap(lg, x, y):.6f}"
      f" = e^-z - 1 + z = {np.expm1(-z) + z:.6f}  (z = ln(y/x))")
print(f"  canonical modulus: |ln x - ln y|^2 / (2 ln(1/d) v 4) = {canonical_modulus(lg, x, y):.6f}")

print("\ncertificates (violations should all be zero)")
for name, model in models.items():
    rep = certify_mu_d_convexity(model, grid_size=100, seed=0)
    ec = exp_concave_margin_check(model, trials=10_000, seed=0)
    print(f"  {name:26s} gap>=mu(d): {rep.violations} violations "
          f"(worst slack {rep.worst_slack:+.1e}); "
          f"exp-concave margin: {ec.violations} violations")

rep = certify_mu_d_convexity(p_loss(3.0, 1.0), grid_size=100, seed=0, modulus="power")
print(f"  p=3 power modulus 2^(1-p)|x-y|^p:  {rep.violations} violations")

print("\nself-concordance margin for -ln (exact for x >= y)")
for sat in (False, True):
    rep = self_concordant_gap_check(log_loss(0.05), trials=10_000, seed=0, saturation=sat)
    label = "saturation |gap - omega| <= 1e-12" if sat else "gap >= omega(local norm)"
    print(f"  {label:36s} violations: {rep.violations}")

print("\nscalar margin e^-z + z - 1 >= z^2/(2c v 4)")
for c in (0.5, 2.0, 8.0):
    rep = log_margin_scalar_check(c, points=10_000)
    print(f"  c = {c:3.1f}: {rep.violations} violations, worst slack {rep.worst_slack:+.2e}")
