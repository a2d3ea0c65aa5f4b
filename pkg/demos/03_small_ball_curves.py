"""Monte Carlo small-ball curves and the variation index of their log-log fit.

Three estimates from one simulation budget: the probability that the lifted
path stays inside a ball of radius eps, measured in the rough Holder metric
and in the plain path Holder metric, plus the closed-form finite dimensional
curve as a sanity anchor. The fitted index of -log p against 1/eps is the
quantity of interest; for the finite dimensional Gaussian it must come out
at exactly the dimension.
"""

import numpy as np

from roughball.smallball import (
    estimate_sbp_curve,
    fit_variation_index,
    predicted_sbp_index,
    rd_gaussian_small_ball,
)
from roughball.gaussian import brownian_model

# Anchor: the d-dimensional standard Gaussian has an exact radial formula.
print("finite dimensional anchor, slope of -log p vs -log eps near zero:")
eps = np.geomspace(1e-4, 1e-2, 9)
for d in (1, 2, 5):
    p = np.array([rd_gaussian_small_ball(d, e) for e in eps])
    slope = np.polyfit(np.log(eps), np.log(p), 1)[0]
    print(f"  d={d}:  fitted {slope:.4f}  (exact {d})")

print()
model = brownian_model(dim=1)
alpha = 0.40
curve = estimate_sbp_curve(
    model,
    alpha=alpha,
    norm_kind="rough_holder_dyadic",
    eps_list=np.linspace(1.6, 3.0, 8),
    n_samples=4000,
    master_seed=5,
    n_steps=2**8,
)
print(f"rough-metric ball probabilities, alpha={alpha}, small budget:")
for e, p, lo, hi in zip(curve.eps, curve.p_hat, curve.ci_low, curve.ci_high):
    print(f"  eps={e:4.2f}   p={p:.4f}   CI [{lo:.4f}, {hi:.4f}]")

fit = fit_variation_index(curve)
pred = predicted_sbp_index(1.0, alpha)
print()
print(f"fitted index {fit.index:.2f} vs scaling prediction {pred:.2f}")
print("(the fit sees pre-asymptotic eps; the acceptance experiments push the")
print(" window down with larger budgets and report both numbers side by side)")
