"""The scalar key optimization and how tightly it concentrates.

For Gaussian g and h the lower key optimization has a closed-form value
sigma sqrt(|g|^2 - dist(h, S)^2). Normalized by sigma sqrt(m - D) it
concentrates around one, with a spread that shrinks like 1 / sqrt(n).
"""

import numpy as np

from lassonse import make_model
from lassonse.gordon import concentration_experiment, key_lower_closed, key_lower_grid
from lassonse.regimes import best_lambda

model = make_model("sparse", n=1000, k=100, seed=0)
lam = best_lambda(model)
rng = np.random.default_rng(0)
g, h = rng.standard_normal(500), rng.standard_normal(1000)
closed = key_lower_closed(g, h, 1.0, model, lam)
grid = key_lower_grid(g, h, 1.0, model, lam)
print(f"closed form: alpha*={closed.alpha_star:.6f} value={closed.value:.6f}")
print(f"grid search: alpha*={grid.alpha_star:.6f} value={grid.value:.6f}")

print("\n    n   mean L/(sigma eta)   std   within +-10%")
for n in (500, 1000, 4000):
    mdl = make_model("sparse", n=n, k=n // 10, seed=0)
    st = concentration_experiment(mdl, n // 2, best_lambda(mdl), trials=200, seed=1)
    vr = st["value_ratio"]
    print(f"{n:6d}   {vr['mean']:8.4f}        {vr['std']:.4f}   {vr['within']['0.1']:.3f}")
