"""Regions of operation of the l2-LASSO and the NSE predictions.

The penalty axis splits at lambda_crit and lambda_max. Below lambda_crit the
estimator interpolates the data; between them the NSE follows D / (m - D); past
lambda_max it is unstable. A monotone map sends each l2-LASSO penalty to the
matching l2^2-LASSO penalty.
"""

import numpy as np

from lassonse import make_model
from lassonse.regimes import (Program, classify, map_inverse, map_lambda, predict_nse,
                              regime_report, tau_best)

model = make_model("sparse", n=1500, k=150, seed=0)
rep = regime_report(model, m=750)
print(f"lambda_crit = {rep.lambda_crit:.4f}")
print(f"lambda_best = {rep.lambda_best:.4f}   D_best = {rep.D_best:.1f}")
print(f"lambda_max  = {rep.lambda_max:.4f}")
print(f"tau_best    = {tau_best(rep):.3f}")

print("\n lambda  region  predicted NSE   tau = map(lambda)")
for lam in np.linspace(0.3, 1.95, 8):
    p = predict_nse(rep, model, Program.ell2(lam))
    tau = map_lambda(rep, model, lam) if lam >= rep.lambda_crit else float("nan")
    flag = " (conjectured)" if p.conjectured else ""
    print(f"  {lam:5.3f}  {classify(rep, lam).value:>4}   {p.nse:8.4f}{flag:14}  {tau:8.3f}")

for tau in (5.0, tau_best(rep), 60.0):
    lam = map_inverse(rep, model, tau)
    p = predict_nse(rep, model, Program.ell22(tau))
    print(f"l2^2 penalty tau={tau:6.2f} <-> lambda={lam:.4f}, predicted NSE {p.nse:.4f}")
