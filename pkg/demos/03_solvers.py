"""Solve the three LASSO programs on random instances and compare with theory.

Each trial draws a fresh sparse signal, a Gaussian measurement matrix and
noise, then solves the constrained program, the l2-LASSO at lambda_best and
the l2^2-LASSO at tau_best.
"""

import math

import numpy as np

from lassonse import make_model
from lassonse.geometry import mc_cone
from lassonse.regimes import Program, predict_nse, regime_report, tau_best
from lassonse.solvers import generate, solve_classo, solve_ell2, solve_ell22

dims, m, sigma = {"n": 256, "k": 26}, 128, math.sqrt(1e-5)
ref = make_model("sparse", dims, seed=0)
rep = regime_report(ref, m)
d_cone = mc_cone(ref, samples=1000, seed=0).D_cone

sims = {"classo": [], "ell2": [], "ell22": []}
for trial in range(20):
    inst = generate(make_model("sparse", dims, seed=100 + trial), m, sigma, seed=trial)
    sims["classo"].append(solve_classo(inst).nse)
    sims["ell2"].append(solve_ell2(inst, rep.lambda_best).nse)
    sims["ell22"].append(solve_ell22(inst, tau_best(rep)).nse)

preds = {
    "classo": predict_nse(rep, ref, Program.classo(), d_cone=d_cone).nse,
    "ell2": predict_nse(rep, ref, Program.ell2(rep.lambda_best)).nse,
    "ell22": predict_nse(rep, ref, Program.ell22(tau_best(rep))).nse,
}
for name in sims:
    print(f"{name:7s} simulated NSE {np.mean(sims[name]):.3f} +- "
          f"{np.std(sims[name], ddof=1) / math.sqrt(len(sims[name])):.3f}   "
          f"predicted {preds[name]:.3f}")

inst = generate(ref, m, sigma, seed=0)
off = solve_ell2(inst, 0.4)
print(f"\nlambda=0.4 lies below lambda_crit={rep.lambda_crit:.3f}: interpolating={off.interpolating},"
      f" residual/(sigma sqrt m) = {off.residual_norm / (sigma * math.sqrt(m)):.1e}")
