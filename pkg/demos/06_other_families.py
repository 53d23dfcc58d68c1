"""Low-rank and block-sparse signals through the same pipeline.

The nuclear norm and the l1,2 norm plug into the same geometry, regime and
solver code. The low-rank closed form is an asymptotic formula, so it is
flagged as such.
"""

import math

import numpy as np

from lassonse import make_model
from lassonse.geometry import closed_form_summary, mc_summary
from lassonse.regimes import Program, predict_nse, regime_report
from lassonse.solvers import generate, solve_ell2

for model, m in ((make_model("lowrank", d=20, r=2, seed=0), 240),
                 (make_model("blocksparse", t=64, b=4, k=6, seed=0), 160)):
    rep = regime_report(model, m)
    cf = closed_form_summary(model, rep.lambda_best)
    mc = mc_summary(model, rep.lambda_best, samples=200, seed=0)
    pred = predict_nse(rep, model, Program.ell2(rep.lambda_best)).nse
    sims = [solve_ell2(generate(model, m, 1e-3, seed=s), rep.lambda_best).nse for s in range(10)]
    print(f"{model.kind.value}: n={model.n} m={m} lambda_best={rep.lambda_best:.3f}")
    print(f"  D closed {cf.D:.1f} (asymptotic={cf.asymptotic}), D Monte-Carlo {mc.D:.1f}")
    print(f"  l2-LASSO NSE predicted {pred:.3f}, simulated {np.mean(sims):.3f} "
          f"+- {np.std(sims, ddof=1) / math.sqrt(len(sims)):.3f}")
