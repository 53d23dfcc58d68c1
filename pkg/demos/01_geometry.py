"""Distance, correlation and projection of a Gaussian vector to a scaled subdifferential.

For a sparse signal the three quantities D, C and P have closed forms. Here we
compare them with Monte-Carlo estimates, locate the penalty that minimizes D,
and estimate the statistical dimension of the descent cone, which is the
noiseless measurement threshold.
"""

from lassonse import make_model
from lassonse.geometry import bound_table, closed_form_summary, mc_cone, mc_summary
from lassonse.regimes import best_lambda

model = make_model("sparse", n=1000, k=100, seed=0)
print(f"sparse model: n={model.n}, k={model.dims['k']}, beta={model.beta}")

print("\n lambda |  D closed    D mc (stderr)  |  C closed    C mc  |  D+P+2C")
for lam in (0.5, 1.0, 1.5, 2.0):
    cf = closed_form_summary(model, lam)
    mc = mc_summary(model, lam, samples=200, seed=1)
    print(f"  {lam:4.2f}  | {cf.D:8.2f}  {mc.D:8.2f} ({mc.mc_stderr['D']:4.2f})  | "
          f"{cf.C:8.2f}  {mc.C:8.2f}  | {cf.D + cf.P + 2 * cf.C:8.2f}")

lam = best_lambda(model)
print(f"\nD is minimized at lambda_best = {lam:.4f}, where C vanishes "
      f"(C = {closed_form_summary(model, lam).C:.1e})")

cone = mc_cone(model, samples=500, seed=2)
print(f"D_cone ~ {cone.D_cone:.1f} +- {cone.mc_stderr:.1f}  "
      f"(min over lambda of D: {closed_form_summary(model, lam).D:.1f})")
print(f"upper bound 2k(log(n/k)+1) = {bound_table(model)['D_cone_bound']:.1f}")

lr = make_model("lowrank", d=40, r=3, seed=0)
print(f"\nlow-rank d=40, r=3: D_cone ~ {mc_cone(lr, samples=300, seed=0).D_cone:.1f}"
      f" (bound 6dr = {bound_table(lr)['D_cone_bound']:.0f})")
