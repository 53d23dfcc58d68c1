"""Seeded sweeps that reproduce the penalty curves and write plot-ready CSV.

A lambda sweep shows the flat interpolating plateau below lambda_crit and the
convex rise towards lambda_max. Rerunning the same configuration, with any
number of workers, gives a byte-identical file.
"""

import pathlib
import tempfile

from lassonse import harness

out = pathlib.Path(tempfile.mkdtemp()) / "lambda_sweep.csv"
cfg = harness.parse_config("""
scenario = lambda_sweep
kind = sparse
n = 256
k = 26
m = 128
sigma2 = 1e-5
grid = auto:8
trials = 4
seed = 7
""", {"out": str(out)})

rows = harness.run(cfg)
print(" lambda  region  predicted  simulated  resid/(sigma sqrt m)  interp")
for r in rows:
    pred = f"{r.nse_pred:9.3f}" if r.nse_pred is not None else "        -"
    print(f"  {r.penalty:5.3f}  {r.region:>4}  {pred}  {r.nse_sim_mean:9.3f}  "
          f"{r.resid_mean:18.2e}  {r.interp_frac:5.2f}")

again = out.with_name("again.csv")
harness.run(harness.parse_config(f"scenario = lambda_sweep\nn = 256\nk = 26\nm = 128\n"
                                 f"grid = auto:8\ntrials = 4\nseed = 7\nthreads = 2\n"
                                 f"out = {again}"))
print(f"\nwrote {out}; rerun with 2 workers identical: {out.read_bytes() == again.read_bytes()}")
