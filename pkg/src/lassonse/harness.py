"""Seeded simulation sweeps that compare simulated and predicted NSE.

A sweep is described by an :class:`ExperimentConfig`, read from a flat
``key = value`` text file (``#`` starts a comment) and optionally overridden
from the command line. Every grid point is simulated with ``trials`` fresh
instances; trial ``j`` at point ``i`` draws its ground truth and its
measurements from ``SeedSequence(seed, spawn_key=(i, j))``, so results do
not depend on the number of workers.

Output rows share one schema. ``penalty`` holds the swept value (``lam``,
``tau`` or ``m``), ``resid_mean`` is the mean of ``||y - A x_hat|| / (sigma
sqrt(m))`` and ``interp_frac`` the fraction of interpolating l2 solutions.
Scenarios that sweep several noise levels tag the ``scenario`` field, e.g.
``sigma_sweep:sigma2=0.0001``.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gordon
from .geometry import mc_cone
from .models import Kind, make_model
from .regimes import (InsufficientMeasurements, Program, Region, UnstableRegion, best_lambda,
                      classify, predict_nse, regime_report, tau_best)
from .solvers import generate, solve_classo, solve_ell2, solve_ell22

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SweepRow",
    "SCENARIOS",
    "CSV_HEADER",
    "parse_config",
    "load_config",
    "run",
    "emit_csv",
    "write_csv",
    "emit_json",
    "read_csv",
    "read_json",
    "trial_seeds",
]

SCENARIOS = ("lambda_sweep", "tau_sweep", "sigma_sweep", "classo_msweep",
             "converse_demo", "gordon_bands")
CSV_HEADER = ("scenario", "penalty", "region", "nse_pred", "nse_sim_mean",
              "nse_sim_stderr", "trials", "resid_mean", "interp_frac")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    kind: str = "sparse"
    dims: dict = field(default_factory=lambda: {"n": 256, "k": 26})
    m: int = 128
    sigma2: tuple = (1e-5,)
    grid: object = "auto:20"
    trials: int = 50
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    threads: int = 1
    cone_samples: int = 1000

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        try:
            Kind(self.kind)
        except ValueError:
            raise ConfigError(f"unknown model kind {self.kind!r}") from None
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.sigma2 or any(s <= 0 for s in self.sigma2):
            raise ConfigError("sigma2 must be a nonempty list of positive values")
        if isinstance(self.grid, str):
            if not self.grid.startswith("auto:") or int(self.grid[5:]) < 1:
                raise ConfigError(f"bad grid {self.grid!r}; use a list or 'auto:K'")
        elif len(self.grid) == 0:
            raise ConfigError("grid must be nonempty")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    penalty: float
    region: str | None
    nse_pred: float | None
    nse_sim_mean: float | None
    nse_sim_stderr: float | None
    trials: int
    resid_mean: float | None
    interp_frac: float | None
    nonconverged: int = 0


# --- configuration ------------------------------------------------------------

_DIM_KEYS = ("n", "k", "d", "r", "t", "b")
_INT_KEYS = ("m", "trials", "seed", "threads", "cone_samples")


def _floats(text):
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def parse_config(text, overrides=None) -> ExperimentConfig:
    """Build a config from ``key = value`` lines plus an override mapping."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    return _from_raw(raw)


def _from_raw(raw) -> ExperimentConfig:
    raw = dict(raw)
    if "scenario" not in raw:
        raise ConfigError("missing required key 'scenario'")
    kwargs = {"scenario": str(raw.pop("scenario"))}
    dims = {k: int(raw.pop(k)) for k in _DIM_KEYS if k in raw}
    try:
        for key in _INT_KEYS:
            if key in raw:
                kwargs[key] = int(raw.pop(key))
        if "sigma2" in raw:
            kwargs["sigma2"] = _floats(raw.pop("sigma2"))
        if "grid" in raw:
            grid = raw.pop("grid")
            kwargs["grid"] = grid if str(grid).startswith("auto:") else _floats(grid)
        for key in ("kind", "out", "format"):
            if key in raw:
                kwargs[key] = str(raw.pop(key))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if raw:
        raise ConfigError(f"unknown config keys: {sorted(raw)}")
    if dims:
        kwargs["dims"] = dims
    return ExperimentConfig(**kwargs)


def load_config(path, overrides=None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), overrides)


# --- seeding --------------------------------------------------------------------

def trial_seeds(master, point, trial):
    """``(model_seed, instance_seed)`` for one trial of one grid point."""
    ss = np.random.SeedSequence(master, spawn_key=(point, trial))
    a, b = ss.generate_state(2, dtype=np.uint64)
    return int(a), int(b)


# --- trial workers ----------------------------------------------------------------

def _trial(task):
    """Run one simulated trial. Kept module-level so it pickles for workers."""
    kind, dims, m, sigma, program, penalty, master, point, trial = task
    model_seed, inst_seed = trial_seeds(master, point, trial)
    model = make_model(kind, dims, seed=model_seed)
    inst = generate(model, m, sigma, seed=inst_seed)
    if program == "ell2":
        res = solve_ell2(inst, penalty)
    elif program == "ell22":
        res = solve_ell22(inst, penalty)
    else:
        res = solve_classo(inst)
    return (res.nse, res.residual_norm / (sigma * math.sqrt(m)), res.interpolating,
            res.converged)


def _map(tasks, threads):
    if threads <= 1:
        return [_trial(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_trial, tasks, chunksize=4))


def _summarize(scenario, penalty, region, pred, outcomes):
    arr = np.array([o[0] for o in outcomes])
    n = arr.size
    stderr = float(np.std(arr, ddof=1) / math.sqrt(n)) if n > 1 else None
    return SweepRow(
        scenario, float(penalty), region, pred,
        math.fsum(arr) / n, stderr, n,
        math.fsum(o[1] for o in outcomes) / n,
        sum(bool(o[2]) for o in outcomes) / n,
        sum(not o[3] for o in outcomes),
    )


def _auto(grid, lo, hi):
    if isinstance(grid, str):
        return list(np.linspace(lo, hi, int(grid[5:])))
    return list(grid)


# --- scenarios ----------------------------------------------------------------------

def _pred_row(report, model, program):
    try:
        p = predict_nse(report, model, program)
    except (UnstableRegion, InsufficientMeasurements):
        return None, Region.INF.value
    region = p.region.value if p.region is not None else None
    return p.nse, region


def _penalty_sweep(cfg, model, report, program_name, points, label=None, sigma2=None,
                   point_offset=0):
    sigma = math.sqrt(sigma2 if sigma2 is not None else cfg.sigma2[0])
    label = label or cfg.scenario
    tasks = []
    for i, pen in enumerate(points):
        for j in range(cfg.trials):
            tasks.append((cfg.kind, cfg.dims, cfg.m, sigma, program_name, float(pen),
                          cfg.seed, point_offset + i, j))
    out = _map(tasks, cfg.threads)
    rows = []
    for i, pen in enumerate(points):
        chunk = out[i * cfg.trials:(i + 1) * cfg.trials]
        if program_name == "ell2":
            pred, region = _pred_row(report, model, Program.ell2(pen))
        else:
            pred, region = _pred_row(report, model, Program.ell22(pen))
        rows.append(_summarize(label, pen, region, pred, chunk))
    return rows


def _run_lambda_sweep(cfg, model):
    rep = regime_report(model, cfg.m)
    lo = 0.2 * rep.lambda_crit if rep.lambda_crit > 0 else 0.05 * rep.lambda_max
    grid = _auto(cfg.grid, lo, 0.98 * rep.lambda_max)
    return _penalty_sweep(cfg, model, rep, "ell2", grid)


def _run_tau_sweep(cfg, model):
    rep = regime_report(model, cfg.m)
    tb = tau_best(rep)
    k = int(cfg.grid[5:]) if isinstance(cfg.grid, str) else None
    grid = list(np.linspace(3 * tb / k, 3 * tb, k)) if k else list(cfg.grid)
    return _penalty_sweep(cfg, model, rep, "ell22", grid)


def _run_sigma_sweep(cfg, model):
    rep = regime_report(model, cfg.m)
    tb = tau_best(rep)
    k = int(cfg.grid[5:]) if isinstance(cfg.grid, str) else None
    grid = list(np.linspace(3 * tb / k, 3 * tb, k)) if k else list(cfg.grid)
    rows = []
    for s_idx, s2 in enumerate(cfg.sigma2):
        rows += _penalty_sweep(cfg, model, rep, "ell22", grid,
                               label=f"sigma_sweep:sigma2={s2:g}", sigma2=s2,
                               point_offset=s_idx * len(grid))
    return rows


def _d_cone(cfg, model):
    return mc_cone(model, cfg.cone_samples, seed=cfg.seed).D_cone


def _run_classo_msweep(cfg, model):
    dc = _d_cone(cfg, model)
    if isinstance(cfg.grid, str):
        grid = sorted({int(v) for v in np.linspace(1.2 * dc, model.n, int(cfg.grid[5:]))})
    else:
        grid = [int(v) for v in cfg.grid]
    sigma = math.sqrt(cfg.sigma2[0])
    tasks = [(cfg.kind, cfg.dims, m, sigma, "classo", 0.0, cfg.seed, i, j)
             for i, m in enumerate(grid) for j in range(cfg.trials)]
    out = _map(tasks, cfg.threads)
    rows = []
    for i, m in enumerate(grid):
        pred = dc / (m - dc) if m > dc else None
        rows.append(_summarize(cfg.scenario, m, None, pred,
                               out[i * cfg.trials:(i + 1) * cfg.trials]))
    return rows


def _run_converse(cfg, model):
    dc = _d_cone(cfg, model)
    m = math.ceil(0.5 * dc)
    rep_lam = best_lambda(model)
    rows = []
    for s_idx, s2 in enumerate(cfg.sigma2):
        sigma = math.sqrt(s2)
        for p_idx, (program, pen) in enumerate((("classo", 0.0), ("ell2", rep_lam))):
            point = 2 * s_idx + p_idx
            tasks = [(cfg.kind, cfg.dims, m, sigma, program, pen, cfg.seed, point, j)
                     for j in range(cfg.trials)]
            rows.append(_summarize(f"converse_demo:{program}:sigma2={s2:g}", pen, None, None,
                                   _map(tasks, cfg.threads)))
    return rows


def _run_gordon_bands(cfg, model):
    rep = regime_report(model, cfg.m)
    grid = _auto(cfg.grid, max(rep.lambda_crit, 0.05 * rep.lambda_max), 0.98 * rep.lambda_max)
    rows = []
    for i, lam in enumerate(grid):
        st = gordon.concentration_experiment(model, cfg.m, float(lam), sigma=1.0,
                                             trials=cfg.trials, seed=(cfg.seed, i))
        er = st["error_ratio"]
        rows.append(SweepRow(cfg.scenario, float(lam), classify(rep, lam).value, st["gamma"],
                             er["mean"] * st["gamma"], er["std"] * st["gamma"] / math.sqrt(cfg.trials),
                             cfg.trials, st["value_ratio"]["mean"],
                             st["value_ratio"]["within"]["0.1"]))
    return rows


_RUNNERS = {
    "lambda_sweep": _run_lambda_sweep,
    "tau_sweep": _run_tau_sweep,
    "sigma_sweep": _run_sigma_sweep,
    "classo_msweep": _run_classo_msweep,
    "converse_demo": _run_converse,
    "gordon_bands": _run_gordon_bands,
}


def run(cfg: ExperimentConfig, write=True) -> list:
    """Run a sweep; write ``cfg.out`` (if set and ``write``) and return the rows.

    The reference model used for predictions is drawn from ``cfg.seed``; each
    trial then draws its own ground truth of the same family and dimensions.
    """
    model = make_model(cfg.kind, cfg.dims, seed=cfg.seed)
    rows = sorted(_RUNNERS[cfg.scenario](cfg, model), key=lambda r: (r.scenario, r.penalty))
    if write and cfg.out:
        (emit_json if cfg.format == "json" else emit_csv)(rows, cfg.out)
    return rows


# --- emission ---------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in CSV_HEADER])


def emit_csv(rows, path):
    with open(path, "w", newline="") as fh:
        write_csv(rows, fh)


def emit_json(rows, path):
    with open(path, "w") as fh:
        json.dump([{name: getattr(r, name) for name in CSV_HEADER} for r in rows], fh, indent=1)
        fh.write("\n")


def _parse_cell(name, text):
    if text == "":
        return None
    if name in ("scenario", "region"):
        return text
    if name == "trials":
        return int(text)
    return float(text)


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header {header}")
        return [SweepRow(**{n: _parse_cell(n, c) for n, c in zip(header, rec)}) for rec in reader]


def read_json(path) -> list:
    with open(path) as fh:
        return [SweepRow(**rec) for rec in json.load(fh)]
