"""Scalarized lower key optimization and its concentration.

For ``g ~ N(0, I_m)``, ``h ~ N(0, I_n)`` and a closed convex set ``S`` (the
scaled subdifferential or its cone) the lower key optimization

    min_w  sqrt(||w||^2 + sigma^2) ||g|| - h^T w + max_{s in S} s^T w

reduces to the scalar problem ``min_{alpha >= 0} sqrt(alpha^2 + sigma^2) ||g||
- alpha dist(h, S)``. When ``||g|| > dist`` its minimizer and value are

    alpha* = sigma dist / sqrt(||g||^2 - dist^2),  value = sigma sqrt(||g||^2 - dist^2),

and across draws the value concentrates around ``sigma sqrt(m - D)`` while
``alpha*^2 / sigma^2`` concentrates around ``D / (m - D)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .geometry import closed_form_dcp, cone_distance_sq, sample_stream
from .models import subdiff_residual
from .regimes import nse_formula

__all__ = [
    "KeyOptResult",
    "key_lower_closed",
    "key_lower_grid",
    "key_lower_minimizer",
    "key_objective",
    "distance",
    "concentration_experiment",
    "CONE",
]

CONE = "cone"


@dataclass(frozen=True)
class KeyOptResult:
    alpha_star: float
    value: float
    w_norm_sq_over_sigma_sq: float
    feasible: bool
    dist: float
    g_norm: float
    bracket_exhausted: bool = False


def distance(model, h, scale):
    """``dist(h, lam * df(x0))`` for a float ``scale``, or to the cone for ``CONE``."""
    if scale == CONE:
        return math.sqrt(cone_distance_sq(model, h)[0])
    return float(np.linalg.norm(subdiff_residual(model, h, scale)))


def key_objective(alpha, g_norm, dist, sigma):
    return math.sqrt(alpha * alpha + sigma * sigma) * g_norm - alpha * dist


def _from_dist(g_norm, dist, sigma) -> KeyOptResult:
    gap = g_norm * g_norm - dist * dist
    if gap <= 0:
        # objective nonincreasing in alpha: no finite minimizer
        return KeyOptResult(math.inf, sigma * g_norm, math.inf, False, dist, g_norm)
    root = math.sqrt(gap)
    alpha = sigma * dist / root
    ratio = dist * dist / gap
    return KeyOptResult(alpha, sigma * root, ratio, True, dist, g_norm)


def key_lower_closed(g, h, sigma, model, scale) -> KeyOptResult:
    """Closed-form solution of the scalarized lower key optimization.

    Parameters
    ----------
    g : array, shape (m,)
    h : array, shape (n,)
    sigma : float
    model : SignalModel
    scale : float or ``CONE``
        ``lam`` for the scaled subdifferential, or ``CONE`` for its cone.

    Notes
    -----
    When ``||g|| <= dist`` the problem has no finite minimizer; the result
    then has ``feasible=False`` and ``value = sigma ||g||`` (its value at
    ``alpha = 0``, an upper bound on the infimum).
    """
    return _from_dist(float(np.linalg.norm(g)), distance(model, h, scale), sigma)


def key_lower_minimizer(g, h, sigma, model, scale):
    """The minimizing ``w`` of the full lower key optimization.

    It points along the residual ``h - Proj(h, S)`` and has norm ``alpha*``:
    ``w = sigma (h - Proj(h, S)) / sqrt(||g||^2 - dist^2)``. Only defined for
    the scaled subdifferential (``scale`` a float) and feasible draws.
    """
    if scale == CONE:
        raise ValueError("the minimizer is only provided for a float scale")
    resid = subdiff_residual(model, np.asarray(h, dtype=float), scale)
    gap = float(np.dot(g, g)) - float(resid @ resid)
    if gap <= 0:
        raise ValueError("no finite minimizer: ||g|| <= dist(h, S)")
    return sigma * resid / math.sqrt(gap)


def key_lower_grid(g, h, sigma, model, scale, grid_points=100_000) -> KeyOptResult:
    """Brute-force oracle for :func:`key_lower_closed`.

    Evaluates the scalar objective on a dense grid whose upper end doubles
    until the objective turns upward, then polishes the best grid cell with
    a bounded scalar minimization.
    """
    g_norm = float(np.linalg.norm(g))
    dist = distance(model, h, scale)
    obj = lambda a: np.sqrt(a * a + sigma * sigma) * g_norm - a * dist
    if sigma == 0:
        if g_norm > dist:
            return KeyOptResult(0.0, 0.0, math.nan, True, dist, g_norm)
        return KeyOptResult(math.inf, 0.0, math.nan, False, dist, g_norm, True)

    hi = 10.0 * sigma
    for _ in range(60):
        if obj(hi) > obj(hi / 2):
            break
        hi *= 2.0
    else:
        return KeyOptResult(math.inf, float(obj(hi)), math.inf, False, dist, g_norm, True)
    alphas = np.linspace(0.0, hi, grid_points)
    vals = obj(alphas)
    i = int(np.argmin(vals))
    lo_a, hi_a = alphas[max(i - 1, 0)], alphas[min(i + 1, grid_points - 1)]
    res = optimize.minimize_scalar(obj, bounds=(lo_a, hi_a), method="bounded",
                                   options={"xatol": 1e-12 * max(hi, 1.0)})
    alpha = float(res.x) if res.fun <= vals[i] else float(alphas[i])
    value = float(min(res.fun, vals[i]))
    return KeyOptResult(alpha, value, alpha**2 / sigma**2, g_norm > dist, dist, g_norm)


def concentration_experiment(model, m, scale, sigma=1.0, trials=200, seed=0,
                             eps=(0.05, 0.1, 0.2), D=None) -> dict:
    """Spread of the lower key optimization around its deterministic prediction.

    Draws ``trials`` pairs ``(g, h)`` and reports, for the normalized value
    ``L / (sigma sqrt(m - D))`` and normalized error ``(alpha*^2/sigma^2) /
    (D / (m - D))``, the mean, standard deviation and the fraction of draws
    within ``1 +- e`` for each ``e`` in ``eps``.

    Draws with ``||g|| <= dist`` have no finite minimizer. They count as
    outside every band, are left out of the means and standard deviations,
    and are tallied in ``infeasible_frac``.

    ``D`` defaults to the closed-form ``D(lam)``; pass it explicitly for
    ``scale=CONE``.
    """
    if D is None:
        if scale == CONE:
            raise ValueError("pass D (e.g. from mc_cone) when scale is the cone")
        D = closed_form_dcp(model, scale)[0]
    if m <= D:
        raise ValueError(f"m={m} must exceed D={D:.6g}")
    eta = math.sqrt(m - D)
    gamma = nse_formula(D, m)
    values, errors, feasible = [], [], []
    for rng in sample_stream(seed, trials):
        g = rng.standard_normal(m)
        h = rng.standard_normal(model.n)
        res = key_lower_closed(g, h, sigma, model, scale)
        feasible.append(res.feasible)
        values.append(res.value / (sigma * eta))
        errors.append(res.w_norm_sq_over_sigma_sq / gamma)
    feasible = np.asarray(feasible)

    def stats(x):
        x = np.asarray(x)
        ok = x[feasible]
        return {
            "mean": float(np.mean(ok)) if ok.size else math.nan,
            "std": float(np.std(ok, ddof=1)) if ok.size > 1 else math.nan,
            "within": {str(e): float(np.mean(feasible & (np.abs(x - 1.0) <= e)))
                       for e in eps},
        }

    return {"m": m, "D": D, "eta": eta, "gamma": gamma, "sigma": sigma, "trials": trials,
            "infeasible_frac": float(np.mean(~feasible)),
            "value_ratio": stats(values), "error_ratio": stats(errors)}
