"""Key penalty values, regions of operation and NSE predictions.

Given a model and a measurement count ``m`` this module locates

* ``lambda_best`` -- the minimizer of ``D(lam)`` (equivalently the root of ``C``),
* ``lambda_crit`` -- the root of ``m - D(lam) = C(lam)`` below ``lambda_best``
  (zero when ``m >= n``),
* ``lambda_max``  -- the root of ``D(lam) = m`` above ``lambda_best``,

which split the penalty axis into the interpolating region ``OFF``, the
well-behaved region ``ON`` and the unstable region ``INF``. On ``ON`` the map
``lam -> lam (m - D - C) / sqrt(m - D)`` is a bijection onto the l2^2 penalty
axis and links the two penalized estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import interpolate, optimize

from .geometry import closed_form_dcp, mc_summary
from .models import residual_profile

__all__ = [
    "Region",
    "RegimeReport",
    "Program",
    "Prediction",
    "InsufficientMeasurements",
    "DomainError",
    "UnstableRegion",
    "regime_report",
    "best_lambda",
    "classify",
    "map_lambda",
    "map_inverse",
    "calib",
    "tau_best",
    "predict_nse",
    "predict_nse_ls",
    "nse_formula",
    "translate_variance",
]

LAMBDA_CAP = 1e3
ROOT_XTOL = 1e-12


class InsufficientMeasurements(ValueError):
    """``m <= D(lambda_best)``: no penalty gives a robust estimator."""


class DomainError(ValueError):
    """A penalty outside the interval where a formula is defined."""


class UnstableRegion(ValueError):
    """The l2-LASSO penalty lies in the unstable region ``lam >= lambda_max``."""


class Region(str, Enum):
    OFF = "OFF"
    ON = "ON"
    INF = "INF"


@dataclass(frozen=True)
class RegimeReport:
    m: int
    n: int
    lambda_best: float
    lambda_crit: float
    lambda_max: float
    D_best: float
    geometry_source: str
    geometry: Callable = field(repr=False, compare=False)

    def D(self, lam):
        return self.geometry(lam)[0]

    def C(self, lam):
        return self.geometry(lam)[1]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "lambda_crit": self.lambda_crit,
            "lambda_best": self.lambda_best,
            "lambda_max": self.lambda_max,
            "D_best": self.D_best,
            "tau_best": self.lambda_best * math.sqrt(self.m - self.D_best),
            "geometry_source": self.geometry_source,
        }


def _closed_geometry(model):
    def geom(lam):
        D, C, _ = closed_form_dcp(model, lam)
        return D, C
    return geom


def _smoothed_geometry(model, samples, seed, grid_points=41):
    """Spline fits of Monte-Carlo ``D`` and ``C`` on a penalty grid.

    Raw Monte-Carlo values are too noisy for bisection, so root finding runs
    on smoothing splines instead.
    """
    # beyond max(off) + sqrt(n / on_ee) every sample has dist^2 > n >= m
    prof = residual_profile(model, np.random.default_rng(seed).standard_normal(model.n))
    hi = 1.2 * (prof.off.max(initial=0.0) + math.sqrt(model.n / prof.on_ee))
    lams = np.linspace(0.0, hi, grid_points)
    Ds, Cs = [], []
    for j, lam in enumerate(lams):
        s = mc_summary(model, lam, samples, seed=(seed, j))
        Ds.append(s.D)
        Cs.append(s.C)
    fD = interpolate.make_smoothing_spline(lams, np.asarray(Ds))
    fC = interpolate.make_smoothing_spline(lams, np.asarray(Cs))

    def geom(lam):
        if lam > hi:
            raise DomainError(f"lam={lam} outside the Monte-Carlo grid [0, {hi}]")
        return float(fD(lam)), float(fC(lam))
    return geom


def _expand(pred, start=1.0):
    """Double ``start`` until ``pred`` holds; hard error past the cap."""
    hi = start
    while not pred(hi):
        hi *= 2.0
        if hi > LAMBDA_CAP:
            raise RuntimeError(f"no bracket found below lam={LAMBDA_CAP}")
    return hi


def _lambda_best(geom, check=True):
    D = lambda lam: geom(lam)[0]
    hi = _expand(lambda x: D(2 * x) > D(x))
    res = optimize.minimize_scalar(D, bounds=(0.0, 2 * hi), method="bounded",
                                   options={"xatol": 1e-10})
    golden = float(res.x)
    C = lambda lam: geom(lam)[1]
    lo, up = golden / 2, max(2 * golden, golden + 1e-3)
    if C(lo) > 0 > C(up):
        root = optimize.brentq(C, lo, up, xtol=ROOT_XTOL)
    else:
        root = golden
    if check and abs(root - golden) > 1e-4:
        raise RuntimeError(f"argmin D ({golden}) and root of C ({root}) disagree")
    return root


def best_lambda(model) -> float:
    """Minimizer of the closed-form ``D(lam)``; it does not depend on ``m``."""
    return _lambda_best(_closed_geometry(model))


def regime_report(model, m, source="closed", samples=400, seed=0) -> RegimeReport:
    """Compute ``lambda_crit``, ``lambda_best``, ``lambda_max`` for ``(model, m)``.

    Parameters
    ----------
    model : SignalModel
    m : int
        Number of measurements.
    source : {"closed", "mc"}
        Closed-form geometry, or smoothed Monte-Carlo geometry.
    samples, seed
        Only used by ``source="mc"``.

    Raises
    ------
    InsufficientMeasurements
        If ``m <= D(lambda_best)``.
    """
    if source == "closed":
        geom = _closed_geometry(model)
    elif source == "mc":
        geom = _smoothed_geometry(model, samples, seed)
    else:
        raise ValueError(f"unknown geometry source {source!r}")

    lam_best = _lambda_best(geom, check=source == "closed")
    D_best = geom(lam_best)[0]
    if m <= D_best:
        raise InsufficientMeasurements(
            f"m={m} does not exceed D(lambda_best)={D_best:.6g}")

    excess = lambda lam: geom(lam)[0] - m
    hi = _expand(lambda x: excess(x) > 0, start=max(2 * lam_best, 1.0))
    lam_max = optimize.brentq(excess, lam_best, hi, xtol=ROOT_XTOL)

    if m >= model.n:
        lam_crit = 0.0
    else:
        gap = lambda lam: m - sum(geom(lam))
        lam_crit = optimize.brentq(gap, 0.0, lam_best, xtol=ROOT_XTOL)

    return RegimeReport(int(m), model.n, float(lam_best), float(lam_crit), float(lam_max),
                        float(D_best), source, geom)


def classify(report, lam) -> Region:
    if lam <= report.lambda_crit:
        return Region.OFF
    if lam < report.lambda_max:
        return Region.ON
    return Region.INF


def calib(report, lam):
    """``(m - D - C) / sqrt(m - D)``; requires ``D(lam) < m``."""
    D, C = report.geometry(lam)
    return (report.m - D - C) / math.sqrt(report.m - D)


def map_lambda(report, model, lam) -> float:
    """Map an l2-LASSO penalty on ``[lambda_crit, lambda_max)`` to the l2^2 penalty."""
    if not report.lambda_crit <= lam < report.lambda_max:
        raise DomainError(
            f"lam={lam} outside [{report.lambda_crit}, {report.lambda_max})")
    return max(lam * calib(report, lam), 0.0)


def map_inverse(report, model, tau) -> float:
    """Unique ``lam`` in ``[lambda_crit, lambda_max)`` with ``map_lambda(lam) = tau``."""
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    lo = report.lambda_crit
    if tau == 0:
        return lo
    f = lambda lam: lam * calib(report, lam) - tau
    width = report.lambda_max - lo
    delta = 1e-3 * width
    hi = report.lambda_max - delta
    while f(hi) <= 0:
        delta /= 16.0
        if delta < 1e-15 * report.lambda_max:
            return report.lambda_max
        hi = report.lambda_max - delta
    if f(lo) >= 0:
        return lo
    return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-14, maxiter=500)


def tau_best(report, model=None) -> float:
    return report.lambda_best * math.sqrt(report.m - report.D_best)


@dataclass(frozen=True)
class Program:
    """Which estimator a prediction refers to.

    Use ``Program.classo()``, ``Program.ell2(lam)``, ``Program.ell22(tau)``.
    """

    name: str
    penalty: float | None = None

    @classmethod
    def classo(cls):
        return cls("classo")

    @classmethod
    def ell2(cls, lam):
        return cls("ell2", float(lam))

    @classmethod
    def ell22(cls, tau):
        return cls("ell22", float(tau))


@dataclass(frozen=True)
class Prediction:
    nse: float
    region: Region | None
    conjectured: bool
    program: Program
    lam: float | None = None

    def to_dict(self) -> dict:
        return {"program": self.program.name, "penalty": self.program.penalty,
                "nse": self.nse, "region": self.region.value if self.region else None,
                "conjectured": self.conjectured, "lambda": self.lam}


def nse_formula(D, m):
    """The small-noise NSE ``D / (m - D)``."""
    return D / (m - D)


def predict_nse(report, model, program, d_cone=None) -> Prediction:
    """Small-noise NSE prediction for one of the three estimators.

    Parameters
    ----------
    program : Program
    d_cone : float, optional
        ``D_cone`` for the constrained estimator. Defaults to
        ``D(lambda_best)``, which approximates it from above.

    Raises
    ------
    UnstableRegion
        For ``Program.ell2(lam)`` with ``lam >= lambda_max``.
    InsufficientMeasurements
        For the constrained estimator when ``m <= d_cone``.
    """
    m = report.m
    if program.name == "classo":
        D = report.D_best if d_cone is None else d_cone
        if m <= D:
            raise InsufficientMeasurements(f"m={m} does not exceed D_cone={D:.6g}")
        return Prediction(nse_formula(D, m), None, False, program)
    if program.name == "ell2":
        lam = program.penalty
        region = classify(report, lam)
        if region is Region.INF:
            raise UnstableRegion(f"lam={lam} >= lambda_max={report.lambda_max}")
        if region is Region.OFF:
            return Prediction(nse_formula(report.D(report.lambda_crit), m), region, True, program, lam)
        return Prediction(nse_formula(report.D(lam), m), region, False, program, lam)
    if program.name == "ell22":
        lam = map_inverse(report, model, program.penalty)
        return Prediction(nse_formula(report.D(lam), m), classify(report, lam), True, program, lam)
    raise ValueError(f"unknown program {program.name!r}")


def predict_nse_ls(n, m) -> float:
    """Expected NSE of least squares, ``n / (m - n - 1)``."""
    if m < n + 2:
        raise DomainError("least squares NSE needs m >= n + 2")
    return n / (m - n - 1)


def translate_variance(m, sigma_prime, lambda_prime, tau_prime):
    """Convert per-entry variance ``1/m`` parameters to the unit-variance setting.

    Returns ``(sigma, lam, tau, nse_scale)``; an NSE measured against
    ``sigma_prime`` equals ``nse_scale`` times the unit-variance prediction.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    root = math.sqrt(m)
    return root * sigma_prime, root * lambda_prime, m * tau_prime, float(m)
