"""Gaussian distance summaries of the scaled subdifferential.

For ``h ~ N(0, I_n)`` and a scale ``lam >= 0`` the three summaries are

* ``D = E dist^2(h, lam * df(x0))``,
* ``C = E <Proj(h, lam * df(x0)), h - Proj(h, lam * df(x0))>``,
* ``P = E ||Proj(h, lam * df(x0))||^2``,

with ``D + P + 2C = n``. ``D_cone`` replaces the scaled subdifferential by the
cone it generates. Values come either from closed-form expressions or from
Monte-Carlo sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize, special

from .models import Kind, residual_profile

__all__ = [
    "Method",
    "GeometrySummary",
    "ConeSummary",
    "BoundNotApplicable",
    "closed_form_summary",
    "closed_form_dcp",
    "mc_summary",
    "mc_cone",
    "cone_distance_sq",
    "bound_table",
    "quarter_circle_tail",
    "chi2_tail",
    "sample_stream",
]


class Method(str, Enum):
    CLOSED_FORM = "closed"
    MONTE_CARLO = "mc"


class BoundNotApplicable(ValueError):
    """The requested closed-form bound is only valid for larger ``lam``."""


@dataclass(frozen=True)
class GeometrySummary:
    lam: float
    D: float
    C: float
    P: float
    method: Method
    mc_samples: int | None = None
    mc_stderr: dict | None = None
    asymptotic: bool = False

    def to_dict(self) -> dict:
        out = {"lambda": self.lam, "D": self.D, "C": self.C, "P": self.P,
               "method": self.method.value, "asymptotic": self.asymptotic}
        if self.mc_samples is not None:
            out["samples"] = self.mc_samples
            out["stderr"] = dict(self.mc_stderr)
        return out


@dataclass(frozen=True)
class ConeSummary:
    D_cone: float
    method: Method
    mc_samples: int | None = None
    mc_stderr: float | None = None
    corr: float | None = None
    corr_stderr: float | None = None

    def to_dict(self) -> dict:
        return {"D_cone": self.D_cone, "method": self.method.value, "samples": self.mc_samples,
                "stderr": self.mc_stderr, "corr": self.corr, "corr_stderr": self.corr_stderr}


# --- tail moments -----------------------------------------------------------

def _quarter_circle(x):
    return math.sqrt(max(4.0 - x * x, 0.0)) / math.pi


def quarter_circle_tail(i, u):
    """``int_u^2 x^i psi(x) dx`` for the quarter-circle density on [0, 2]."""
    lo = max(u, 0.0)
    if lo >= 2.0:
        return 0.0
    val, _ = integrate.quad(lambda x: x**i * _quarter_circle(x), lo, 2.0,
                            epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def chi2_tail(i, x, dof):
    """``E[u^i 1{u > x}]`` for ``u ~ chi^2(dof)``.

    Uses ``E[u^i 1{u > x}] = 2^i Gamma(dof/2 + i) / Gamma(dof/2) * Q(dof/2 + i, x/2)``
    with ``Q`` the regularized upper incomplete gamma function; valid for any
    real ``i > -dof/2`` including the half-integer moment.
    """
    a = dof / 2.0
    scale = math.exp(i * math.log(2.0) + special.gammaln(a + i) - special.gammaln(a))
    return float(scale * special.gammaincc(a + i, max(x, 0.0) / 2.0))


# --- closed forms -------------------------------------------------------------

def _sparse_dcp(lam, beta):
    erf = math.erf(lam / math.sqrt(2))
    erfc = math.erfc(lam / math.sqrt(2))
    gauss = math.sqrt(2 / math.pi) * lam * math.exp(-lam * lam / 2)
    D = (1 + lam**2) * (1 - (1 - beta) * erf) - (1 - beta) * gauss
    P = beta * lam**2 + (1 - beta) * (erf + lam**2 * erfc - gauss)
    C = -lam**2 * beta + (1 - beta) * (gauss - lam**2 * erfc)
    return D, C, P


def _lowrank_dcp(lam, beta):
    # lam is in units of sqrt(d); singular values of the off-support block are
    # quarter-circle distributed on [0, 2] once divided by sqrt(d - r)
    ups = lam / math.sqrt(1 - beta) if beta < 1 else math.inf
    psi0 = quarter_circle_tail(0, ups)
    psi1 = quarter_circle_tail(1, ups)
    psi2 = quarter_circle_tail(2, ups)
    q = 1 - beta
    D = (2 * beta - beta**2 + beta * lam**2
         + q * lam**2 * psi0 + q**2 * psi2 - 2 * q**1.5 * lam * psi1)
    P = beta * lam**2 + q * lam**2 * psi0 + q**2 * (1 - psi2)
    C = -lam**2 * beta - q * lam**2 * psi0 + q**1.5 * lam * psi1
    return D, C, P


def _block_dcp(lam, t, b, k):
    x = lam * lam
    psi0 = chi2_tail(0, x, b)
    psi_half = chi2_tail(0.5, x, b)
    psi1 = chi2_tail(1, x, b)
    D = k * (b + x) + (psi1 + psi0 * x - 2 * psi_half * lam) * (t - k)
    P = x * k + ((b - psi1) + x * psi0) * (t - k)
    C = -x * k + (lam * psi_half - x * psi0) * (t - k)
    return D, C, P


def closed_form_dcp(model, lam):
    """``(D, C, P)`` at scale ``lam`` from the closed-form expressions.

    ``lam`` is always the scale in the model's own units, so for low-rank
    models it is internally divided by ``sqrt(d)`` before the asymptotic
    quarter-circle formulas are applied.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    n = model.n
    if model.kind is Kind.SPARSE:
        D, C, P = _sparse_dcp(lam, model.beta)
        return D * n, C * n, P * n
    if model.kind is Kind.LOWRANK:
        D, C, P = _lowrank_dcp(lam / math.sqrt(model.dims["d"]), model.beta)
        return D * n, C * n, P * n
    return _block_dcp(lam, model.dims["t"], model.dims["b"], model.dims["k"])


def closed_form_summary(model, lam) -> GeometrySummary:
    D, C, P = closed_form_dcp(model, lam)
    return GeometrySummary(float(lam), D, C, P, Method.CLOSED_FORM,
                           asymptotic=model.kind is Kind.LOWRANK)


# --- Monte-Carlo --------------------------------------------------------------

def sample_stream(seed, count):
    """One independent generator per sample index, derived from ``seed``.

    A sample's draw depends only on ``(seed, index)``, never on how the loop
    is split across workers.
    """
    root = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in root.spawn(count)]


def _mean_stderr(values):
    values = np.asarray(values, dtype=float)
    mean = math.fsum(values) / values.size
    if values.size < 2:
        return mean, math.nan
    dev = values - mean
    return mean, math.sqrt(math.fsum(dev * dev) / (values.size - 1) / values.size)


def mc_summary(model, lam, samples=200, seed=0) -> GeometrySummary:
    """Monte-Carlo estimates of ``(D, C, P)`` with standard errors."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    rows = np.array([residual_profile(model, g.standard_normal(model.n)).dcp(lam)
                     for g in sample_stream(seed, samples)])
    (D, sD), (C, sC), (P, sP) = (_mean_stderr(rows[:, j]) for j in range(3))
    return GeometrySummary(float(lam), D, C, P, Method.MONTE_CARLO, samples,
                           {"D": sD, "C": sC, "P": sP})


def _min_over_scale(profile, rtol=1e-13):
    """Minimize the convex map ``lam -> dist^2(h, lam * df)`` over ``lam >= 0``."""
    slope = profile.dist2_slope
    if slope(0.0) >= 0:
        return 0.0
    hi = 1.0
    while slope(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("unbounded scale in cone projection")
    lo = hi / 2 if hi > 1.0 else 0.0
    return optimize.brentq(slope, lo, hi, xtol=1e-300, rtol=rtol)


def cone_distance_sq(model, h):
    """Return ``(dist^2(h, cone(df(x0))), lam_star, corr)`` for one sample."""
    prof = residual_profile(model, h)
    lam = _min_over_scale(prof)
    dist2, corr, _ = prof.dcp(lam)
    return dist2, lam, corr


def mc_cone(model, samples=200, seed=0) -> ConeSummary:
    """Monte-Carlo estimate of ``D_cone`` (statistical dimension of the descent cone)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    vals = np.array([cone_distance_sq(model, g.standard_normal(model.n))
                     for g in sample_stream(seed, samples)])
    D, sD = _mean_stderr(vals[:, 0])
    c, sc = _mean_stderr(vals[:, 2])
    return ConeSummary(D, Method.MONTE_CARLO, samples, sD, c, sc)


# --- closed-form upper bounds ------------------------------------------------

def bound_table(model, lam=None, m=None) -> dict:
    """Closed-form upper bounds on ``D_cone`` and (optionally) ``D(lam)``.

    Parameters
    ----------
    model : SignalModel
    lam : float, optional
        Scale for the ``D(lam)`` bound. Must satisfy the family's validity
        condition, otherwise :class:`BoundNotApplicable` is raised.
    m : int, optional
        When given, NSE bounds ``bound / (m - bound)`` are added (``inf``
        when ``m <= bound``).
    """
    out = {}
    if model.kind is Kind.SPARSE:
        n, k = model.n, model.dims["k"]
        out["D_cone_bound"] = 2 * k * (math.log(n / k) + 1)
        if lam is not None:
            thr = math.sqrt(2 * math.log(n / k))
            if lam < thr:
                raise BoundNotApplicable(f"lam must be >= sqrt(2 log(n/k)) = {thr:.6g}")
            out["D_lambda_bound"] = (lam**2 + 3) * k
    elif model.kind is Kind.LOWRANK:
        d, r = model.dims["d"], model.dims["r"]
        out["D_cone_bound"] = 6 * d * r
        if lam is not None:
            thr = 2 * math.sqrt(d)
            if lam < thr:
                raise BoundNotApplicable(f"lam must be >= 2 sqrt(d) = {thr:.6g}")
            out["D_lambda_bound"] = lam**2 * r + 2 * d * (r + 1)
    else:
        t, b, k = model.dims["t"], model.dims["b"], model.dims["k"]
        out["D_cone_bound"] = 4 * k * (math.log(t / k) + b)
        if lam is not None:
            thr = math.sqrt(b) + math.sqrt(2 * math.log(t / k))
            if lam < thr * (1 - 1e-12):
                raise BoundNotApplicable(f"lam must be >= sqrt(b) + sqrt(2 log(t/k)) = {thr:.6g}")
            out["D_lambda_bound"] = (lam**2 + b + 2) * k
    if m is not None:
        for key in [k for k in out if k.endswith("_bound")]:
            bound = out[key]
            out[key.replace("D_", "nse_")] = bound / (m - bound) if m > bound else math.inf
    return out
