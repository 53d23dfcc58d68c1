"""Random Gaussian instances and solvers for the three LASSO programs.

* constrained:  ``min ||y - Ax||  s.t.  f(x) <= f(x0)``
* l2-LASSO:     ``min ||y - Ax|| + lam f(x)``
* l2^2-LASSO:   ``min 0.5 ||y - Ax||^2 + sigma tau f(x)``

The l2^2 program is solved by accelerated proximal gradient with adaptive
restart. The constrained program uses the same engine with the projection
onto the f-ball in place of the prox (the squared residual has the same
minimizers). The l2 program is reduced to an l2^2 solve at the penalty
``tau = lam ||y - A x_hat|| / sigma``, found by a bracketed fixed-point search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import models

__all__ = [
    "LassoInstance",
    "SolveResult",
    "generate",
    "lipschitz_constant",
    "solve_ell22",
    "solve_ell2",
    "solve_classo",
    "nse",
]


@dataclass(frozen=True, eq=False)
class LassoInstance:
    """``y = A x0 + sigma v`` with standard normal ``A`` and ``v``."""

    model: models.SignalModel
    m: int
    sigma: float
    A: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    seed: object = None
    ensemble: str = "gaussian"

    @property
    def x0(self):
        return self.model.x0

    def with_noise(self, sigma):
        """Same ``A`` and ``v`` at a different noise level."""
        return LassoInstance(self.model, self.m, sigma, self.A, self.v,
                             self.A @ self.model.x0 + sigma * self.v, self.seed, self.ensemble)


@dataclass
class SolveResult:
    x_hat: np.ndarray = field(repr=False)
    nse: float
    residual_norm: float
    f_hat: float
    objective: float
    iterations: int
    converged: bool
    program: str
    penalty: float | None
    tau: float | None = None
    interpolating: bool = False
    fixed_point_residual: float = math.nan

    def to_dict(self, with_x=False) -> dict:
        out = {k: getattr(self, k) for k in
               ("nse", "residual_norm", "f_hat", "objective", "iterations", "converged",
                "program", "penalty", "tau", "interpolating", "fixed_point_residual")}
        if with_x:
            out["x_hat"] = [float(v) for v in self.x_hat]
        return out


def generate(model, m, sigma, seed=0, ensemble="gaussian") -> LassoInstance:
    """Draw ``A`` (m x n) and ``v`` (length m) and form ``y = A x0 + sigma v``.

    ``ensemble="rademacher"`` draws +-1 entries for ``A`` instead.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    rng = np.random.default_rng(seed)
    if ensemble == "gaussian":
        A = rng.standard_normal((m, model.n))
    elif ensemble == "rademacher":
        A = rng.choice([-1.0, 1.0], size=(m, model.n))
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    v = rng.standard_normal(m)
    A.setflags(write=False)
    v.setflags(write=False)
    y = A @ model.x0 + sigma * v
    y.setflags(write=False)
    return LassoInstance(model, int(m), float(sigma), A, v, y, seed, ensemble)


def nse(x_hat, instance_or_x0, sigma=None) -> float:
    """``||x_hat - x0||^2 / sigma^2``.

    Either pass an instance, or ``x0`` and ``sigma`` explicitly.
    """
    if isinstance(instance_or_x0, LassoInstance):
        x0, sigma = instance_or_x0.x0, instance_or_x0.sigma
    else:
        x0 = np.asarray(instance_or_x0, dtype=float)
    err = np.asarray(x_hat, dtype=float) - x0
    return float(err @ err) / sigma**2


def lipschitz_constant(A, iters=200, tol=1e-6):
    """Largest eigenvalue of ``A^T A`` by power iteration."""
    x = np.ones(A.shape[1]) / math.sqrt(A.shape[1])
    est = 0.0
    for _ in range(iters):
        w = A.T @ (A @ x)
        new = float(np.linalg.norm(w))
        x = w / new
        if abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return est


_L_CACHE: dict = {}


def _lipschitz(instance):
    key = id(instance.A)
    hit = _L_CACHE.get(key)
    if hit is None or hit[0] is not instance.A:
        # power iteration converges from below; pad for the residual error
        hit = (instance.A, lipschitz_constant(instance.A) * (1 + 1e-4))
        if len(_L_CACHE) > 64:
            _L_CACHE.clear()
        _L_CACHE[key] = hit
    return hit[1]


def _apg(A, y, step_op, penalty, x_init, L, tol, max_iter):
    """Accelerated proximal gradient on ``0.5 ||y - Ax||^2 + penalty(x)``.

    ``step_op(v, s)`` is the prox of ``s * penalty`` (or a projection).
    Momentum is reset whenever the objective goes up, and ``L`` is doubled if
    even a plain gradient step fails to decrease it.

    Returns ``(x, iterations, fixed_point_residual, converged)``.
    """
    def obj(x):
        r = y - A @ x
        return 0.5 * (r @ r) + penalty(x)

    def grad(x):
        return A.T @ (A @ x - y)

    def fp_residual(x):
        return float(np.linalg.norm(x - step_op(x - grad(x) / L, 1.0 / L)))

    x = np.array(x_init, dtype=float)
    F = obj(x)
    z, t = x.copy(), 1.0
    for it in range(1, max_iter + 1):
        x_new = step_op(z - grad(z) / L, 1.0 / L)
        F_new = obj(x_new)
        if F_new > F:
            if t == 1.0:
                # plain step from x increased the objective: L too small
                L *= 2.0
                continue
            z, t = x.copy(), 1.0
            continue
        cheap = np.linalg.norm(x_new - z)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, F, t = x_new, F_new, t_new
        scale = tol * (1.0 + np.linalg.norm(x))
        if cheap <= scale:
            res = fp_residual(x)
            if res <= scale:
                return x, it, res, True
    return x, max_iter, fp_residual(x), False


def solve_ell22(instance, tau, tol=1e-9, max_iter=50000, x_init=None) -> SolveResult:
    """Minimize ``0.5 ||y - Ax||^2 + sigma tau f(x)``.

    Convergence is declared when the prox-gradient fixed-point residual is
    at most ``tol * (1 + ||x||)``. ``converged=False`` means ``max_iter``
    ran out; the last iterate is still returned.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    model, A, y = instance.model, instance.A, instance.y
    weight = instance.sigma * tau
    if x_init is None:
        x_init = np.zeros(model.n)
    if weight == 0:
        step_op = lambda v, s: v
        penalty = lambda x: 0.0
    else:
        step_op = lambda v, s: models.prox(model, v, s * weight)
        penalty = lambda x: weight * models.f_value(model, x)
    x, its, res, ok = _apg(A, y, step_op, penalty, x_init, _lipschitz(instance), tol, max_iter)
    r = y - A @ x
    fx = models.f_value(model, x)
    return SolveResult(x, nse(x, instance), float(np.linalg.norm(r)), fx,
                       0.5 * float(r @ r) + weight * fx, its, ok, "ell22", float(tau),
                       tau=float(tau), fixed_point_residual=res)


def solve_classo(instance, tol=1e-9, max_iter=50000, x_init=None) -> SolveResult:
    """Minimize ``||y - Ax||`` over ``{x : f(x) <= f(x0)}`` by projected APG."""
    model, A, y = instance.model, instance.A, instance.y
    radius = model.f0
    step_op = lambda v, s: models.ball_project(model, v, radius)
    if x_init is None:
        x_init = np.zeros(model.n)
    x, its, res, ok = _apg(A, y, step_op, lambda x: 0.0, x_init, _lipschitz(instance),
                           tol, max_iter)
    r_norm = float(np.linalg.norm(y - A @ x))
    return SolveResult(x, nse(x, instance), r_norm, models.f_value(model, x), r_norm,
                       its, ok, "classo", None, fixed_point_residual=res)


def solve_ell2(instance, lam, tol=1e-8, max_iter=200, inner_tol=1e-10,
               inner_max_iter=50000, tol_interp=1e-4) -> SolveResult:
    """Minimize ``||y - Ax|| + lam f(x)`` through the l2^2 correspondence.

    The l2^2 solution at ``tau`` solves the l2 problem iff
    ``tau = phi(tau) := lam ||y - A x(tau)|| / sigma``. ``g = tau - phi`` has a
    single sign change, and a plain update ``tau <- phi(tau)`` never jumps
    over it, so the search keeps a bracket: it starts from
    ``lam ||y|| / sigma``, alternates fixed-point and halving steps until a
    point with ``g < 0`` appears, and then finishes with Brent's method.

    If ``g`` stays positive while ``tau`` is driven to zero, the solution
    interpolates the data (``y = A x_hat``); this is declared once the
    residual drops below ``tol_interp * sigma * sqrt(m)``.

    Parameters
    ----------
    tol : float
        Relative tolerance on ``tau``.
    max_iter : int
        Maximum number of inner l2^2 solves.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    sigma, m = instance.sigma, instance.m
    state = {"x": np.zeros(instance.model.n), "solves": 0, "iters": 0, "ok": True}
    cache = {}

    def solve_at(tau):
        if tau in cache:
            return cache[tau]
        res = solve_ell22(instance, tau, tol=inner_tol, max_iter=inner_max_iter,
                          x_init=state["x"])
        state["x"] = res.x_hat
        state["solves"] += 1
        state["iters"] += res.iterations
        state["ok"] &= res.converged
        cache[tau] = res
        return res

    def g(tau):
        return tau - lam * solve_at(tau).residual_norm / sigma

    def finish(res, tau, interpolating, converged):
        fx = res.f_hat
        return SolveResult(res.x_hat, res.nse, res.residual_norm, fx,
                           res.residual_norm + lam * fx, state["iters"],
                           converged and state["ok"], "ell2", float(lam), tau=float(tau),
                           interpolating=interpolating,
                           fixed_point_residual=res.fixed_point_residual)

    interp_level = tol_interp * sigma * math.sqrt(m)
    if lam == 0:
        res = solve_at(0.0)
        return finish(res, 0.0, res.residual_norm <= interp_level, True)

    hi = lam * float(np.linalg.norm(instance.y)) / sigma
    lo = None
    tau = hi
    while state["solves"] < max_iter:
        val = g(tau)
        res = cache[tau]
        if res.residual_norm <= interp_level:
            return finish(res, tau, True, True)
        if val < 0:
            lo = tau
            break
        hi = tau
        if val <= tol * tau:
            return finish(res, tau, False, True)
        tau = min(tau - val, 0.5 * tau)
    else:
        return finish(cache[hi], hi, False, False)

    try:
        root = optimize.brentq(g, lo, hi, xtol=tol * (1 + lo), rtol=4 * np.finfo(float).eps,
                               maxiter=max(max_iter - state["solves"], 1))
        converged = True
    except RuntimeError:
        root, converged = min(cache, key=lambda t: abs(g(t))), False
    res = solve_at(root)
    return finish(res, root, False, converged)
