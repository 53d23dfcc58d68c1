"""Structured signal families and their norm-specific operators.

Three families are supported, each paired with the norm that promotes its
structure:

* ``sparse``        -- k nonzeros in R^n, regularized by the l1 norm;
* ``lowrank``       -- a d x d matrix of rank r, regularized by the nuclear
  norm (vectors are row-major ``vec`` of the matrix);
* ``blocksparse``   -- t blocks of size b with k active blocks, regularized by
  the l1,2 norm (sum of block l2 norms).

Every function in this module takes the model first so that the geometry,
solver and oracle code can stay family-agnostic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "Kind",
    "SignalModel",
    "StructureOps",
    "DimensionError",
    "make_model",
    "model_from_dict",
    "f_value",
    "subdiff_residual",
    "prox",
    "ball_project",
    "structure_ops",
    "soft_threshold",
    "vshrink",
    "project_l1_ball",
    "residual_profile",
    "ResidualProfile",
]


class DimensionError(ValueError):
    """Invalid model dimensions or a vector of the wrong length."""


class Kind(str, Enum):
    SPARSE = "sparse"
    LOWRANK = "lowrank"
    BLOCKSPARSE = "blocksparse"


@dataclass(frozen=True, eq=False)
class SignalModel:
    """A structured signal class together with a concrete ground truth.

    Attributes
    ----------
    kind : Kind
    n : int
        Ambient dimension.
    dims : dict
        ``{"n", "k"}`` for sparse, ``{"d", "r"}`` for low rank and
        ``{"t", "b", "k"}`` for block sparse.
    seed : int or None
        Seed used by :func:`make_model` (``None`` when built from raw data).
    x0 : ndarray, shape (n,)
        Unit-norm ground truth (read-only).
    support : ndarray of int
        Sparse: nonzero indices. Block sparse: active block indices.
        Low rank: ``arange(r)``.
    direction : ndarray
        The unique "on-support" subgradient: ``sign(x0)`` restricted to the
        support (sparse), unit block directions of shape (k, b) (block
        sparse) or ``U @ V.T`` as a d x d matrix (low rank).
    U, V : ndarray or None
        Orthonormal singular vectors of the low-rank ground truth.
    """

    kind: Kind
    n: int
    dims: dict
    seed: int | None
    x0: np.ndarray = field(repr=False)
    support: np.ndarray = field(repr=False)
    direction: np.ndarray = field(repr=False)
    U: np.ndarray | None = field(default=None, repr=False)
    V: np.ndarray | None = field(default=None, repr=False)

    @property
    def beta(self) -> float:
        """Structure ratio k/n (sparse), r/d (low rank) or k/t (blocks)."""
        if self.kind is Kind.SPARSE:
            return self.dims["k"] / self.n
        if self.kind is Kind.LOWRANK:
            return self.dims["r"] / self.dims["d"]
        return self.dims["k"] / self.dims["t"]

    @property
    def f0(self) -> float:
        return f_value(self, self.x0)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "dims": dict(self.dims),
            "seed": self.seed,
            "x0": [float(v) for v in self.x0],
        }

    def to_json(self) -> str:
        # repr-based float output round-trips doubles exactly
        return json.dumps(self.to_dict())


class StructureOps(NamedTuple):
    """The four structure-specific maps bound to one model."""

    f_value: Callable[[np.ndarray], float]
    subdiff_residual: Callable[[np.ndarray, float], np.ndarray]
    prox: Callable[[np.ndarray, float], np.ndarray]
    ball_project: Callable[[np.ndarray], np.ndarray]


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_dims(kind, dims):
    try:
        if kind is Kind.SPARSE:
            n, k = int(dims["n"]), int(dims["k"])
            if not 1 <= k <= n:
                raise DimensionError(f"need 1 <= k <= n, got k={k}, n={n}")
            return {"n": n, "k": k}, n
        if kind is Kind.LOWRANK:
            d, r = int(dims["d"]), int(dims["r"])
            if not 1 <= r <= d:
                raise DimensionError(f"need 1 <= r <= d, got r={r}, d={d}")
            return {"d": d, "r": r}, d * d
        t, b, k = int(dims["t"]), int(dims["b"]), int(dims["k"])
        if not (1 <= k <= t and b >= 1):
            raise DimensionError(f"need 1 <= k <= t and b >= 1, got t={t}, b={b}, k={k}")
        return {"t": t, "b": b, "k": k}, t * b
    except KeyError as exc:
        raise DimensionError(f"missing dimension {exc.args[0]!r} for {kind.value}") from None


def _build(kind, dims, seed, x0, rank_hint=None):
    """Assemble a model and its support metadata from a ground-truth vector."""
    x0 = np.asarray(x0, dtype=float)
    if kind is Kind.SPARSE:
        support = np.flatnonzero(x0)
        direction = np.sign(x0[support])
        return SignalModel(kind, x0.size, dims, seed, _readonly(x0),
                           _readonly(support).astype(int), _readonly(direction))
    if kind is Kind.BLOCKSPARSE:
        blocks = x0.reshape(dims["t"], dims["b"])
        norms = np.linalg.norm(blocks, axis=1)
        support = np.flatnonzero(norms)
        direction = blocks[support] / norms[support, None]
        return SignalModel(kind, x0.size, dims, seed, _readonly(x0),
                           _readonly(support).astype(int), _readonly(direction))
    d, r = dims["d"], dims["r"]
    u, s, vt = np.linalg.svd(x0.reshape(d, d))
    U, V = u[:, :r], vt[:r].T
    return SignalModel(kind, d * d, dims, seed, _readonly(x0), _readonly(np.arange(r)).astype(int),
                       _readonly(U @ V.T), U=_readonly(U), V=_readonly(V))


def make_model(kind, dims=None, seed=0, **kwargs) -> SignalModel:
    """Draw a ground-truth signal of the requested family.

    Nonzero amplitudes (sparse, block sparse) and the factors ``U, V`` of
    ``X0 = U V^T`` (low rank) are standard normal; the result is scaled to
    unit Euclidean norm.

    Parameters
    ----------
    kind : {"sparse", "lowrank", "blocksparse"} or Kind
    dims : dict, optional
        Family dimensions; may also be passed as keyword arguments, e.g.
        ``make_model("sparse", n=1500, k=150, seed=7)``.
    seed : int
        Seed for :class:`numpy.random.Generator`.

    Raises
    ------
    DimensionError
        If the dimensions are missing or inconsistent.
    """
    kind = Kind(kind)
    dims, n = _check_dims(kind, {**(dims or {}), **kwargs})
    rng = np.random.default_rng(seed)
    if kind is Kind.SPARSE:
        x0 = np.zeros(n)
        idx = np.sort(rng.choice(n, dims["k"], replace=False))
        vals = rng.standard_normal(dims["k"])
        while np.any(vals == 0):
            vals = rng.standard_normal(dims["k"])
        x0[idx] = vals
    elif kind is Kind.BLOCKSPARSE:
        t, b, k = dims["t"], dims["b"], dims["k"]
        blocks = np.zeros((t, b))
        idx = np.sort(rng.choice(t, k, replace=False))
        vals = rng.standard_normal((k, b))
        # regenerate any degenerate block so its direction is defined
        while np.any(np.linalg.norm(vals, axis=1) == 0):
            vals = rng.standard_normal((k, b))
        blocks[idx] = vals
        x0 = blocks.ravel()
    else:
        d, r = dims["d"], dims["r"]
        while True:
            X = rng.standard_normal((d, r)) @ rng.standard_normal((d, r)).T
            if np.linalg.matrix_rank(X) == r:
                break
        x0 = X.ravel()
    x0 = x0 / np.linalg.norm(x0)
    return _build(kind, dims, seed, x0)


def model_from_dict(data) -> SignalModel:
    """Rebuild a model from :meth:`SignalModel.to_dict` output (or JSON text)."""
    if isinstance(data, str):
        data = json.loads(data)
    kind = Kind(data["kind"])
    dims, n = _check_dims(kind, data["dims"])
    x0 = np.asarray(data["x0"], dtype=float)
    if x0.size != n:
        raise DimensionError(f"x0 has length {x0.size}, expected {n}")
    return _build(kind, dims, data.get("seed"), x0)


# --- shrinkage operators --------------------------------------------------

def soft_threshold(x, t):
    """Entrywise soft thresholding ``sign(x) * max(|x| - t, 0)``."""
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def vshrink(blocks, t):
    """Shrink each row of ``blocks`` towards zero by ``t`` in l2 norm."""
    norms = np.linalg.norm(blocks, axis=-1, keepdims=True)
    scale = np.where(norms > t, 1.0 - t / np.where(norms > 0, norms, 1.0), 0.0)
    return blocks * scale


def project_l1_ball(v, radius):
    """Euclidean projection onto ``{x : ||x||_1 <= radius}`` (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    if radius <= 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    rho = np.nonzero(u * j > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


# --- norm-specific operators ---------------------------------------------

def _check_len(model, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise DimensionError(f"expected a vector of length {model.n}, got shape {x.shape}")
    return x


def _mat(model, x):
    d = model.dims["d"]
    return x.reshape(d, d)


def _blocks(model, x):
    return x.reshape(model.dims["t"], model.dims["b"])


def f_value(model, x) -> float:
    """l1, nuclear or l1,2 norm of ``x`` according to the model family."""
    x = _check_len(model, x)
    if model.kind is Kind.SPARSE:
        return float(np.abs(x).sum())
    if model.kind is Kind.LOWRANK:
        return float(np.linalg.svd(_mat(model, x), compute_uv=False).sum())
    return float(np.linalg.norm(_blocks(model, x), axis=1).sum())


def _split_lowrank(model, H):
    """Return the (support, off-support) parts of a d x d matrix."""
    U, V = model.U, model.V
    off = H - U @ (U.T @ H)
    off = off - (off @ V) @ V.T
    return H - off, off


def subdiff_residual(model, h, lam) -> np.ndarray:
    """Residual ``h - Proj(h, lam * subdiff f(x0))``.

    Its norm is the distance from ``h`` to the scaled subdifferential.
    """
    h = _check_len(model, h)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if model.kind is Kind.SPARSE:
        out = soft_threshold(h, lam)
        s = model.support
        out[s] = h[s] - lam * model.direction
        return out
    if model.kind is Kind.BLOCKSPARSE:
        hb = _blocks(model, h)
        out = vshrink(hb, lam)
        s = model.support
        out[s] = hb[s] - lam * model.direction
        return out.ravel()
    on, off = _split_lowrank(model, _mat(model, h))
    u, sv, vt = np.linalg.svd(off)
    out = on - lam * model.direction + (u * np.maximum(sv - lam, 0.0)) @ vt
    return out.ravel()


def prox(model, v, theta) -> np.ndarray:
    """``argmin_x 0.5 * ||x - v||^2 + theta * f(x)``."""
    v = _check_len(model, v)
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if theta == 0:
        return v.copy()
    if model.kind is Kind.SPARSE:
        return soft_threshold(v, theta)
    if model.kind is Kind.BLOCKSPARSE:
        return vshrink(_blocks(model, v), theta).ravel()
    u, sv, vt = np.linalg.svd(_mat(model, v))
    return ((u * np.maximum(sv - theta, 0.0)) @ vt).ravel()


def ball_project(model, v, radius=None) -> np.ndarray:
    """Project ``v`` onto ``{x : f(x) <= radius}`` (default ``f(x0)``)."""
    v = _check_len(model, v)
    if radius is None:
        radius = model.f0
    if model.kind is Kind.SPARSE:
        return project_l1_ball(v, radius)
    if model.kind is Kind.BLOCKSPARSE:
        vb = _blocks(model, v)
        norms = np.linalg.norm(vb, axis=1)
        if norms.sum() <= radius:
            return v.copy()
        new = project_l1_ball(norms, radius)
        scale = np.divide(new, norms, out=np.zeros_like(norms), where=norms > 0)
        return (vb * scale[:, None]).ravel()
    u, sv, vt = np.linalg.svd(_mat(model, v))
    if sv.sum() <= radius:
        return v.copy()
    return ((u * project_l1_ball(sv, radius)) @ vt).ravel()


def structure_ops(model) -> StructureOps:
    return StructureOps(
        partial(f_value, model),
        partial(subdiff_residual, model),
        partial(prox, model),
        partial(ball_project, model),
    )


# --- per-sample summaries used by the geometry code -----------------------

class ResidualProfile(NamedTuple):
    """Everything about ``h`` that ``dist(h, lam * subdiff f(x0))`` depends on.

    With ``e`` the on-support subgradient direction,

        dist^2(lam) = on_sq - 2 lam on_lin + lam^2 on_ee + sum((off - lam)_+^2)

    where ``off`` holds the nonnegative magnitudes that get soft-thresholded
    (|h_i| off the support, inactive block norms, or singular values of the
    off-support matrix part).
    """

    on_sq: float
    on_lin: float
    on_ee: float
    off: np.ndarray

    def dcp(self, lam):
        """Return ``(dist^2, corr, proj^2)`` at scale ``lam``."""
        excess = np.maximum(self.off - lam, 0.0)
        clipped = np.minimum(self.off, lam)
        dist2 = self.on_sq - 2 * lam * self.on_lin + lam**2 * self.on_ee + excess @ excess
        corr = lam * self.on_lin - lam**2 * self.on_ee + excess @ clipped
        proj2 = lam**2 * self.on_ee + clipped @ clipped
        return float(dist2), float(corr), float(proj2)

    def dist2_slope(self, lam):
        """Derivative of ``dist^2`` with respect to ``lam``."""
        return float(2 * (lam * self.on_ee - self.on_lin - np.maximum(self.off - lam, 0.0).sum()))


def residual_profile(model, h) -> ResidualProfile:
    h = _check_len(model, h)
    if model.kind is Kind.SPARSE:
        mask = np.ones(model.n, dtype=bool)
        mask[model.support] = False
        on = h[model.support]
        return ResidualProfile(float(on @ on), float(on @ model.direction),
                               float(model.support.size), np.abs(h[mask]))
    if model.kind is Kind.BLOCKSPARSE:
        hb = _blocks(model, h)
        mask = np.ones(hb.shape[0], dtype=bool)
        mask[model.support] = False
        on = hb[model.support]
        return ResidualProfile(float(np.sum(on * on)), float(np.sum(on * model.direction)),
                               float(model.support.size), np.linalg.norm(hb[mask], axis=1))
    H = _mat(model, h)
    on, off = _split_lowrank(model, H)
    r = model.dims["r"]
    sv = np.linalg.svd(off, compute_uv=False)[: model.dims["d"] - r]
    return ResidualProfile(float(np.sum(on * on)), float(np.sum(H * model.direction)),
                           float(r), sv)
