import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from lassonse import make_model
from lassonse.geometry import cone_distance_sq
from lassonse.gordon import (CONE, concentration_experiment, distance, key_lower_closed,
                             key_lower_grid, key_lower_minimizer, key_objective)
from lassonse.models import subdiff_residual
from lassonse.regimes import nse_formula


SPARSE50 = make_model("sparse", n=50, k=5, seed=0)


def test_zero_distance():
    model = make_model("sparse", n=10, k=2, seed=0)
    h = np.zeros(10)
    h[model.support] = 0.5 * model.direction  # inside lam * subdiff for lam = 0.5
    g = np.random.default_rng(0).standard_normal(6)
    res = key_lower_closed(g, h, 0.3, model, 0.5)
    assert res.alpha_star == 0
    assert res.value == pytest.approx(0.3 * np.linalg.norm(g))


def test_symmetric_point():
    from lassonse.gordon import _from_dist
    res = _from_dist(math.sqrt(2.0) * 3.0, 3.0, 0.7)
    assert res.w_norm_sq_over_sigma_sq == pytest.approx(1.0)
    assert res.alpha_star == pytest.approx(0.7)


def test_closed_matches_grid_100_draws():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        g = rng.standard_normal(40)
        h = rng.standard_normal(50)
        a = key_lower_closed(g, h, 1.0, SPARSE50, 1.0)
        b = key_lower_grid(g, h, 1.0, SPARSE50, 1.0)
        assert a.feasible == b.feasible
        if a.feasible:
            worst = max(worst, abs(a.value - b.value) / abs(a.value))
            assert b.alpha_star == pytest.approx(a.alpha_star, rel=1e-5, abs=1e-8)
    assert worst <= 1e-6


def test_grid_degenerate_sigma_zero():
    g = np.ones(40)
    h = np.random.default_rng(2).standard_normal(50)
    r = key_lower_grid(g, h, 0.0, SPARSE50, 1.0)
    assert r.feasible and r.value == 0 and r.alpha_star == 0


def test_infeasible_branch():
    g = np.full(4, 0.1)
    h = 5 * np.random.default_rng(3).standard_normal(50)
    closed = key_lower_closed(g, h, 1.0, SPARSE50, 0.5)
    grid = key_lower_grid(g, h, 1.0, SPARSE50, 0.5)
    assert not closed.feasible and closed.alpha_star == math.inf
    assert closed.value == pytest.approx(np.linalg.norm(g))
    assert not grid.feasible and grid.bracket_exhausted


def _full_objective(w, g, h, sigma, model, lam):
    """The n-dimensional objective with the support function of lam * subdiff, sparse case."""
    off = np.ones(model.n, bool)
    off[model.support] = False
    support_fn = lam * (model.direction @ w[model.support] + np.abs(w[off]).sum())
    return math.sqrt(w @ w + sigma**2) * np.linalg.norm(g) - h @ w + support_fn


@pytest.mark.parametrize("seed", range(6))
def test_scalarization_equivalence_small_n(seed):
    rng = np.random.default_rng(seed)
    n, sigma, lam = 8, 0.8, 1.0
    model = make_model("sparse", n=n, k=2, seed=seed)
    g = rng.standard_normal(30)
    h = rng.standard_normal(n)
    closed = key_lower_closed(g, h, sigma, model, lam)
    assert closed.feasible
    off = np.ones(n, bool)
    off[model.support] = False
    n_on, n_off = int((~off).sum()), int(off.sum())

    # smooth reformulation: off-support coordinates split as p - q with p, q >= 0
    def unpack(z):
        w = np.zeros(n)
        w[~off] = z[:n_on]
        w[off] = z[n_on:n_on + n_off] - z[n_on + n_off:]
        return w

    def fun(z):
        w = unpack(z)
        return (math.sqrt(w @ w + sigma**2) * np.linalg.norm(g) - h @ w
                + lam * (model.direction @ w[~off] + z[n_on:].sum()))

    bounds = [(None, None)] * n_on + [(0, None)] * (2 * n_off)
    res = optimize.minimize(fun, np.zeros(n_on + 2 * n_off), method="L-BFGS-B", bounds=bounds,
                            options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 10000})
    assert res.fun == pytest.approx(closed.value, rel=1e-5)
    assert np.linalg.norm(unpack(res.x)) == pytest.approx(closed.alpha_star, rel=1e-3, abs=1e-4)

    # the closed-form minimizer, built from the residual h - Proj(h), attains the value
    resid = subdiff_residual(model, h, lam)
    w_hat = sigma * resid / math.sqrt(closed.g_norm**2 - closed.dist**2)
    assert _full_objective(w_hat, g, h, sigma, model, lam) == pytest.approx(closed.value, rel=1e-9)
    assert np.allclose(key_lower_minimizer(g, h, sigma, model, lam), w_hat)
    assert np.linalg.norm(w_hat) == pytest.approx(closed.alpha_star)


@given(st.floats(0.1, 10), st.floats(0, 0.99), st.floats(0.01, 5))
@settings(max_examples=100)
def test_value_nonincreasing_in_dist(g_norm, frac, sigma):
    from lassonse.gordon import _from_dist
    d1 = frac * g_norm
    d2 = min(d1 + 0.01 * g_norm, 0.999 * g_norm)
    assert _from_dist(g_norm, d2, sigma).value <= _from_dist(g_norm, d1, sigma).value + 1e-12


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_value_linear_in_sigma(seed):
    rng = np.random.default_rng(seed)
    g, h = rng.standard_normal(40), rng.standard_normal(50)
    a = key_lower_closed(g, h, 0.5, SPARSE50, 1.2)
    b = key_lower_closed(g, h, 1.0, SPARSE50, 1.2)
    assert b.value == pytest.approx(2 * a.value, rel=1e-12)


def test_closed_value_is_min_of_scalar_objective():
    rng = np.random.default_rng(5)
    g, h = rng.standard_normal(40), rng.standard_normal(50)
    r = key_lower_closed(g, h, 1.0, SPARSE50, 1.0)
    for a in np.linspace(0, 5 * r.alpha_star + 1, 200):
        assert key_objective(a, r.g_norm, r.dist, 1.0) >= r.value - 1e-12


def test_cone_distance():
    h = np.random.default_rng(7).standard_normal(50)
    assert distance(SPARSE50, h, CONE) == pytest.approx(math.sqrt(cone_distance_sq(SPARSE50, h)[0]))
    assert distance(SPARSE50, h, CONE) <= distance(SPARSE50, h, 1.0) + 1e-12


def test_concentration_record_structure():
    model = make_model("sparse", n=200, k=20, seed=0)
    st_ = concentration_experiment(model, 100, 1.14, trials=40, seed=1)
    assert st_["gamma"] == pytest.approx(nse_formula(st_["D"], 100))
    assert st_["eta"] == pytest.approx(math.sqrt(100 - st_["D"]))
    assert set(st_["value_ratio"]["within"]) == {"0.05", "0.1", "0.2"}
    again = concentration_experiment(model, 100, 1.14, trials=40, seed=1)
    assert repr(again) == repr(st_)
    assert 0 <= st_["infeasible_frac"] < 1
    assert np.isfinite(st_["error_ratio"]["mean"])


def test_minimizer_errors():
    g = np.full(4, 0.1)
    h = 5 * np.random.default_rng(3).standard_normal(50)
    with pytest.raises(ValueError):
        key_lower_minimizer(g, h, 1.0, SPARSE50, 0.5)
    with pytest.raises(ValueError):
        key_lower_minimizer(g, h, 1.0, SPARSE50, CONE)


def test_concentration_errors():
    model = make_model("sparse", n=200, k=20, seed=0)
    with pytest.raises(ValueError):
        concentration_experiment(model, 50, 1.14, trials=5)
    with pytest.raises(ValueError):
        concentration_experiment(model, 100, CONE, trials=5)


def test_concentration_with_cone():
    model = make_model("sparse", n=200, k=20, seed=0)
    st_ = concentration_experiment(model, 120, CONE, trials=50, seed=2, D=65.0)
    assert 0.8 < st_["value_ratio"]["mean"] < 1.2


def test_concentration_tightens_with_dimension():
    """The spread of value / (sigma eta) shrinks roughly like 1 / sqrt(n)."""
    from lassonse.regimes import best_lambda
    stds = []
    for n in (500, 4000):
        model = make_model("sparse", n=n, k=n // 10, seed=0)
        st_ = concentration_experiment(model, n // 2, best_lambda(model), trials=200, seed=0)
        assert st_["value_ratio"]["mean"] == pytest.approx(1.0, abs=0.05)
        stds.append(st_["value_ratio"]["std"])
    assert stds[1] / stds[0] == pytest.approx(math.sqrt(500 / 4000), rel=0.3)
