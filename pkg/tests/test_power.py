import numpy as np
import pytest
from dataclasses import replace

from uav_codesign import channel, objective
from uav_codesign.power import (PgdOptions, PowerError, project_capped_simplex,
                                solve_power)
from uav_codesign.scenario import Geometry, PlantConfig, Scenario

from helpers import random_feasible_decision


def brute_force_projection(v, p_max, step=1e-3):
    """Nearest feasible point on a dense grid (independent oracle)."""
    axes = [np.arange(0.0, p_max + step, step) for _ in v]
    best, best_d = None, np.inf
    if len(v) == 2:
        g1, g2 = np.meshgrid(axes[0], axes[1], indexing="ij")
        mask = g1 + g2 <= p_max + 1e-12
        d = (g1 - v[0]) ** 2 + (g2 - v[1]) ** 2
        d[~mask] = np.inf
        idx = np.unravel_index(np.argmin(d), d.shape)
        return np.array([g1[idx], g2[idx]])
    raise NotImplementedError


def test_projection_interior_point():
    assert np.array_equal(project_capped_simplex(np.array([0.5, 0.5]), 2.0),
                          np.array([0.5, 0.5]))


def test_projection_active_cap():
    assert np.allclose(project_capped_simplex(np.array([2.0, 2.0]), 2.0),
                       np.array([1.0, 1.0]), atol=1e-12)


def test_projection_mixed_signs():
    assert np.allclose(project_capped_simplex(np.array([3.0, -1.0]), 2.0),
                       np.array([2.0, 0.0]), atol=1e-12)


def test_projection_matches_grid_oracle():
    rng = np.random.default_rng(0)
    for _ in range(40):
        v = rng.uniform(-2.0, 3.0, 2)
        p_max = rng.uniform(0.5, 2.0)
        exact = project_capped_simplex(v, p_max)
        grid = brute_force_projection(v, p_max)
        assert np.all(np.abs(exact - grid) <= 2e-3)


def test_projection_idempotent():
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = rng.uniform(-2.0, 3.0, int(rng.integers(1, 8)))
        p_max = rng.uniform(0.5, 2.0)
        once = project_capped_simplex(v, p_max)
        twice = project_capped_simplex(once, p_max)
        assert np.allclose(once, twice, atol=1e-12)


def test_projection_optimality():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        v = rng.uniform(-2.0, 3.0, n)
        p_max = rng.uniform(0.5, 2.0)
        proj = project_capped_simplex(v, p_max)
        assert np.all(proj >= 0.0) and proj.sum() <= p_max + 1e-12
        d_star = np.linalg.norm(v - proj)
        for _ in range(1000):
            w = rng.uniform(0.0, 1.0, n)
            w *= rng.uniform(0.0, p_max) / max(w.sum(), 1e-12)
            assert d_star <= np.linalg.norm(v - w) + 1e-12


def test_projection_rejects_bad_cap():
    with pytest.raises(PowerError):
        project_capped_simplex(np.array([1.0]), 0.0)


def single_uav_scenario():
    geo = Geometry(n_uav=1, robots=np.array([[30.0, 40.0, 0.0]]),
                   target=np.array([60.0, 60.0, 0.0]))
    return Scenario(geometry=geo, plant_cfg=PlantConfig(g=(4.0,)))


def test_solve_power_sensing_only_hits_budget():
    scen = single_uav_scenario()
    scen = replace(scen, weights=replace(scen.weights, eta=0.0))
    dec = objective.Decision(theta=np.ones((1, 1)),
                             p=np.array([scen.rf.p_max]),
                             positions=np.array([[50.0, 50.0, 100.0]]))
    p, _ = solve_power(dec, scen)
    assert p[0] == pytest.approx(scen.rf.p_max, rel=1e-6)
    # boundary optimum: interior samples are all worse
    best = objective.safe_value(replace(dec, p=p), scen)
    for frac in (0.2, 0.5, 0.8):
        inner = objective.safe_value(
            replace(dec, p=np.array([frac * scen.rf.p_max])), scen)
        assert best <= inner + 1e-15


def test_solve_power_symmetric_fixed_point():
    # mirror-symmetric scene at the budget cap: the equal split is a
    # fixed point of the projected update
    geo = Geometry(n_uav=2,
                   robots=np.array([[30.0, 50.0, 0.0], [70.0, 50.0, 0.0]]),
                   target=np.array([50.0, 50.0, 0.0]))
    scen = Scenario(geometry=geo, plant_cfg=PlantConfig(g=(6.0, 6.0)))
    dec = objective.Decision(
        theta=np.eye(2),
        p=np.full(2, scen.rf.p_max / 2),
        positions=np.array([[30.0, 50.0, 100.0], [70.0, 50.0, 100.0]]))
    p, _ = solve_power(dec, scen)
    assert np.allclose(p, scen.rf.p_max / 2, rtol=1e-12)


def grid_objective(scen, dec, p1, p2):
    """Independent vectorized reimplementation of the objective on a
    2-UAV power grid."""
    from uav_codesign.control import LN2
    geo, rf, w = scen.geometry, scen.rf, scen.weights
    gains = channel.gain_matrix(dec.positions, geo.robots, rf.alpha0)
    p = np.stack([p1, p2], axis=-1)                    # ... x 2
    received = p[..., :, None] * gains[None, ...]      # ... x 2 x K
    total = received.sum(axis=-2, keepdims=True)
    gamma = received / (total - received + rf.noise_comm)
    rate = channel.fbl_rate(gamma, rf.blocklength, rf.bler,
                            rf.rate_convention)
    x = rf.uses_per_step * np.einsum("mk,...mk->...k", dec.theta, rate)
    lqr = np.zeros(x.shape[:-1])
    for k, der in enumerate(scen.derived):
        f = 2.0 * (x[..., k] - der.g) / der.iota
        t = np.exp(-np.maximum(f, 1e-12) * LN2)
        b = der.b_min + der.Omega * t / (1.0 - t)
        b = np.where(f <= 0.0, np.inf, b)
        lqr = lqr + b
    # sensing determinant, entrywise over the grid
    from uav_codesign.sensing import sensing_gain_coefficient
    coef = sensing_gain_coefficient(rf)
    phi = np.zeros(x.shape[:-1] + (3, 3))
    for m in range(2):
        wv = dec.positions[m] - geo.target
        d2 = float(wv @ wv)
        phi = phi + ((coef * p[..., m] / d2 ** 3)[..., None, None]
                     + 8.0 / d2 ** 2) * np.outer(wv, wv)[None, None, :, :]
    det = np.linalg.det(phi)
    return w.eta / w.psi_c * lqr - (1 - w.eta) / w.psi_s * det


def test_solve_power_brackets_grid_search():
    rng = np.random.default_rng(3)
    geo = Geometry(n_uav=2,
                   robots=np.array([[35.0, 45.0, 0.0], [65.0, 55.0, 0.0]]),
                   target=np.array([50.0, 30.0, 0.0]))
    scen = Scenario(geometry=geo, plant_cfg=PlantConfig(g=(3.0, 5.0)))
    for trial in range(20):
        positions = np.array([
            [rng.uniform(20, 50), rng.uniform(30, 60), 100.0],
            [rng.uniform(55, 90), rng.uniform(40, 70), 100.0]])
        theta = np.eye(2) if trial % 2 == 0 else np.array([[0.0, 1.0],
                                                           [1.0, 0.0]])
        dec = objective.Decision(theta=theta,
                                 p=np.full(2, scen.rf.p_max / 2),
                                 positions=positions)
        p_star, _ = solve_power(dec, scen)
        phi_star = objective.safe_value(replace(dec, p=p_star), scen)
        axis = np.linspace(0.0, scen.rf.p_max, 200)
        g1, g2 = np.meshgrid(axis, axis, indexing="ij")
        mask = g1 + g2 <= scen.rf.p_max + 1e-12
        vals = grid_objective(scen, dec, g1, g2)
        vals[~mask] = np.inf
        grid_best = float(np.nanmin(vals))
        assert phi_star <= grid_best + 1e-3 * (1.0 + abs(grid_best))


def test_solve_power_feasible_and_monotone(scen):
    for seed in range(10):
        dec = random_feasible_decision(scen, seed)
        p, trace = solve_power(dec, scen)
        assert np.all(p >= 0.0)
        assert p.sum() <= scen.rf.p_max + 1e-12
        diffs = np.diff(trace)
        assert np.all(diffs <= 1e-12)


def test_solve_power_paper_schedule_flag(scen):
    dec = random_feasible_decision(scen, 3)
    opts = PgdOptions(armijo=False, max_iter=60)
    p, _ = solve_power(dec, scen, opts)
    assert np.all(p >= 0.0) and p.sum() <= scen.rf.p_max + 1e-12
