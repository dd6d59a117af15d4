"""Monte Carlo localization accuracy against the Cramer-Rao bound.

Draws noisy range measurements from the sensing model, estimates the
target position by weighted Gauss-Newton (the maximum-likelihood
estimator for Gaussian ranges, so the bound comparison is meaningful),
and reports the root-mean-square error next to the square root of the
sum CRB.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import sensing

if TYPE_CHECKING:
    from .objective import Decision
    from .scenario import Scenario


class MonteCarloError(RuntimeError):
    pass


@dataclass
class RmseResult:
    rmse: float
    crb_sqrt: float
    trials: int
    failures: int


def simulate_ranges(dec: "Decision", s: np.ndarray, rf, seed: int,
                    sigma2: np.ndarray | None = None) -> np.ndarray:
    """Noisy UAV-target distances; deterministic per seed.

    ``sigma2`` overrides the model variances (zeros give exact ranges).
    """
    positions = np.asarray(dec.positions, float)
    s = np.asarray(s, float)
    d = np.linalg.norm(positions - s[None, :], axis=1)
    if sigma2 is None:
        sigma2 = np.array([
            sensing.range_noise_variance(pm, dm, rf) if pm > 0 else np.inf
            for pm, dm in zip(dec.p, d)])
    sigma2 = np.asarray(sigma2, float)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(len(d))
    finite = np.isfinite(sigma2)
    out = d.copy()
    out[finite] += np.sqrt(sigma2[finite]) * noise[finite]
    return out


def localize_wls(d_hat: np.ndarray, positions: np.ndarray,
                 sigma2: np.ndarray, init: np.ndarray,
                 max_iter: int = 100) -> tuple[np.ndarray, bool]:
    """Weighted Gauss-Newton multilateration with step halving.

    Minimizes sum((d_hat_m - ||q_m - s||)^2 / sigma_m^2).  Returns the
    estimate and a convergence flag; measurements with infinite variance
    carry zero weight.
    """
    positions = np.asarray(positions, float)
    d_hat = np.asarray(d_hat, float)
    weights = np.where(np.isfinite(sigma2), 1.0 / np.asarray(sigma2, float),
                       0.0)
    if np.count_nonzero(weights) < 3:
        return np.asarray(init, float).copy(), False
    grad_tol = 1e-9 * float(weights.sum())
    s = np.asarray(init, float).copy()

    def residuals(point):
        d = np.linalg.norm(positions - point[None, :], axis=1)
        return (d_hat - d) * np.sqrt(weights), d

    res, d = residuals(s)
    cost = float(res @ res)
    for _ in range(max_iter):
        with np.errstate(divide="ignore", invalid="ignore"):
            jac = (positions - s[None, :]) / d[:, None] * np.sqrt(weights)[:, None]
        grad = 2.0 * jac.T @ res
        if float(np.linalg.norm(grad)) <= grad_tol:
            return s, True
        jtj = jac.T @ jac
        try:
            step = -np.linalg.solve(jtj, jac.T @ res)
        except np.linalg.LinAlgError:
            return s, False
        improved = False
        for _ in range(30):
            cand = s + step
            cand_res, cand_d = residuals(cand)
            cand_cost = float(cand_res @ cand_res)
            if cand_cost < cost:
                s, res, d, cost = cand, cand_res, cand_d, cand_cost
                improved = True
                break
            step = 0.5 * step
        if not improved:
            break
    res, d = residuals(s)
    jac = (positions - s[None, :]) / d[:, None] * np.sqrt(weights)[:, None]
    ok = float(np.linalg.norm(2.0 * jac.T @ res)) <= grad_tol
    return s, ok


# documented initializer offset: 5 m along the diagonal from the truth
INIT_OFFSET = 5.0 / np.sqrt(3.0) * np.ones(3)


def rmse_experiment(dec: "Decision", scen: "Scenario", trials: int,
                    seed: int) -> RmseResult:
    """RMSE of the position estimate over independent trials.

    Per-trial noise streams derive from (seed, trial index), so results
    do not depend on any execution schedule.  Non-converged trials count
    as failures and are excluded from the average.
    """
    s = np.asarray(scen.geometry.target, float)
    positions = np.asarray(dec.positions, float)
    d = np.linalg.norm(positions - s[None, :], axis=1)
    sigma2 = np.array([
        sensing.range_noise_variance(pm, dm, scen.rf) if pm > 0 else np.inf
        for pm, dm in zip(dec.p, d)])
    init = s + INIT_OFFSET

    errors = []
    failures = 0
    for trial in range(trials):
        rng_seed = np.random.SeedSequence(entropy=seed,
                                          spawn_key=(trial,)).generate_state(1)[0]
        d_hat = simulate_ranges(dec, s, scen.rf, int(rng_seed), sigma2=sigma2)
        est, ok = localize_wls(d_hat, positions, sigma2, init)
        if ok:
            errors.append(float(np.sum((est - s) ** 2)))
        else:
            failures += 1
    if not errors:
        raise MonteCarloError("every localization trial failed")
    rmse = float(np.sqrt(np.mean(errors)))
    fim = sensing.fim_position(dec.p, positions, s, scen.rf)
    return RmseResult(rmse=rmse, crb_sqrt=float(np.sqrt(fim.crb_sum)),
                      trials=trials, failures=failures)
