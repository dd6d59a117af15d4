import numpy as np
from dataclasses import replace

from uav_codesign import driver, objective
from uav_codesign.scenario import random_positions


def random_feasible_decision(scen, seed, power_scale=(0.7, 1.0)):
    """Random stable decision: positions, injective matching, powers."""
    rng = np.random.default_rng(seed)
    positions = random_positions(scen.geometry, seed)
    m, k = scen.geometry.n_uav, scen.geometry.n_robots
    perm = rng.permutation(m)[:k]
    theta = np.zeros((m, k))
    theta[perm, np.arange(k)] = 1.0
    share = rng.uniform(*power_scale, m)
    p = share * scen.rf.p_max / m
    dec = objective.Decision(theta=theta, p=p, positions=positions)
    br = objective.evaluate(dec, scen, on_unstable="inf")
    if not np.isfinite(br.value):
        # fall back on the max-rate matching, which the scene guarantees
        dec = replace(dec, theta=driver.initial_decision(scen, seed).theta)
    return dec
