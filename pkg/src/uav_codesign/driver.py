"""Alternating optimization over association, powers and positions.

One outer round solves the three blocks in order (association by
penalty-DC, powers by projected gradient, positions by trust-region
SCA), each at the others' current values.  A block's update is kept
only if it does not worsen the true objective, so the recorded
objective trace is nonincreasing; the loop stops on relative
improvement below the tolerance or at the round limit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace as _dc_replace

import numpy as np

from . import association as assoc_mod
from . import objective, power as power_mod, positions as pos_mod
from .objective import Decision
from .scenario import Scenario, random_positions

_ACCEPT_SLACK = 1e-12


class DriverError(RuntimeError):
    pass


@dataclass
class IterationStats:
    objective: float
    lqr_sum: float
    det_fim: float
    crb_sum: float


@dataclass
class SolveReport:
    iterations: list[IterationStats]
    final: Decision
    per_robot_cost: np.ndarray
    converged: bool
    wall_time: float
    seed: int
    scheme: str = "proposed"
    notes: dict = field(default_factory=dict)

    @property
    def objective_trace(self) -> list[float]:
        return [it.objective for it in self.iterations]


def _stats(dec: Decision, scen: Scenario) -> IterationStats:
    br = objective.evaluate(dec, scen, on_unstable="inf")
    return IterationStats(objective=br.value, lqr_sum=br.lqr_sum,
                          det_fim=br.det_fim, crb_sum=br.fim.crb_sum)


def initial_decision(scen: Scenario, seed: int | None = None) -> Decision:
    """Random feasible positions, equal power split, max-rate matching."""
    seed = scen.seed if seed is None else seed
    if scen.solver.init_positions is not None:
        positions = np.asarray(scen.solver.init_positions, float)
    else:
        positions = random_positions(scen.geometry, seed)
    p = np.full(scen.geometry.n_uav, scen.rf.p_max / scen.geometry.n_uav)
    theta = assoc_mod.nearest_assignment(p, positions, scen)
    return Decision(theta=theta, p=p, positions=positions)


def recover_lqr_costs(dec: Decision, scen: Scenario) -> np.ndarray:
    """Per-robot closed-form costs at a feasible, stable decision."""
    return objective.evaluate(dec, scen).per_robot_cost


def solve(scen: Scenario, *, assoc: str = "dc", power: str = "pgd",
          pos: str = "sca", scheme: str = "proposed",
          init_power: str = "equal",
          notes: dict | None = None) -> SolveReport:
    """Run the alternating loop; blocks can be swapped out or frozen.

    ``assoc`` is one of ``dc | nearest | fixed``, ``power`` one of
    ``pgd | equal | waterfill | fixed`` and ``pos`` one of
    ``sca | fixed``.  The benchmark schemes are thin wrappers choosing
    these modes.
    """
    start = time.perf_counter()
    dec = initial_decision(scen)
    if init_power == "waterfill":
        dec = _dc_replace(dec, p=waterfill_power(dec.theta, dec.positions,
                                                 scen))
    # abort early, with the offending robot named, if the starting point
    # already violates the stability margin (eta = 0 waives this)
    objective.evaluate(dec, scen, on_unstable="raise")
    phi = objective.safe_value(dec, scen)
    trace = [_stats(dec, scen)]
    converged = False

    for _ in range(scen.solver.max_outer):
        prev_phi = phi

        if assoc != "fixed":
            if assoc == "dc":
                theta_new, _ = assoc_mod.solve_association(dec, scen)
            elif assoc == "nearest":
                theta_new = assoc_mod.nearest_assignment(dec.p, dec.positions,
                                                         scen)
            else:
                raise DriverError(f"unknown association mode {assoc!r}")
            cand = _dc_replace(dec, theta=theta_new)
            cand_phi = objective.safe_value(cand, scen)
            if cand_phi <= phi + _ACCEPT_SLACK * max(1.0, abs(phi)):
                dec, phi = cand, cand_phi

        if power != "fixed":
            if power == "pgd":
                p_new, _ = power_mod.solve_power(dec, scen)
            elif power == "equal":
                p_new = np.full(scen.geometry.n_uav,
                                scen.rf.p_max / scen.geometry.n_uav)
            elif power == "waterfill":
                p_new = waterfill_power(dec.theta, dec.positions, scen)
            else:
                raise DriverError(f"unknown power mode {power!r}")
            cand = _dc_replace(dec, p=p_new)
            cand_phi = objective.safe_value(cand, scen)
            if cand_phi <= phi + _ACCEPT_SLACK * max(1.0, abs(phi)):
                dec, phi = cand, cand_phi

        if pos != "fixed":
            if pos == "sca":
                q_new, _ = pos_mod.solve_positions(dec, scen)
            else:
                raise DriverError(f"unknown position mode {pos!r}")
            cand = _dc_replace(dec, positions=q_new)
            cand_phi = objective.safe_value(cand, scen)
            if cand_phi <= phi + _ACCEPT_SLACK * max(1.0, abs(phi)):
                dec, phi = cand, cand_phi

        trace.append(_stats(dec, scen))
        if abs(prev_phi) > 0 and abs(phi - prev_phi) < scen.solver.tol * abs(prev_phi):
            converged = True
            break

    objective.check_decision(dec, scen)
    costs = objective.evaluate(dec, scen, on_unstable="inf").per_robot_cost
    return SolveReport(iterations=trace, final=dec, per_robot_cost=costs,
                       converged=converged,
                       wall_time=time.perf_counter() - start,
                       seed=scen.seed, scheme=scheme, notes=notes or {})


def waterfill_power(theta: np.ndarray, positions: np.ndarray,
                    scen: Scenario) -> np.ndarray:
    """Classic interference-free water-filling over the serving links.

    Levels satisfy sum(max(1/nu - noise/h, 0)) = P_max over the assigned
    links; UAVs serving nobody split whatever budget remains (zero when
    every level is active).
    """
    from . import channel

    rf = scen.rf
    gains = channel.gain_matrix(np.asarray(positions, float),
                                scen.geometry.robots, rf.alpha0)
    rows, cols = np.nonzero(np.asarray(theta) > 0.5)
    p = np.zeros(scen.geometry.n_uav)
    if len(rows) == 0:
        return np.full(scen.geometry.n_uav,
                       rf.p_max / scen.geometry.n_uav)
    floors = np.array([rf.noise_comm / gains[m, k]
                       for m, k in zip(rows, cols)])
    order = np.argsort(floors)
    sorted_floors = floors[order]
    level = None
    for n in range(len(sorted_floors), 0, -1):
        cand = (rf.p_max + sorted_floors[:n].sum()) / n
        if cand > sorted_floors[n - 1]:
            level = cand
            break
    assert level is not None
    alloc = np.maximum(level - floors, 0.0)
    for (m, _), pw in zip(zip(rows, cols), alloc):
        p[m] = pw
    residual = rf.p_max - alloc.sum()
    idle = [m for m in range(scen.geometry.n_uav) if m not in set(rows)]
    if idle and residual > 0:
        p[idle] = residual / len(idle)
    return p
