"""Benchmark schemes sharing the alternating-optimization pipeline.

Each scheme degrades exactly one block of the full solver:

* ``equal_power``        -- powers frozen at the even split,
* ``random_positioning`` -- positions frozen at a random feasible draw,
* ``water_filling``      -- powers by the interference-free closed form,
* ``sensing_only``       -- pure sensing objective at half the budget.
"""

from __future__ import annotations

from dataclasses import replace as _dc_replace

from . import driver
from .scenario import Scenario


def equal_power(scen: Scenario) -> driver.SolveReport:
    """Even power split; association and positions still optimized."""
    return driver.solve(scen, power="equal", scheme="equal_power")


def random_positioning(scen: Scenario) -> driver.SolveReport:
    """Positions frozen at the random feasible draw for this seed."""
    return driver.solve(scen, pos="fixed", scheme="random_positioning")


def water_filling(scen: Scenario) -> driver.SolveReport:
    """Nearest-UAV association, water-filled powers, SCA positions.

    The water-filling allocation is recomputed each round for the
    current links; a recomputed allocation that worsens the objective is
    not taken over an earlier one, which keeps the reported trace
    monotone like every other scheme.
    """
    return driver.solve(scen, assoc="nearest", power="waterfill",
                        init_power="waterfill", scheme="water_filling")


def sensing_only(scen: Scenario) -> driver.SolveReport:
    """Sensing-optimal design at half the power budget.

    The trade-off weight is forced to zero (so the control term and its
    stability requirement drop out) and the budget is halved; the
    association is irrelevant to the objective and stays at the
    max-rate matching.
    """
    half = _dc_replace(
        scen,
        rf=_dc_replace(scen.rf, p_max=scen.rf.p_max / 2.0),
        weights=_dc_replace(scen.weights, eta=0.0),
    )
    report = driver.solve(half, assoc="nearest", scheme="sensing_only",
                          notes={"eta_override": 0.0, "pmax_halved": True,
                                 "stability_waived": True})
    return report
