"""UAV-robot association by penalty-driven difference-of-convex rounds.

The binary association is relaxed to the polytope {theta in [0,1],
row sums <= 1, column sums = 1}; a growing penalty mu * sum(theta -
theta^2), linearized around the previous iterate, drives the relaxed
solution to a vertex.  Each convex inner problem is solved by a
conditional-gradient (Frank-Wolfe) loop whose linear-minimization
oracle is an assignment solve: the constraint matrix is totally
unimodular, so the polytope's vertices are exactly the injective
robot-to-UAV assignments.

Only the control half of the objective varies with the association (the
sensing term does not depend on it), so the inner math runs on a
precomputed rate matrix and is very cheap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import channel
from .control import LN2

if TYPE_CHECKING:
    from .objective import Decision
    from .scenario import Scenario


class AssociationError(ValueError):
    pass


@dataclass
class PenaltyDcOptions:
    mu0: float = 1e-3
    growth: float = 10.0
    mu_max: float = 1e6
    tol: float = 1e-4
    max_outer: int = 30
    inner_tol: float = 1e-8
    inner_max: int = 150

    def __post_init__(self):
        if self.mu0 <= 0 or self.growth <= 1 or self.mu_max < self.mu0:
            raise AssociationError("penalty schedule must grow from mu0 > 0")
        if self.tol <= 0 or self.inner_tol <= 0:
            raise AssociationError("tolerances must be positive")


@dataclass
class AssociationTrace:
    omegas: list
    penalty_residual: float
    theta_relaxed: np.ndarray
    inner_converged: bool


class _ControlTerm:
    """Control objective as a function of the association only.

    Rates are frozen at the current powers/positions; b_k depends on
    theta through the throughput X_k = c_use * sum_m theta[m,k] R[m,k].
    """

    def __init__(self, scen: "Scenario", rates: np.ndarray):
        self.weight = scen.weights.eta / scen.weights.psi_c
        self.c_use = scen.rf.uses_per_step
        self.rates = rates
        self.g = np.array([d.g for d in scen.derived])
        self.iota = np.array([float(d.iota) for d in scen.derived])
        self.omega = np.array([d.Omega for d in scen.derived])
        self.b_min = np.array([d.b_min for d in scen.derived])

    def margins(self, theta: np.ndarray) -> np.ndarray:
        x = self.c_use * np.einsum("mk,mk->k", theta, self.rates)
        return 2.0 * (x - self.g) / self.iota

    def value(self, theta: np.ndarray) -> float:
        f = self.margins(theta)
        if np.any(f <= 0.0):
            return float("inf")
        t = np.exp(-f * LN2)
        b = self.b_min + self.omega * t / (1.0 - t)
        return self.weight * float(b.sum())

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        f = self.margins(theta)
        t = np.exp(-f * LN2)
        db_df = -self.omega * LN2 * t / (1.0 - t) ** 2
        df_dtheta = (2.0 / self.iota)[None, :] * self.c_use * self.rates
        return self.weight * db_df[None, :] * df_dtheta


def _lmo(grad: np.ndarray) -> np.ndarray:
    """Vertex of the association polytope minimizing a linear objective.

    Unassigned UAVs stay idle, which is always optimal here because a
    vertex only pays for the entries it switches on.
    """
    m_count, k_count = grad.shape
    rows, cols = linear_sum_assignment(grad)
    vertex = np.zeros((m_count, k_count))
    vertex[rows, cols] = 1.0
    return vertex


def _line_search(ctrl: _ControlTerm, theta: np.ndarray, direction: np.ndarray,
                 mu: float, anchor: np.ndarray, t_hi: float) -> float:
    """Exact line search for the penalized objective along a segment.

    The objective is convex in the step, so bisection on its directional
    derivative finds the minimizer.
    """
    lin_grad = mu * (1.0 - 2.0 * anchor)

    def slope(t: float) -> float:
        g = ctrl.gradient(theta + t * direction) + lin_grad
        return float(np.sum(g * direction))

    lo, hi = 0.0, t_hi
    if slope(lo) >= 0.0:
        return 0.0
    if slope(hi) <= 0.0:
        return hi
    for _ in range(70):
        mid = 0.5 * (lo + hi)
        if slope(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _stability_cap(ctrl: _ControlTerm, theta: np.ndarray,
                   direction: np.ndarray) -> float:
    """Largest step keeping every robot's throughput margin positive."""
    f0 = ctrl.margins(theta)
    f1 = ctrl.margins(theta + direction)
    df = f1 - f0
    cap = 1.0
    for k in range(len(f0)):
        if df[k] < 0.0:
            # keep a sliver of the current margin
            cap = min(cap, 0.999 * f0[k] / -df[k])
    return max(cap, 0.0)


def penalized_value(ctrl: _ControlTerm, theta: np.ndarray, mu: float,
                    anchor: np.ndarray) -> float:
    penalty = mu * float(theta.sum()) - mu * float(
        (anchor ** 2 + 2.0 * anchor * (theta - anchor)).sum())
    return ctrl.value(theta) + penalty


def solve_relaxed_subproblem(theta_anchor: np.ndarray, mu: float,
                             dec: "Decision", scen: "Scenario",
                             opts: PenaltyDcOptions,
                             rates: np.ndarray | None = None
                             ) -> tuple[np.ndarray, bool]:
    """Frank-Wolfe solve of one penalty-linearized convex subproblem.

    Returns the iterate and a flag telling whether the Frank-Wolfe gap
    dropped below ``opts.inner_tol`` before ``opts.inner_max`` rounds.
    """
    if rates is None:
        state = channel.link_state(dec.p, dec.positions,
                                   scen.geometry.robots, scen.rf)
        rates = state.rate
    ctrl = _ControlTerm(scen, rates)
    anchor = np.asarray(theta_anchor, float)
    theta = anchor.copy()
    lin_grad = mu * (1.0 - 2.0 * anchor)

    for _ in range(opts.inner_max):
        grad = ctrl.gradient(theta) + lin_grad
        vertex = _lmo(grad)
        direction = vertex - theta
        gap = -float(np.sum(grad * direction))
        scale = 1.0 + abs(penalized_value(ctrl, theta, mu, anchor))
        if gap <= opts.inner_tol * scale:
            return theta, True
        t_hi = _stability_cap(ctrl, theta, direction)
        if t_hi <= 0.0:
            return theta, True
        step = _line_search(ctrl, theta, direction, mu, anchor, t_hi)
        if step <= 0.0:
            return theta, True
        theta = theta + step * direction
    return theta, False


def round_and_repair(theta_relaxed: np.ndarray) -> np.ndarray:
    """Feasible binary association by maximum-weight assignment.

    Uses the relaxed entries as weights; exact ties are broken toward
    lower UAV indices, robot by robot.
    """
    theta = np.asarray(theta_relaxed, float)
    m_count, k_count = theta.shape
    bias = 1e-9 * (np.arange(m_count)[:, None]
                   * float(m_count + 1) ** -np.arange(k_count)[None, :])
    rows, cols = linear_sum_assignment(-theta + bias)
    out = np.zeros((m_count, k_count))
    out[rows, cols] = 1.0
    return out


def nearest_assignment(dec_p: np.ndarray, positions: np.ndarray,
                       scen: "Scenario") -> np.ndarray:
    """Feasible binary start: max-rate matching at the given powers."""
    state = channel.link_state(dec_p, positions, scen.geometry.robots,
                               scen.rf)
    return round_and_repair(state.rate / max(state.rate.max(), 1e-300))


def solve_association(dec: "Decision", scen: "Scenario",
                      opts: PenaltyDcOptions | None = None
                      ) -> tuple[np.ndarray, AssociationTrace]:
    """Penalty-DC outer loop; always returns a feasible binary matrix.

    The best rounded iterate (by the true control objective at the fixed
    powers and positions) is returned together with the trace.
    """
    opts = opts or scen.solver.association
    state = channel.link_state(dec.p, dec.positions, scen.geometry.robots,
                               scen.rf)
    rates = state.rate
    ctrl = _ControlTerm(scen, rates)

    anchor = nearest_assignment(dec.p, dec.positions, scen)
    if not math.isfinite(ctrl.value(anchor)):
        # fall back on the incoming association when the max-rate
        # matching starves some robot below its entropy rate
        fallback = round_and_repair(dec.theta)
        if math.isfinite(ctrl.value(fallback)):
            anchor = fallback
        else:
            raise AssociationError(
                "no stable starting association at the given powers/positions")
    best_binary = anchor.copy()
    best_value = ctrl.value(anchor)

    mu = opts.mu0
    omegas = [penalized_value(ctrl, anchor, mu, anchor)]
    theta = anchor
    inner_ok = True
    for _ in range(opts.max_outer):
        prev_iterate = theta
        theta, inner_ok = solve_relaxed_subproblem(prev_iterate, mu, dec,
                                                   scen, opts, rates=rates)
        omega = penalized_value(ctrl, theta, mu, prev_iterate)
        omegas.append(omega)
        rounded = round_and_repair(theta)
        value = ctrl.value(rounded)
        if value < best_value:
            best_value, best_binary = value, rounded
        prev = omegas[-2]
        if prev != 0.0 and abs((omega - prev) / prev) < opts.tol:
            break
        mu = min(opts.growth * mu, opts.mu_max)

    residual = float((theta - theta ** 2).sum())
    trace = AssociationTrace(omegas=omegas, penalty_residual=residual,
                             theta_relaxed=theta, inner_converged=inner_ok)
    return best_binary, trace


def exhaustive_oracle(dec: "Decision", scen: "Scenario",
                      limit: int = 1_000_000) -> np.ndarray:
    """Globally optimal binary association by enumeration.

    Walks every injective robot-to-UAV assignment in lexicographic
    order, so ties resolve to the lexicographically smallest assignment.
    """
    m_count = scen.geometry.n_uav
    k_count = scen.geometry.n_robots
    total = math.perm(m_count, k_count)
    if total > limit:
        raise AssociationError(
            f"{total} assignments exceed the enumeration guard {limit}")
    state = channel.link_state(dec.p, dec.positions, scen.geometry.robots,
                               scen.rf)
    ctrl = _ControlTerm(scen, state.rate)
    best_val = float("inf")
    best = None
    for perm in itertools.permutations(range(m_count), k_count):
        theta = np.zeros((m_count, k_count))
        for k, m in enumerate(perm):
            theta[m, k] = 1.0
        val = ctrl.value(theta)
        if val < best_val:
            best_val, best = val, theta
    if best is None:
        raise AssociationError("no stable assignment exists")
    return best
