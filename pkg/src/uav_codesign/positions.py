"""UAV position design by successive convex approximation.

Each round linearizes the objective at the current positions and the
nonconvex pairwise-spacing constraints by their first-order lower
bounds, then solves the resulting LP inside an infinity-norm trust
region.  The linearized spacing constraint implies the true quadratic
one (the squared norm is convex), so every iterate stays feasible; a
step is accepted only when the true objective decreases, and the trust
region shrinks otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as _dc_replace
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import linprog

from . import objective

if TYPE_CHECKING:
    from .objective import Decision
    from .scenario import Scenario


class PositionError(ValueError):
    pass


@dataclass
class ScaOptions:
    trust0: float = 10.0
    trust_min: float = 0.1
    shrink: float = 0.5
    tol: float = 1e-6       # relative objective improvement
    max_iter: int = 50

    def __post_init__(self):
        if not (self.trust0 > self.trust_min > 0):
            raise PositionError("need trust0 > trust_min > 0")
        if not 0 < self.shrink < 1:
            raise PositionError("shrink must lie in (0, 1)")


def linearize_collision(anchor: np.ndarray, d_min: float) -> list[dict]:
    """Halfspace lower bounds of the pairwise spacing constraints.

    For each pair, 2 (qm^ - qr^)^T (qm - qr) - ||qm^ - qr^||^2 >= d_min^2.
    Any point satisfying the halfspace satisfies the true constraint.
    """
    anchor = np.asarray(anchor, float)
    m_count = len(anchor)
    rows = []
    for m in range(m_count):
        for r in range(m + 1, m_count):
            normal = anchor[m] - anchor[r]
            sq = float(normal @ normal)
            if sq == 0.0:
                raise PositionError(f"coincident anchor pair ({m}, {r})")
            if sq < d_min ** 2 - 1e-9:
                raise PositionError(
                    f"anchor pair ({m}, {r}) violates the spacing constraint")
            rows.append({"m": m, "r": r, "normal": normal,
                         "rhs": d_min ** 2 + sq})
    return rows


def _free_axes(scen: "Scenario") -> list[int]:
    return [0, 1] if scen.geometry.fixed_altitude else [0, 1, 2]


def sca_step(dec: "Decision", scen: "Scenario", trust: float
             ) -> tuple[np.ndarray, bool]:
    """One linearized step: solve the trust-region LP, accept on descent.

    Returns the candidate positions and whether the true objective
    decreased there.  At a stationary point the anchor is returned as
    accepted.
    """
    geo = scen.geometry
    anchor = np.asarray(dec.positions, float)
    m_count = len(anchor)
    grad = objective.grad_positions(dec, scen)
    axes = _free_axes(scen)
    n_ax = len(axes)

    if float(np.abs(grad[:, axes]).max(initial=0.0)) < 1e-15:
        return anchor.copy(), True

    # variable layout: UAV-major, free axes within; rescaled so the LP
    # solver never rounds small gradient entries down to zero
    cost = grad[:, axes].reshape(-1)
    cost = cost / np.abs(cost).max()
    (x0, x1), (y0, y1) = geo.area_x, geo.area_y
    z0, z1 = geo.z_interval
    lims = {0: (x0, x1), 1: (y0, y1), 2: (z0, z1)}
    bounds = []
    for m in range(m_count):
        for ax in axes:
            lo, hi = lims[ax]
            bounds.append((max(lo, anchor[m, ax] - trust),
                           min(hi, anchor[m, ax] + trust)))

    a_ub, b_ub = [], []
    for row in linearize_collision(anchor, geo.d_min):
        m, r, normal = row["m"], row["r"], row["normal"]
        coeffs = np.zeros(m_count * n_ax)
        rhs = -row["rhs"]
        for j, ax in enumerate(axes):
            coeffs[m * n_ax + j] = -2.0 * normal[ax]
            coeffs[r * n_ax + j] = 2.0 * normal[ax]
        for ax in set(range(3)) - set(axes):
            # frozen coordinates enter the constraint as constants
            rhs += 2.0 * normal[ax] * (anchor[m, ax] - anchor[r, ax])
        a_ub.append(coeffs)
        b_ub.append(rhs)

    res = linprog(cost, A_ub=np.array(a_ub) if a_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  bounds=bounds, method="highs")
    if res.status != 0:
        raise PositionError(f"position LP failed unexpectedly: {res.message}")

    cand = anchor.copy()
    cand[:, axes] = res.x.reshape(m_count, n_ax)
    # the linearization is a global lower bound, so this cannot trip
    for m in range(m_count):
        for r in range(m + 1, m_count):
            assert (np.linalg.norm(cand[m] - cand[r])
                    >= geo.d_min - 1e-9), "linearized step broke the spacing"

    phi_anchor = objective.safe_value(dec, scen)
    phi_cand = objective.safe_value(_dc_replace(dec, positions=cand), scen)
    return cand, bool(phi_cand < phi_anchor)


def solve_positions(dec: "Decision", scen: "Scenario",
                    opts: ScaOptions | None = None
                    ) -> tuple[np.ndarray, list]:
    """Trust-region SCA loop; the true objective never increases."""
    opts = opts or scen.solver.sca
    current = _dc_replace(dec, positions=np.asarray(dec.positions, float))
    phi = objective.safe_value(current, scen)
    trace = [phi]
    trust = opts.trust0

    for _ in range(opts.max_iter):
        cand, accepted = sca_step(current, scen, trust)
        if accepted:
            new_phi = objective.safe_value(
                _dc_replace(current, positions=cand), scen)
            improvement = phi - new_phi
            current = _dc_replace(current, positions=cand)
            trace.append(new_phi)
            stalled = improvement < opts.tol * max(abs(phi), 1e-30)
            phi = new_phi
            if stalled:
                break
        else:
            trust *= opts.shrink
            if trust < opts.trust_min:
                break
    return current.positions, trace
