"""Power allocation by projected gradient descent.

The feasible set is the capped nonnegative simplex {p >= 0,
sum(p) <= P_max}.  Projection onto it is exact (sort-and-scan threshold
search); the descent uses the normalized-step schedule with geometric
decay, with an optional Armijo backtracking safeguard (default on) that
makes the accepted objective trace monotone nonincreasing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as _dc_replace
from typing import TYPE_CHECKING

import numpy as np

from . import objective

if TYPE_CHECKING:
    from .objective import Decision
    from .scenario import Scenario


class PowerError(ValueError):
    pass


@dataclass
class PgdOptions:
    step0: float | None = None       # None: 0.1 * P_max
    rho_hat: float = 0.1             # per-iteration step decay
    tol: float | None = None         # None: 1e-8 * P_max
    max_iter: int = 500
    armijo: bool = True

    def __post_init__(self):
        if self.step0 is not None and self.step0 <= 0:
            raise PowerError("step0 must be positive")
        if self.rho_hat <= 0:
            raise PowerError("rho_hat must be positive")
        if self.tol is not None and self.tol <= 0:
            raise PowerError("tol must be positive")


def project_capped_simplex(v: np.ndarray, p_max: float) -> np.ndarray:
    """Euclidean projection onto {p >= 0, sum(p) <= P_max}.

    If clipping the negatives already satisfies the cap that clip is the
    projection; otherwise the cap is active and the usual simplex
    threshold tau with sum(max(v - tau, 0)) = P_max applies, found
    exactly by a sort and scan.
    """
    if p_max <= 0:
        raise PowerError("p_max must be positive")
    v = np.asarray(v, float)
    clipped = np.maximum(v, 0.0)
    if clipped.sum() <= p_max:
        return clipped
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - p_max
    idx = np.arange(1, len(u) + 1)
    mask = u - cumulative / idx > 0
    rho = int(np.nonzero(mask)[0][-1])
    tau = cumulative[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def solve_power(dec: "Decision", scen: "Scenario",
                opts: PgdOptions | None = None
                ) -> tuple[np.ndarray, list]:
    """Projected gradient descent from the equal-split starting point.

    Returns the best feasible iterate and the accepted objective trace.
    """
    opts = opts or scen.solver.power
    p_max = scen.rf.p_max
    m_count = scen.geometry.n_uav
    step = opts.step0 if opts.step0 is not None else 0.1 * p_max
    tol = opts.tol if opts.tol is not None else 1e-8 * p_max

    p = np.full(m_count, p_max / m_count)
    current = _dc_replace(dec, p=p)
    phi = objective.safe_value(current, scen)
    best_p, best_phi = p.copy(), phi
    trace = [phi]

    for _ in range(opts.max_iter):
        grad = objective.grad_power(_dc_replace(dec, p=p), scen)
        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            break
        local = step / norm
        cand = project_capped_simplex(p - local * grad, p_max)
        if opts.armijo:
            accepted = False
            for _ in range(30):
                sufficient = phi + 1e-4 * float(grad @ (cand - p))
                cand_phi = objective.safe_value(_dc_replace(dec, p=cand), scen)
                if cand_phi <= sufficient:
                    accepted = True
                    break
                local *= 0.5
                cand = project_capped_simplex(p - local * grad, p_max)
            if not accepted:
                break
        else:
            cand_phi = objective.safe_value(_dc_replace(dec, p=cand), scen)
            if not np.isfinite(cand_phi):
                # never step into the unstable region
                step /= (1.0 + opts.rho_hat)
                continue
        moved = float(np.linalg.norm(cand - p))
        p, phi = cand, cand_phi
        trace.append(phi)
        if phi < best_phi:
            best_phi, best_p = phi, p.copy()
        step /= (1.0 + opts.rho_hat)
        if moved < tol:
            break
    return best_p, trace
