"""Weighted control/sensing objective and its analytic gradients.

The scalar objective trades the sum of closed-form LQR costs (driven by
per-robot throughput) against the determinant of the target-position
Fisher information:

    value = (eta / psi_c) * sum_k b_k  -  ((1 - eta) / psi_s) * det(Phi)

Gradients with respect to transmit powers and UAV positions are exact
chain-rule compositions through the SINR, the dispersion-corrected rate,
the throughput-to-cost map, and the determinant (Jacobi's formula via
the adjugate, which stays defined at singular information matrices).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import channel, sensing
from .control import LN2, StabilityError

if TYPE_CHECKING:
    from .scenario import Scenario


class ObjectiveError(ValueError):
    pass


@dataclass
class Decision:
    """One candidate solution: association, powers, UAV positions."""

    theta: np.ndarray      # M x K, binary or relaxed
    p: np.ndarray          # M, watts
    positions: np.ndarray  # M x 3, meters


@dataclass
class ObjectiveBreakdown:
    value: float
    lqr_sum: float
    det_fim: float
    per_robot_cost: np.ndarray
    per_robot_throughput: np.ndarray
    fim: sensing.FimSummary


def check_decision(dec: Decision, scen: "Scenario") -> None:
    """Assert every feasibility invariant of a candidate solution."""
    geo, rf = scen.geometry, scen.rf
    channel.check_association(dec.theta)
    if np.any(dec.p < -1e-12):
        raise ObjectiveError("negative transmit power")
    if dec.p.sum() > rf.p_max + 1e-12:
        raise ObjectiveError(
            f"power budget exceeded: {dec.p.sum()} > {rf.p_max}")
    pos = np.asarray(dec.positions, float)
    m = len(pos)
    for i in range(m):
        for j in range(i + 1, m):
            dist = float(np.linalg.norm(pos[i] - pos[j]))
            if dist < geo.d_min - 1e-9:
                raise ObjectiveError(
                    f"UAVs {i} and {j} violate the spacing: {dist} < {geo.d_min}")
    (x0, x1), (y0, y1) = geo.area_x, geo.area_y
    z0, z1 = geo.z_interval
    eps = 1e-9
    if (np.any(pos[:, 0] < x0 - eps) or np.any(pos[:, 0] > x1 + eps)
            or np.any(pos[:, 1] < y0 - eps) or np.any(pos[:, 1] > y1 + eps)
            or np.any(pos[:, 2] < z0 - eps) or np.any(pos[:, 2] > z1 + eps)):
        raise ObjectiveError("UAV position outside the flight area")


def _rate_and_slope(gamma: np.ndarray, rf) -> tuple[np.ndarray, np.ndarray]:
    """Clamped rate and its derivative in the SINR.

    Where the zero clamp is active the subgradient 0 is used (the rate
    is a max with a constant there).
    """
    scale = channel.LOG2E if rf.rate_convention == "bits" else 1.0
    qinv = channel.inverse_gaussian_q(rf.bler)
    one_plus = 1.0 + gamma
    v = 1.0 - one_plus ** -2
    unclamped = np.log2(one_plus) - np.sqrt(v / rf.blocklength) * qinv * scale
    active = unclamped > 0.0
    rate = np.where(active, unclamped, 0.0)
    slope = np.zeros_like(gamma)
    if np.any(active):
        g_act = gamma[active]
        opa = 1.0 + g_act
        v_act = 1.0 - opa ** -2
        dv = 2.0 * opa ** -3
        slope_act = (1.0 / (opa * LN2)
                     - qinv * scale * dv
                     / (2.0 * np.sqrt(v_act * rf.blocklength)))
        slope[active] = slope_act
    return rate, slope


def _cost_terms(throughput: np.ndarray, derived) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-robot cost b_k, its derivative in f, and the margins f_k."""
    k_count = len(derived)
    b = np.empty(k_count)
    db_df = np.empty(k_count)
    f = np.empty(k_count)
    for k, der in enumerate(derived):
        fk = 2.0 * (throughput[k] - der.g) / der.iota
        f[k] = fk
        if fk <= 0.0:
            b[k] = np.inf
            db_df[k] = -np.inf
            continue
        t = math.exp(-fk * LN2)
        one_minus = -math.expm1(-fk * LN2)
        b[k] = der.b_min + der.Omega * t / one_minus
        db_df[k] = -der.Omega * LN2 * t / one_minus ** 2
    return b, db_df, f


def evaluate(dec: Decision, scen: "Scenario",
             on_unstable: str = "raise") -> ObjectiveBreakdown:
    """Evaluate the weighted objective at a candidate solution.

    ``on_unstable`` decides what happens when some robot's throughput
    falls below its entropy rate: ``"raise"`` (default) raises a
    :class:`StabilityError` naming the robot, ``"inf"`` returns +inf as
    the objective value.  With eta = 0 the control term carries zero
    weight and stability is not enforced.
    """
    w, rf, geo = scen.weights, scen.rf, scen.geometry
    state = channel.link_state(dec.p, dec.positions, geo.robots, rf)
    throughput = channel.throughput_per_robot(dec.theta, state.rate,
                                              rf.uses_per_step)
    b, _, f = _cost_terms(throughput, scen.derived)
    fim = sensing.fim_position(dec.p, dec.positions,
                               geo.target, rf)

    lqr_sum = float(b.sum())
    if w.eta > 0.0 and not np.isfinite(lqr_sum):
        if on_unstable == "raise":
            worst = int(np.argmin(f))
            raise StabilityError(float(f[worst]), robot=worst)
        value = float("inf")
    else:
        ctrl = (w.eta / w.psi_c) * lqr_sum if w.eta > 0.0 else 0.0
        value = ctrl - ((1.0 - w.eta) / w.psi_s) * fim.det
    return ObjectiveBreakdown(value=value, lqr_sum=lqr_sum, det_fim=fim.det,
                              per_robot_cost=b, per_robot_throughput=throughput,
                              fim=fim)


def safe_value(dec: Decision, scen: "Scenario") -> float:
    """Objective value with instability mapped to +inf (for line searches)."""
    return evaluate(dec, scen, on_unstable="inf").value


def _comm_precompute(dec: Decision, scen: "Scenario"):
    """Shared quantities for both gradients."""
    rf, geo = scen.rf, scen.geometry
    gains = channel.gain_matrix(dec.positions, geo.robots, rf.alpha0)
    received = dec.p[:, None] * gains
    denom = received.sum(axis=0)[None, :] - received + rf.noise_comm
    gamma = received / denom
    rate, slope = _rate_and_slope(gamma, rf)
    throughput = channel.throughput_per_robot(dec.theta, rate,
                                              rf.uses_per_step)
    b, db_df, f = _cost_terms(throughput, scen.derived)
    if np.any(~np.isfinite(b)):
        worst = int(np.argmin(f))
        raise StabilityError(float(f[worst]), robot=worst)
    return gains, received, denom, gamma, rate, slope, throughput, b, db_df


def grad_power(dec: Decision, scen: "Scenario") -> np.ndarray:
    """Analytic gradient of the objective in the power vector."""
    w, rf, geo = scen.weights, scen.rf, scen.geometry
    m_count = len(dec.p)

    grad = np.zeros(m_count)
    if w.eta > 0.0:
        gains, received, denom, _, _, slope, _, _, db_df = \
            _comm_precompute(dec, scen)
        # dGamma[m,k]/dp_i chains through the serving and interference terms
        for k, der in enumerate(scen.derived):
            coef_k = (w.eta / w.psi_c) * db_df[k] * (2.0 / der.iota) \
                * rf.uses_per_step
            for mm in range(m_count):
                t_mk = dec.theta[mm, k] * slope[mm, k]
                if t_mk == 0.0:
                    continue
                d = denom[mm, k]
                for i in range(m_count):
                    if i == mm:
                        dgamma = gains[mm, k] / d
                    else:
                        dgamma = -received[mm, k] * gains[i, k] / d ** 2
                    grad[i] += coef_k * t_mk * dgamma

    if w.eta < 1.0:
        fim = sensing.fim_position(dec.p, dec.positions,
                                   geo.target, rf)
        adj = sensing.adjugate3(fim.phi_s)
        coef = sensing.sensing_gain_coefficient(rf)
        for mm in range(m_count):
            wvec = dec.positions[mm] - geo.target
            d2 = float(wvec @ wvec)
            dphi = (coef / d2 ** 3) * np.outer(wvec, wvec)
            grad[mm] -= ((1.0 - w.eta) / w.psi_s) * float(np.trace(adj @ dphi))
    return grad


def grad_positions(dec: Decision, scen: "Scenario") -> np.ndarray:
    """Analytic gradient of the objective in the UAV positions (M x 3)."""
    w, rf, geo = scen.weights, scen.rf, scen.geometry
    m_count = len(dec.p)

    grad = np.zeros((m_count, 3))
    if w.eta > 0.0:
        gains, received, denom, _, _, slope, _, _, db_df = \
            _comm_precompute(dec, scen)
        # dh[j,k]/dq_j = -2 h (q_j - u_k) / d^2
        dh = np.empty((m_count, len(geo.robots), 3))
        for j in range(m_count):
            for k in range(len(geo.robots)):
                diff = dec.positions[j] - geo.robots[k]
                dh[j, k] = -2.0 * gains[j, k] * diff / float(diff @ diff)
        for k, der in enumerate(scen.derived):
            coef_k = (w.eta / w.psi_c) * db_df[k] * (2.0 / der.iota) \
                * rf.uses_per_step
            for mm in range(m_count):
                t_mk = dec.theta[mm, k] * slope[mm, k]
                if t_mk == 0.0:
                    continue
                d = denom[mm, k]
                for j in range(m_count):
                    if j == mm:
                        dgamma_dh = dec.p[mm] / d
                    else:
                        dgamma_dh = -received[mm, k] * dec.p[j] / d ** 2
                    grad[j] += coef_k * t_mk * dgamma_dh * dh[j, k]

    if w.eta < 1.0:
        fim = sensing.fim_position(dec.p, dec.positions,
                                   geo.target, rf)
        adj = sensing.adjugate3(fim.phi_s)
        coef = sensing.sensing_gain_coefficient(rf)
        sens_w = (1.0 - w.eta) / w.psi_s
        for mm in range(m_count):
            wvec = dec.positions[mm] - geo.target
            d2 = float(wvec @ wvec)
            outer = np.outer(wvec, wvec)
            s_m = coef * dec.p[mm]
            for axis in range(3):
                e = np.zeros(3)
                e[axis] = 1.0
                sym = np.outer(e, wvec) + np.outer(wvec, e)
                dphi = (s_m * (sym / d2 ** 3
                               - 6.0 * wvec[axis] * outer / d2 ** 4)
                        + 8.0 * (sym / d2 ** 2
                                 - 4.0 * wvec[axis] * outer / d2 ** 3))
                grad[mm, axis] -= sens_w * float(np.trace(adj @ dphi))
    return grad
