"""Geometry-to-rate pipeline for the UAV downlinks.

Free-space line-of-sight gains, SINR with co-channel interference from
every other transmitting UAV, the short-packet achievable rate with its
dispersion penalty, and the per-robot data throughput.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

LOG2E = 1.0 / math.log(2.0)


class ChannelError(ValueError):
    pass


@dataclass
class LinkState:
    """Per-link channel gains, SINRs and achievable rates (M x K)."""

    gains: np.ndarray
    sinr: np.ndarray
    rate: np.ndarray


def channel_gain(q, u, alpha0: float) -> float:
    """Free-space gain alpha0 / d^2 between a UAV and a robot."""
    d2 = float(np.sum((np.asarray(q, float) - np.asarray(u, float)) ** 2))
    if d2 == 0.0:
        raise ChannelError("coincident transmitter and receiver")
    return alpha0 / d2


def gain_matrix(positions: np.ndarray, robots: np.ndarray,
                alpha0: float) -> np.ndarray:
    """M x K matrix of channel gains."""
    diff = positions[:, None, :] - robots[None, :, :]
    d2 = np.sum(diff * diff, axis=2)
    if np.any(d2 == 0.0):
        raise ChannelError("coincident transmitter and receiver")
    return alpha0 / d2


def sinr_matrix(p: np.ndarray, gains: np.ndarray, noise: float) -> np.ndarray:
    """SINR of every (UAV, robot) link assuming that UAV is the server.

    Interference sums the received power from every other UAV, so UAVs
    with zero allocated power drop out naturally.
    """
    received = p[:, None] * gains           # M x K
    total = received.sum(axis=0)[None, :]   # 1 x K
    return received / (total - received + noise)


def sinr(m: int, k: int, p: np.ndarray, positions: np.ndarray,
         robots: np.ndarray, noise: float, alpha0: float = 1.0) -> float:
    """Single-link SINR; convenience wrapper over :func:`sinr_matrix`."""
    gains = gain_matrix(np.asarray(positions, float),
                        np.asarray(robots, float), alpha0)
    return float(sinr_matrix(np.asarray(p, float), gains, noise)[m, k])


def inverse_gaussian_q(eps: float) -> float:
    """Inverse of the Gaussian tail function Q."""
    if not 0.0 < eps < 1.0:
        raise ChannelError(f"tail probability must be in (0, 1), got {eps}")
    return float(ndtri(1.0 - eps))


def fbl_rate(gamma, blocklength: float, eps: float,
             convention: str = "bits"):
    """Achievable rate (bits per channel use) at finite blocklength.

    Shannon rate minus the dispersion penalty sqrt(V/l) Q^-1(eps), with
    V = 1 - (1 + SINR)^-2.  Under the default ``bits`` convention the
    penalty is converted to bits by log2(e); ``nats`` leaves it
    unconverted.  Negative values are clamped to zero.
    """
    if convention not in ("bits", "nats"):
        raise ChannelError(f"unknown rate convention {convention!r}")
    scale = LOG2E if convention == "bits" else 1.0
    gamma = np.asarray(gamma, float)
    one_plus = 1.0 + gamma
    dispersion = 1.0 - one_plus ** -2
    penalty = np.sqrt(dispersion / blocklength) * inverse_gaussian_q(eps) * scale
    rate = np.log2(one_plus) - penalty
    out = np.maximum(rate, 0.0)
    return float(out) if out.ndim == 0 else out


def link_state(p: np.ndarray, positions: np.ndarray, robots: np.ndarray,
               rf) -> LinkState:
    """Assemble gains, SINRs and rates for the whole network."""
    gains = gain_matrix(np.asarray(positions, float),
                        np.asarray(robots, float), rf.alpha0)
    gam = sinr_matrix(np.asarray(p, float), gains, rf.noise_comm)
    rate = fbl_rate(gam, rf.blocklength, rf.bler, rf.rate_convention)
    return LinkState(gains=gains, sinr=gam, rate=rate)


def check_association(theta: np.ndarray, atol: float = 1e-9,
                      require_served: bool = True) -> None:
    """Row sums at most one, column sums (exactly) one, entries in [0,1].

    With ``require_served=False`` a robot may be left unserved (column
    sum below one), which simply yields zero throughput downstream.
    """
    theta = np.asarray(theta, float)
    if np.any(theta < -atol) or np.any(theta > 1.0 + atol):
        raise ChannelError("association entries must lie in [0, 1]")
    if np.any(theta.sum(axis=1) > 1.0 + atol):
        raise ChannelError("a UAV may serve at most one robot")
    col = theta.sum(axis=0)
    if np.any(col > 1.0 + atol):
        raise ChannelError("a robot's total service weight cannot exceed one")
    if require_served and np.any(np.abs(col - 1.0) > atol):
        raise ChannelError("every robot must be served with total weight one")


def throughput_per_robot(theta: np.ndarray, rates: np.ndarray,
                         uses_per_step: float) -> np.ndarray:
    """Data throughput of each robot in bits per control step."""
    check_association(theta, require_served=False)
    return uses_per_step * np.einsum("mk,mk->k", np.asarray(theta, float),
                                     np.asarray(rates, float))
