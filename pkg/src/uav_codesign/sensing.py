"""Target-localization Fisher information from round-trip ranging.

Each UAV measures its distance to the sensing target through a Gaussian
range estimate whose variance grows as d^4 and shrinks with transmit
power.  The information those ranges carry about the 3D target position
is assembled here: per-distance information, the position-space matrix
via the chain rule, its determinant, and the sum Cramer-Rao bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SensingError(ValueError):
    pass


# Relative eigenvalue threshold below which the information matrix is
# declared singular (scale-aware, deterministic).
SINGULAR_EIG_REL = 1e-12


@dataclass
class FimSummary:
    """Position-space Fisher information and derived accuracy metrics."""

    phi_s: np.ndarray           # 3x3 symmetric PSD
    det: float
    crb_sum: float              # tr(phi_s^-1), +inf when singular
    per_uav_sigma2: np.ndarray  # range-noise variance per UAV
    rank: int


def sensing_gain_coefficient(rf) -> float:
    """Power-to-information factor G_p * beta0 / (rho * sigma0^2)."""
    return rf.gp * rf.beta0 / (rf.rho * rf.noise_sense)


def range_noise_variance(p_m: float, d_m: float, rf) -> float:
    """Variance of one UAV's range measurement (m^2)."""
    if p_m <= 0.0:
        raise SensingError("unilluminated target: zero sensing power")
    if d_m <= 0.0:
        raise SensingError("nonpositive range")
    return rf.rho * rf.noise_sense * d_m ** 4 / (p_m * rf.gp * rf.beta0)


def fim_distances(p: np.ndarray, d: np.ndarray, rf) -> np.ndarray:
    """Information carried by the range vector: diag(1/sigma_m^2 + 8/d_m^2).

    The variance of each range depends only on its own distance, so the
    matrix is exactly diagonal; the 8/d^2 term comes from the distance
    dependence of the noise variance itself.
    """
    p = np.asarray(p, float)
    d = np.asarray(d, float)
    entries = [1.0 / range_noise_variance(pm, dm, rf) + 8.0 / dm ** 2
               for pm, dm in zip(p, d)]
    return np.diag(entries)


def range_jacobian(positions: np.ndarray, s: np.ndarray) -> np.ndarray:
    """3 x M Jacobian of the UAV-target distances; unit-norm columns."""
    positions = np.asarray(positions, float)
    s = np.asarray(s, float)
    diff = positions - s[None, :]
    d = np.linalg.norm(diff, axis=1)
    if np.any(d == 0.0):
        raise SensingError("UAV coincident with the target")
    return (diff / d[:, None]).T


def adjugate3(m: np.ndarray) -> np.ndarray:
    """Adjugate of a 3x3 matrix (transpose of the cofactor matrix).

    Satisfies adj(M) M = det(M) I and stays finite for singular M, which
    keeps determinant gradients defined at rank-deficient geometries.
    """
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    cof = np.array([
        [e * i - f * h, -(d * i - f * g), d * h - e * g],
        [-(b * i - c * h), a * i - c * g, -(a * h - b * g)],
        [b * f - c * e, -(a * f - c * d), a * e - b * d],
    ])
    return cof.T


def fim_position(p: np.ndarray, positions: np.ndarray, s: np.ndarray,
                 rf) -> FimSummary:
    """Position-space Fisher information of the target estimate.

    Built entrywise as a nonnegative combination of rank-one direction
    outer products, so the result is PSD by construction.  The sum CRB
    is the trace of the inverse when the matrix is nonsingular, else
    +inf with the rank recorded as a diagnostic.
    """
    p = np.asarray(p, float)
    positions = np.asarray(positions, float)
    s = np.asarray(s, float)
    if np.any(p < 0.0):
        raise SensingError("negative sensing power")
    coef = sensing_gain_coefficient(rf)

    phi = np.zeros((3, 3))
    sigma2 = np.empty(len(p))
    for m in range(len(p)):
        w = positions[m] - s
        d2 = float(w @ w)
        if d2 == 0.0:
            raise SensingError("UAV coincident with the target")
        d = np.sqrt(d2)
        # p = 0 is the continuous limit: the measurement variance blows
        # up, the power term vanishes, the geometric term remains.
        sigma2[m] = (range_noise_variance(p[m], d, rf) if p[m] > 0.0
                     else float("inf"))
        phi += (coef * p[m] / d2 ** 3 + 8.0 / d2 ** 2) * np.outer(w, w)
    phi = 0.5 * (phi + phi.T)

    det = float(np.linalg.det(phi))
    eigs = np.linalg.eigvalsh(phi)
    trace = float(np.trace(phi))
    rank = int(np.sum(eigs >= SINGULAR_EIG_REL * max(trace, 0.0)))
    if rank < 3 or trace <= 0.0:
        crb = float("inf")
    else:
        crb = float(np.trace(np.linalg.inv(phi)))
    return FimSummary(phi_s=phi, det=det, crb_sum=crb,
                      per_uav_sigma2=sigma2, rank=rank)
