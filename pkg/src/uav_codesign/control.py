"""Steady-state control quantities for the robot plants.

Each robot is a discrete-time linear plant x' = A x + B z + v observed
through y = C x + w.  This module solves the two algebraic Riccati
equations of the infinite-horizon LQR problem, the steady-state Kalman
filter, and derives from them the quantities that couple control
performance to communication throughput:

* ``b_min``      -- cost floor with unconstrained communication,
* ``g``          -- intrinsic entropy rate (bits per control step),
* ``Omega``      -- coefficient of the throughput-dependent cost gap.

The closed-form map from data throughput to optimal LQR cost and its
inverse live here, together with a time-domain LQG simulation used as an
independent oracle for the cost floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)


class ControlError(ValueError):
    """Raised for invalid plants or failed steady-state solves."""


class StabilityError(ControlError):
    """Throughput too low for the assuredly-stable operating regime."""

    def __init__(self, margin: float, robot: int | None = None):
        self.margin = margin
        self.robot = robot
        where = f" for robot {robot}" if robot is not None else ""
        super().__init__(
            f"assuredly-stable condition violated{where}: "
            f"normalized throughput margin f={margin:.6g} <= 0"
        )


@dataclass
class PlantSpec:
    """One robot's control system matrices and noise covariances."""

    A: np.ndarray
    B_in: np.ndarray
    C: np.ndarray
    Q_w: np.ndarray
    R_w: np.ndarray
    Sigma_v: np.ndarray
    Sigma_w: np.ndarray

    @property
    def iota(self) -> int:
        """State dimension."""
        return self.A.shape[0]

    @property
    def zeta(self) -> int:
        """Observation dimension."""
        return self.C.shape[0]


@dataclass
class PlantDerived:
    """Steady-state quantities derived from a :class:`PlantSpec`."""

    iota: int
    S: np.ndarray
    M: np.ndarray
    P: np.ndarray
    K_gain: np.ndarray
    Sigma: np.ndarray
    N: np.ndarray
    g: float            # entropy rate, bits per control step
    Omega: float        # cost-gap coefficient
    b_min: float        # cost floor with unconstrained communication


def scaled_identity_plant(iota: int, g: float, sigma_v2: float,
                          sigma_w2: float) -> PlantSpec:
    """Plant with A = 2^(g/iota) * I, B = C = I, Q = I, R = 0.

    Realizes an arbitrary target entropy rate ``g`` (bits per step) while
    keeping every derived matrix a scalar multiple of the identity, which
    admits closed-form oracles.
    """
    eye = np.eye(iota)
    a = 2.0 ** (g / iota)
    return PlantSpec(
        A=a * eye,
        B_in=eye.copy(),
        C=eye.copy(),
        Q_w=eye.copy(),
        R_w=np.zeros((iota, iota)),
        Sigma_v=sigma_v2 * eye,
        Sigma_w=sigma_w2 * eye,
    )


def validate_plant(spec: PlantSpec) -> None:
    """Check symmetry/PSD of the weights and covariances and shapes."""
    iota, kappa = spec.B_in.shape
    if spec.A.shape != (iota, iota):
        raise ControlError("A must be square and match B rows")
    if spec.C.shape[1] != iota:
        raise ControlError("C column count must equal the state dimension")
    zeta = spec.C.shape[0]
    for name, mat, dim in (
        ("Q_w", spec.Q_w, iota),
        ("R_w", spec.R_w, kappa),
        ("Sigma_v", spec.Sigma_v, iota),
        ("Sigma_w", spec.Sigma_w, zeta),
    ):
        if mat.shape != (dim, dim):
            raise ControlError(f"{name} must be {dim}x{dim}")
        if not np.allclose(mat, mat.T, atol=1e-12):
            raise ControlError(f"{name} must be symmetric")
        eigmin = float(np.linalg.eigvalsh(mat).min())
        if eigmin < -1e-10 * max(1.0, float(np.trace(mat))):
            raise ControlError(f"{name} must be positive semidefinite")


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def solve_cost_riccati(spec: PlantSpec, tol: float = 1e-12,
                       max_iter: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-point solve of the LQR cost Riccati pair (S, M).

    Iterates S <- Q + A^T (S - M) A with M = S B (R + B^T S B)^-1 B^T S,
    starting from S = Q, until the update is below ``tol`` relative to
    1 + ||S||_F.
    """
    A, B, Q, R = spec.A, spec.B_in, spec.Q_w, spec.R_w
    S = Q.astype(float).copy()
    for _ in range(max_iter):
        G = R + B.T @ S @ B
        try:
            X = np.linalg.solve(G, B.T @ S)
        except np.linalg.LinAlgError as exc:
            raise ControlError("singular control innovation R + B^T S B") from exc
        M = _sym(S @ B @ X)
        S_next = _sym(Q + A.T @ (S - M) @ A)
        if np.linalg.norm(S_next - S) <= tol * (1.0 + np.linalg.norm(S)):
            S = S_next
            break
        S = S_next
    else:
        raise ControlError(f"cost Riccati did not converge in {max_iter} iterations")
    G = R + B.T @ S @ B
    M = _sym(S @ B @ np.linalg.solve(G, B.T @ S))
    return S, M


def solve_kalman_steady(spec: PlantSpec, tol: float = 1e-12,
                        max_iter: int = 100_000
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Steady-state Kalman filter: predictive covariance P, gain, and
    the posterior / one-step-evolved covariances (Sigma, N).

    Iterates the predictive Riccati recursion starting from P = Sigma_v.
    """
    A, C = spec.A, spec.C
    Sv, Sw = spec.Sigma_v, spec.Sigma_w
    eye = np.eye(spec.iota)
    P = Sv.astype(float).copy()

    def _update(P):
        innov = C @ P @ C.T + Sw
        try:
            K = np.linalg.solve(innov.T, (P @ C.T).T).T
        except np.linalg.LinAlgError:
            # singular innovation (noiseless degenerate case): the
            # pseudoinverse gain is still the minimum-variance choice
            K = P @ C.T @ np.linalg.pinv(innov)
        # Joseph-form posterior, then propagate: algebraically the same
        # recursion but without the cancellation of two A P A^T-sized
        # terms, which matters for fast plants
        closed = eye - K @ C
        Sigma = _sym(closed @ P @ closed.T + K @ Sw @ K.T)
        return _sym(A @ Sigma @ A.T + Sv), K, Sigma

    for _ in range(max_iter):
        P_next, _, _ = _update(P)
        if np.linalg.norm(P_next - P) <= tol * (1.0 + np.linalg.norm(P)):
            P = P_next
            break
        P = P_next
    else:
        raise ControlError(f"filter Riccati did not converge in {max_iter} iterations")
    _, K, Sigma = _update(P)
    N = _sym(A @ Sigma @ A.T - Sigma + Sv)
    return P, K, Sigma, N


def derive_plant(spec: PlantSpec, tol: float = 1e-12,
                 max_iter: int = 100_000) -> PlantDerived:
    """Solve both steady-state problems and derive (g, Omega, b_min)."""
    S, M = solve_cost_riccati(spec, tol=tol, max_iter=max_iter)
    P, K, Sigma, N = solve_kalman_steady(spec, tol=tol, max_iter=max_iter)
    iota = spec.iota

    sign, logabsdet = np.linalg.slogdet(spec.A)
    if sign == 0:
        raise ControlError("entropy rate undefined: state matrix is singular")
    g = logabsdet / LN2

    b_min = float(np.trace(spec.Sigma_v @ S)
                  + np.trace(Sigma @ S @ spec.A.T @ M @ spec.A))

    # Omega = iota * det(N M)^(1/iota), evaluated through log-determinants
    # so large dimensions cannot overflow.
    sig_n, logdet_n = np.linalg.slogdet(N)
    sig_m, logdet_m = np.linalg.slogdet(M)
    if sig_n <= 0 or sig_m <= 0:
        omega = 0.0
    else:
        omega = iota * math.exp((logdet_n + logdet_m) / iota)

    return PlantDerived(iota=iota, S=S, M=M, P=P, K_gain=K, Sigma=Sigma,
                        N=N, g=g, Omega=omega, b_min=b_min)


def stability_margin(derived: PlantDerived, throughput: float) -> float:
    """Normalized throughput margin f = (2/iota) (X - g).

    The closed-form cost is defined only for f > 0.
    """
    return 2.0 * (throughput - derived.g) / derived.iota


def lqr_cost_from_throughput(derived: PlantDerived, throughput: float) -> float:
    """Optimal LQR cost achievable at a given data throughput.

    ``throughput`` is in bits per control step.  Returns
    Omega / (2^f - 1) + b_min with f = (2/iota)(throughput - g), computed
    in the log domain so that very large f returns exactly ``b_min``
    without overflow.  Strictly decreasing in the throughput.
    """
    f = stability_margin(derived, throughput)
    if f <= 0.0:
        raise StabilityError(f)
    t = math.exp(-f * LN2)          # 2^-f, underflows to 0 for huge f
    denom = -math.expm1(-f * LN2)   # 1 - 2^-f, accurate near f = 0
    return derived.b_min + derived.Omega * t / denom


def required_throughput(derived: PlantDerived, b_target: float) -> float:
    """Minimum throughput (bits per control step) for a target cost.

    Exact inverse of :func:`lqr_cost_from_throughput`.
    """
    if b_target <= derived.b_min:
        raise ControlError(
            f"target cost {b_target:.6g} is below the minimum cost floor "
            f"{derived.b_min:.6g}"
        )
    return derived.g + 0.5 * derived.iota * math.log1p(
        derived.Omega / (b_target - derived.b_min)) / LN2


def _noise_factor(cov: np.ndarray) -> np.ndarray:
    """Square root factor F with F F^T = cov, tolerant of singular cov."""
    if not cov.any():
        return np.zeros_like(cov)
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


def simulate_lqg(spec: PlantSpec, steps: int, seed: int) -> float:
    """Empirical average LQR cost of the closed loop.

    Runs the plant under the steady-state Kalman estimator and the LQR
    gain with unconstrained (lossless) observation delivery; the
    long-run average of x^T Q x + z^T R z converges to the cost floor.
    Deterministic given ``seed``.
    """
    S, _ = solve_cost_riccati(spec)
    _, K, _, _ = solve_kalman_steady(spec)
    A, B, C, Q, R = spec.A, spec.B_in, spec.C, spec.Q_w, spec.R_w
    G = R + B.T @ S @ B
    L = np.linalg.solve(G, B.T @ S @ A)   # control gain: z = -L x_hat

    rng = np.random.default_rng(seed)
    Fv = _noise_factor(spec.Sigma_v)
    Fw = _noise_factor(spec.Sigma_w)
    iota, zeta = spec.iota, spec.zeta

    x = np.zeros(iota)
    x_hat = np.zeros(iota)
    total = 0.0
    for n in range(steps):
        z = -L @ x_hat
        total += float(x @ Q @ x + z @ R @ z)
        v = Fv @ rng.standard_normal(iota)
        w = Fw @ rng.standard_normal(zeta)
        x = A @ x + B @ z + v
        x_pred = A @ x_hat + B @ z
        y = C @ x + w
        x_hat = x_pred + K @ (y - C @ x_pred)
        if not np.isfinite(x).all() or np.linalg.norm(x) > 1e9:
            raise ControlError(f"unstable closed loop at step {n}")
    return total / steps
