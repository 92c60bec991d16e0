"""Adaptive rejection of matched regressor-form disturbances.

The plant torque channel sees u - d with d = f(q,p)^T theta, theta an
unknown constant vector. Augmenting the energy-shaping torque with
f^T theta_hat and integrating

    dtheta_hat/dt = -ptilde1 * Gamma^{-1} f

turns the disturbed closed loop into the nominal one plus G f^T
(theta_hat - theta), and

    V = Hd + 1/2 (theta_hat - theta)^T Gamma^{-1} (theta_hat - theta)

decreases at rate -kv*ptilde1^2 along trajectories at the shipped
default Gamma = I. For Gamma != I the Gamma^{-1}-weighted V carries a
residual cross term ptilde1 * err^T (Gamma^{-2} - I) f; the weight that
cancels it for every positive definite Gamma is Gamma itself, and the
two conventions coincide at the identity. No integrability of f is
assumed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controller import ControllerGains, control_terms
from .model import RobotParams, State
from .regressor import RegressorSpec, eval_regressor


@dataclass(frozen=True)
class DisturbanceSpec:
    """Regressor basis plus the true parameters (plant side only)."""

    regressor: RegressorSpec
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        object.__setattr__(self, "theta", theta)
        if theta.shape[0] != self.regressor.ell:
            raise ValueError(
                f"theta has {theta.shape[0]} entries for {self.regressor.ell} regressor terms")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")

    def value(self, s: State) -> float:
        """True disturbance d = f(q,p)^T theta."""
        return float(eval_regressor(self.regressor, s) @ self.theta)


@dataclass(frozen=True)
class AdaptiveState:
    """Parameter estimate and (symmetric positive definite) adaptation gain."""

    theta_hat: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        theta_hat = np.asarray(self.theta_hat, dtype=float).reshape(-1)
        gamma = np.asarray(self.gamma, dtype=float)
        ell = theta_hat.shape[0]
        if gamma.shape == ():
            gamma = float(gamma) * np.eye(ell)
        if gamma.shape != (ell, ell):
            raise ValueError(f"gamma must be {ell}x{ell}, got {gamma.shape}")
        if not np.allclose(gamma, gamma.T, rtol=0.0, atol=1e-12):
            raise ValueError("gamma must be symmetric")
        if np.linalg.eigvalsh(gamma).min() <= 0.0:
            raise ValueError("gamma must be positive definite")
        object.__setattr__(self, "theta_hat", theta_hat)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "_gamma_inv", np.linalg.inv(gamma))

    @property
    def gamma_inv(self) -> np.ndarray:
        return self._gamma_inv


def adaptation_rhs(params: RobotParams, gains: ControllerGains,
                   regressor: RegressorSpec, adaptive: AdaptiveState,
                   s: State) -> np.ndarray:
    """dtheta_hat/dt = -ptilde1 * Gamma^{-1} f(q,p)."""
    _, pt1 = control_terms(params, gains, s.q[0], s.q[1], s.p[0], s.p[1])
    f = eval_regressor(regressor, s)
    return -pt1 * (adaptive.gamma_inv @ f)


def robust_control(params: RobotParams, gains: ControllerGains,
                   regressor: RegressorSpec, theta_hat: np.ndarray,
                   s: State) -> float:
    """u = energy-shaping torque + f^T theta_hat."""
    u, _ = control_terms(params, gains, s.q[0], s.q[1], s.p[0], s.p[1])
    return u + float(eval_regressor(regressor, s) @ np.asarray(theta_hat))


def lyapunov_value(gamma_inv: np.ndarray, theta_hat: np.ndarray,
                   theta: np.ndarray, hd: float) -> float:
    """V = Hd + 1/2 theta_err^T Gamma^{-1} theta_err (see module docstring)."""
    err = np.asarray(theta_hat, dtype=float) - np.asarray(theta, dtype=float)
    return hd + 0.5 * float(err @ gamma_inv @ err)
