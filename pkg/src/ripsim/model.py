"""Rotary inverted pendulum dynamics in port-Hamiltonian form.

State is (q, p) with q = [arm angle, pendulum angle] in rad and momenta
p = M(q2) qdot. Only the arm joint is actuated: G = [1, 0]^T. The total
energy is H = p5*cos(q2) + 0.5 * p^T M^{-1}(q2) p.

Angles are NOT wrapped: the shaped potential used by the controller
contains an unwrapped q1 term, so configurations live on R^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Input map and its left annihilator (constant for this system).
G = np.array([[1.0], [0.0]])
G_PERP = np.array([[0.0, 1.0]])


@dataclass(frozen=True)
class RobotParams:
    """Inertia/potential constants of the rotary inverted pendulum.

    p1, p2, p4 are inertia-like (kg m^2), p3 is the coupling inertia
    (kg m^2) and p5 the gravity torque scale (N m).
    """

    p1: float
    p2: float
    p3: float
    p4: float
    p5: float

    def __post_init__(self):
        for name in ("p1", "p2", "p3", "p4", "p5"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"robot parameter {name} must be > 0")
        if self.p1 * self.p4 - self.p3 ** 2 <= 0.0:
            raise ValueError("p1*p4 - p3^2 must be > 0 (inertia matrix definiteness)")

    @classmethod
    def from_physical(cls, m1, m2, l1, l2, I1, I2, g=9.81) -> "RobotParams":
        """Build the lumped constants from link masses, lengths and inertias."""
        return cls(
            p1=I1 + m1 * l1 ** 2,
            p2=m2 * l2 ** 2,
            p3=m2 * l1 * l2,
            p4=I2 + m2 * l2 ** 2,
            p5=m2 * l2 * g,
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3, self.p4, self.p5])


@dataclass(frozen=True)
class State:
    """Generalized coordinates q (rad) and momenta p (kg m^2 rad/s)."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(2))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(2))
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ValueError("state components must be finite")


def inertia_entries(params: RobotParams, q2: float) -> tuple[float, float, float]:
    """Entries (m11, m12, m22) of the symmetric inertia matrix at q2."""
    s, c = math.sin(q2), math.cos(q2)
    return params.p1 + params.p2 * s * s, params.p3 * c, params.p4


def inertia(params: RobotParams, q2: float) -> np.ndarray:
    """Inertia matrix M(q2); symmetric positive definite for all q2."""
    m11, m12, m22 = inertia_entries(params, q2)
    return np.array([[m11, m12], [m12, m22]])


def inertia_derivative(params: RobotParams, q2: float) -> np.ndarray:
    """dM/dq2, used in the q2 component of grad_q H."""
    s, c = math.sin(q2), math.cos(q2)
    d11 = 2.0 * params.p2 * s * c
    d12 = -params.p3 * s
    return np.array([[d11, d12], [d12, 0.0]])


def _inv2(m11: float, m12: float, m22: float) -> tuple[float, float, float, float]:
    """Inverse of a symmetric 2x2 given by entries; returns (i11, i12, i22, det)."""
    det = m11 * m22 - m12 * m12
    return m22 / det, -m12 / det, m11 / det, det


def kinetic_energy(params: RobotParams, q2: float, p1c: float, p2c: float) -> float:
    """0.5 * p^T M^{-1} p from scalar components (hot-path form)."""
    m11, m12, m22 = inertia_entries(params, q2)
    i11, i12, i22, _ = _inv2(m11, m12, m22)
    return 0.5 * (i11 * p1c * p1c + 2.0 * i12 * p1c * p2c + i22 * p2c * p2c)


def hamiltonian(params: RobotParams, s: State) -> float:
    """Total energy H = p5*cos(q2) + kinetic."""
    return params.p5 * math.cos(s.q[1]) + kinetic_energy(params, s.q[1], s.p[0], s.p[1])


def grad_q_H(params: RobotParams, s: State) -> np.ndarray:
    """Gradient of H wrt q. The q1 component is identically zero."""
    return np.array([0.0, _dH_dq2(params, s.q[1], s.p[0], s.p[1])])


def _dH_dq2(params: RobotParams, q2: float, p1c: float, p2c: float) -> float:
    # dH/dq2 = -p5 sin(q2) - 0.5 p^T M^{-1} (dM/dq2) M^{-1} p
    s, c = math.sin(q2), math.cos(q2)
    m11, m12, m22 = inertia_entries(params, q2)
    i11, i12, i22, _ = _inv2(m11, m12, m22)
    v1 = i11 * p1c + i12 * p2c  # M^{-1} p
    v2 = i12 * p1c + i22 * p2c
    d11 = 2.0 * params.p2 * s * c
    d12 = -params.p3 * s
    quad = d11 * v1 * v1 + 2.0 * d12 * v1 * v2
    return -params.p5 * s - 0.5 * quad


def velocity(params: RobotParams, q2: float, p1c: float, p2c: float) -> tuple[float, float]:
    """qdot = M^{-1} p as scalars."""
    m11, m12, m22 = inertia_entries(params, q2)
    i11, i12, i22, _ = _inv2(m11, m12, m22)
    return i11 * p1c + i12 * p2c, i12 * p1c + i22 * p2c


def momentum(params: RobotParams, q2: float, qd1: float, qd2: float) -> tuple[float, float]:
    """p = M(q2) qdot as scalars."""
    m11, m12, m22 = inertia_entries(params, q2)
    return m11 * qd1 + m12 * qd2, m12 * qd1 + m22 * qd2


def open_loop_rhs(params: RobotParams, s: State, u: float, d: float = 0.0):
    """Plant vector field: qdot = M^{-1} p, pdot = -grad_q H + G (u - d)."""
    qd1, qd2 = velocity(params, s.q[1], s.p[0], s.p[1])
    pd2 = -_dH_dq2(params, s.q[1], s.p[0], s.p[1])
    return np.array([qd1, qd2]), np.array([u - d, pd2])


def open_loop_rhs_flat(params: RobotParams, q2: float, p1c: float, p2c: float,
                       u: float, d: float) -> tuple[float, float, float, float]:
    """Scalar form of open_loop_rhs for the integration loop."""
    qd1, qd2 = velocity(params, q2, p1c, p2c)
    return qd1, qd2, u - d, -_dH_dq2(params, q2, p1c, p2c)
