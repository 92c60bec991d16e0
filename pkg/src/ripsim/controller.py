"""Total energy shaping controller for the rotary inverted pendulum.

The closed loop is shaped into a port-Hamiltonian system with desired
inertia Md(q2), desired potential Vd(q) and a free skew interconnection
J2. All quantities are closed-form functions of q2 built from the row
matrix Psi = Md M^{-1} = [[psi1, psi2], [psi3, psi4]]:

  psi4 = -psi40 (constant),
  psi3 = cos(q2) / (k1 + (p2/(p3*psi40)) sin^2(q2)),

which solves the scalar Riccati equation left over from kinetic energy
matching; psi1, psi2 follow from fixing Md entries d1 = k2 and d2 = d3.
Md is positive definite only on a symmetric q2 interval around the
upright equilibrium; outside it the control law has no meaning and
evaluation raises DefinitenessLost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import RobotParams, State, inertia_entries

FD_STEP = 1e-7  # central-difference step for the derivative fallback


class DefinitenessLost(Exception):
    """Desired inertia matrix not positive definite at the current q2."""

    def __init__(self, q2: float, det_md: float):
        self.q2 = q2
        self.det_md = det_md
        super().__init__(f"Md not positive definite at q2={q2:.6g} (det={det_md:.6g})")


class EmptyRegion(Exception):
    """d4 <= 0 even at the equilibrium: no q2 interval supports Md > 0."""


@dataclass(frozen=True)
class ControllerGains:
    """Free design constants: psi40, k1 (shape), k2 (scale), kappa, kv."""

    psi40: float
    k1: float
    k2: float
    kappa: float = 1.0
    kv: float = 1.0

    def __post_init__(self):
        for name in ("psi40", "k1", "k2", "kappa", "kv"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"controller gain {name} must be > 0")


def d4_at_origin(params: RobotParams, gains: ControllerGains) -> float:
    """d4(0) = p3/k1 - p4*psi40; must be positive for Md > 0 at the equilibrium."""
    return params.p3 / gains.k1 - params.p4 * gains.psi40


def region_rho(params: RobotParams, gains: ControllerGains) -> float:
    """Half-width of the symmetric q2 interval on which d4 > 0.

    rho = arccos sqrt( p4 (psi40 k1 + p2/p3) / (p3 + p2 p4/p3) ); the
    arccos argument reaches 1 exactly when d4(0) drops to 0, in which
    case no interval exists and EmptyRegion is raised. The interval
    grows as the product psi40*k1 shrinks.
    """
    arg = (params.p4 * (gains.psi40 * gains.k1 + params.p2 / params.p3)
           / (params.p3 + params.p2 * params.p4 / params.p3))
    if arg >= 1.0:
        raise EmptyRegion(
            f"d4(0) = {d4_at_origin(params, gains):.6g} <= 0: "
            "decrease psi40*k1 or the gains admit no positive definite Md")
    return math.acos(math.sqrt(arg))


def psi3(params: RobotParams, gains: ControllerGains, q2: float) -> float:
    """Closed-form solution of the kinetic-matching Riccati equation."""
    s = math.sin(q2)
    den = gains.k1 + params.p2 / (params.p3 * gains.psi40) * s * s
    return math.cos(q2) / den


def psi3_derivative(params: RobotParams, gains: ControllerGains, q2: float) -> float:
    """Analytic d(psi3)/dq2 by the quotient rule."""
    s, c = math.sin(q2), math.cos(q2)
    w = params.p2 / (params.p3 * gains.psi40)
    den = gains.k1 + w * s * s
    dden = 2.0 * w * s * c
    return (-s * den - c * dden) / (den * den)


def desired_inertia_entries(params: RobotParams, gains: ControllerGains,
                            q2: float) -> tuple[float, float, float]:
    """Entries (d1, d2, d4) of the symmetric desired inertia Md(q2)."""
    s, c = math.sin(q2), math.cos(q2)
    w = params.p2 / (params.p3 * gains.psi40)
    den = gains.k1 + w * s * s
    m11 = params.p1 + params.p2 * s * s
    d2 = c * (m11 / den - params.p3 * gains.psi40)
    d4 = params.p3 * c * c / den - params.p4 * gains.psi40
    return gains.k2, d2, d4


def desired_inertia_entries_derivative(params: RobotParams, gains: ControllerGains,
                                       q2: float) -> tuple[float, float, float]:
    """Analytic (d1', d2', d4'); d1' = 0 since d1 = k2."""
    s, c = math.sin(q2), math.cos(q2)
    s2 = 2.0 * s * c
    w = params.p2 / (params.p3 * gains.psi40)
    den = gains.k1 + w * s * s
    dden = w * s2
    m11 = params.p1 + params.p2 * s * s
    dm11 = params.p2 * s2
    dd2 = -s * (m11 / den - params.p3 * gains.psi40) \
        + c * (dm11 * den - m11 * dden) / (den * den)
    dd4 = -params.p3 * s2 * (den + w * c * c) / (den * den)
    return 0.0, dd2, dd4


def desired_inertia(params: RobotParams, gains: ControllerGains, q2: float) -> np.ndarray:
    d1, d2, d4 = desired_inertia_entries(params, gains, q2)
    return np.array([[d1, d2], [d2, d4]])


def desired_inertia_derivative(params: RobotParams, gains: ControllerGains,
                               q2: float) -> np.ndarray:
    _, dd2, dd4 = desired_inertia_entries_derivative(params, gains, q2)
    return np.array([[0.0, dd2], [dd2, dd4]])


def psi_row1(params: RobotParams, gains: ControllerGains,
             q2: float) -> tuple[float, float]:
    """(psi1, psi2) from [psi1, psi2] = [d1, d2] M^{-1}(q2)."""
    _, d2, _ = desired_inertia_entries(params, gains, q2)
    m11, m12, m22 = inertia_entries(params, q2)
    det = m11 * m22 - m12 * m12
    psi1 = (m22 * gains.k2 - m12 * d2) / det
    psi2 = (-m12 * gains.k2 + m11 * d2) / det
    return psi1, psi2


def psi_row1_derivative(params: RobotParams, gains: ControllerGains,
                        q2: float) -> tuple[float, float]:
    """Analytic (psi1', psi2') by the quotient rule on the closed forms."""
    s, c = math.sin(q2), math.cos(q2)
    s2 = 2.0 * s * c
    _, d2, _ = desired_inertia_entries(params, gains, q2)
    _, dd2, _ = desired_inertia_entries_derivative(params, gains, q2)
    m11 = params.p1 + params.p2 * s * s
    det = m11 * params.p4 - params.p3 ** 2 * c * c
    ddet = (params.p2 * params.p4 + params.p3 ** 2) * s2
    n1 = params.p4 * gains.k2 - params.p3 * c * d2
    dn1 = params.p3 * s * d2 - params.p3 * c * dd2
    n2 = -params.p3 * c * gains.k2 + m11 * d2
    dn2 = params.p3 * s * gains.k2 + params.p2 * s2 * d2 + m11 * dd2
    dpsi1 = (dn1 * det - n1 * ddet) / (det * det)
    dpsi2 = (dn2 * det - n2 * ddet) / (det * det)
    return dpsi1, dpsi2


def psi_row1_derivative_fd(params: RobotParams, gains: ControllerGains,
                           q2: float, h: float = FD_STEP) -> tuple[float, float]:
    """Central-difference fallback for (psi1', psi2')."""
    p1p, p2p = psi_row1(params, gains, q2 + h)
    p1m, p2m = psi_row1(params, gains, q2 - h)
    return (p1p - p1m) / (2.0 * h), (p2p - p2m) / (2.0 * h)


def psi_matrix(params: RobotParams, gains: ControllerGains, q2: float) -> np.ndarray:
    """Psi(q2) = Md M^{-1} as a 2x2 array [[psi1, psi2], [psi3, psi4]]."""
    p1, p2 = psi_row1(params, gains, q2)
    return np.array([[p1, p2], [psi3(params, gains, q2), -gains.psi40]])


def alpha_entries(params: RobotParams, gains: ControllerGains,
                  q2: float) -> tuple[float, float]:
    """Interconnection coefficients (alpha1, alpha2) that close kinetic matching.

    Uses the analytic psi1', psi2'. The published expression gives 2*alpha1;
    it is halved here.
    """
    s, c = math.sin(q2), math.cos(q2)
    ps1, ps2 = psi_row1(params, gains, q2)
    ps3 = psi3(params, gains, q2)
    ps4 = -gains.psi40
    dps1, dps2 = psi_row1_derivative(params, gains, q2)
    m11 = params.p1 + params.p2 * s * s
    p2_, p3_, p4_ = params.p2, params.p3, params.p4
    two_a1 = (-2.0 * p2_ * ps1 * ps1 * s * c
              + 2.0 * p3_ * ps1 * ps2 * s
              + ps4 * m11 * dps1
              - p3_ * ps4 * ps2 * s
              + 2.0 * p2_ * ps4 * ps1 * s * c
              + p3_ * ps4 * c * dps2)
    a2 = (p3_ * ps2 * ps3 * s
          - 2.0 * p2_ * ps1 * ps3 * s * c
          + p3_ * ps1 * ps4 * s
          + p3_ * ps4 * c * dps1
          + p4_ * ps4 * dps2
          - p3_ * ps4 * ps1 * s)
    return 0.5 * two_a1, a2


def alpha(params: RobotParams, gains: ControllerGains, q2: float) -> np.ndarray:
    a1, a2 = alpha_entries(params, gains, q2)
    return np.array([a1, a2])


def alpha_from_matching(params: RobotParams, gains: ControllerGains,
                        q2: float) -> np.ndarray:
    """(alpha1, alpha2) solved directly from the two actuated matching rows.

    Independent of psi1', psi2': the derivative brackets in those rows are
    the Md entries d1 = k2 (constant) and d2 (closed form), so only the
    analytic d2' is needed. Serves as a cross-check oracle for `alpha`.
    """
    s, c = math.sin(q2), math.cos(q2)
    ps1, ps2 = psi_row1(params, gains, q2)
    ps3 = psi3(params, gains, q2)
    ps4 = -gains.psi40
    _, dd2, _ = desired_inertia_entries_derivative(params, gains, q2)
    a1 = params.p3 * ps1 * ps2 * s - params.p2 * ps1 * ps1 * s * c
    a2 = (params.p3 * s * (ps2 * ps3 + ps1 * ps4)
          - 2.0 * params.p2 * ps1 * ps3 * s * c
          + ps4 * dd2)
    return np.array([a1, a2])


def potential_offset(params: RobotParams, gains: ControllerGains, q2: float) -> float:
    """z(q) - q1: the q2-dependent part of the shaped-potential coordinate."""
    a = math.sqrt(params.p3 / (gains.k1 * params.p2 * gains.psi40))
    b = math.sqrt(params.p2 / (gains.k1 * params.p3 * gains.psi40))
    return a * math.atan(b * math.sin(q2))


def shaped_potential(params: RobotParams, gains: ControllerGains, q) -> float:
    """Vd(q) = kappa/2 * z^2 - (p5/psi40) cos(q2), minimized at the upright."""
    q1, q2 = float(q[0]), float(q[1])
    z = q1 + potential_offset(params, gains, q2)
    return 0.5 * gains.kappa * z * z - params.p5 / gains.psi40 * math.cos(q2)


def shaped_potential_gradient(params: RobotParams, gains: ControllerGains, q) -> np.ndarray:
    """Analytic grad Vd; satisfies the potential matching identity exactly."""
    q1, q2 = float(q[0]), float(q[1])
    z = q1 + potential_offset(params, gains, q2)
    dz = psi3(params, gains, q2) / gains.psi40
    g1 = gains.kappa * z
    g2 = gains.kappa * z * dz + params.p5 / gains.psi40 * math.sin(q2)
    return np.array([g1, g2])


def shaped_potential_hessian(params: RobotParams, gains: ControllerGains, q) -> np.ndarray:
    """Analytic Hessian of Vd at q."""
    q1, q2 = float(q[0]), float(q[1])
    z = q1 + potential_offset(params, gains, q2)
    dz = psi3(params, gains, q2) / gains.psi40
    ddz = psi3_derivative(params, gains, q2) / gains.psi40
    k = gains.kappa
    h11 = k
    h12 = k * dz
    h22 = k * (dz * dz + z * ddz) + params.p5 / gains.psi40 * math.cos(q2)
    return np.array([[h11, h12], [h12, h22]])


def md_inverse_entries(params: RobotParams, gains: ControllerGains,
                       q2: float) -> tuple[float, float, float, float]:
    """Entries (i11, i12, i22) of Md^{-1} plus det(Md); raises when Md is not PD."""
    d1, d2, d4 = desired_inertia_entries(params, gains, q2)
    det = d1 * d4 - d2 * d2
    if d1 <= 0.0 or det <= 0.0:
        raise DefinitenessLost(q2, det)
    return d4 / det, -d2 / det, d1 / det, det


def momentum_tilde(params: RobotParams, gains: ControllerGains,
                   q2: float, p1c: float, p2c: float) -> tuple[float, float]:
    """ptilde = Md^{-1} p; ptilde[0] is the passive output that kv damps."""
    i11, i12, i22, _ = md_inverse_entries(params, gains, q2)
    return i11 * p1c + i12 * p2c, i12 * p1c + i22 * p2c


def desired_hamiltonian(params: RobotParams, gains: ControllerGains, s: State) -> float:
    """Hd = 0.5 p^T Md^{-1} p + Vd(q)."""
    pt1, pt2 = momentum_tilde(params, gains, s.q[1], s.p[0], s.p[1])
    kin = 0.5 * (s.p[0] * pt1 + s.p[1] * pt2)
    return kin + shaped_potential(params, gains, s.q)


def grad_q_Hd(params: RobotParams, gains: ControllerGains, s: State) -> np.ndarray:
    """Gradient of Hd wrt q: grad Vd plus the shaped kinetic term in q2."""
    pt1, pt2 = momentum_tilde(params, gains, s.q[1], s.p[0], s.p[1])
    _, dd2, dd4 = desired_inertia_entries_derivative(params, gains, s.q[1])
    quad = 2.0 * pt1 * pt2 * dd2 + pt2 * pt2 * dd4
    g = shaped_potential_gradient(params, gains, s.q)
    return np.array([g[0], g[1] - 0.5 * quad])


def control_terms(params: RobotParams, gains: ControllerGains,
                  q1: float, q2: float, p1c: float, p2c: float) -> tuple[float, float]:
    """Scalar fast path: returns (u, ptilde1). Raises DefinitenessLost."""
    i11, i12, i22, _ = md_inverse_entries(params, gains, q2)
    pt1 = i11 * p1c + i12 * p2c
    pt2 = i12 * p1c + i22 * p2c
    # grad_q Hd
    z = q1 + potential_offset(params, gains, q2)
    ps3 = psi3(params, gains, q2)
    gq1 = gains.kappa * z
    _, dd2, dd4 = desired_inertia_entries_derivative(params, gains, q2)
    gq2 = (gains.kappa * z * ps3 / gains.psi40
           + params.p5 / gains.psi40 * math.sin(q2)
           - 0.5 * (2.0 * pt1 * pt2 * dd2 + pt2 * pt2 * dd4))
    ps1, ps2 = psi_row1(params, gains, q2)
    a1, a2 = alpha_entries(params, gains, q2)
    j2s = a1 * pt1 + a2 * pt2  # the (1,2) entry of the skew J2
    u = -(ps1 * gq1 + ps2 * gq2) + j2s * pt2 - gains.kv * pt1
    return u, pt1


def control_law(params: RobotParams, gains: ControllerGains, s: State) -> float:
    """Energy-shaping feedback torque on the arm joint.

    Raises DefinitenessLost outside the region where Md is positive
    definite; the simulation engine decides the policy there.
    """
    u, _ = control_terms(params, gains, s.q[0], s.q[1], s.p[0], s.p[1])
    return u
