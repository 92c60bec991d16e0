"""Closed-loop simulation: plant + controller (+ adaptation) as one ODE.

The composite state is the flat vector [q1, q2, p1, p2] extended by
theta_hat in robust mode, integrated with fixed-step classical RK4 so
runs are deterministic and byte-reproducible. The feedback torque is
re-evaluated at every RK4 stage. If the trajectory leaves the region
where Md is positive definite the run stops at the last completed step
and the trace is flagged instead of clamping the control.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import controller
from .adaptive import AdaptiveState, DisturbanceSpec
from .controller import ControllerGains, DefinitenessLost, EmptyRegion, control_terms
from .model import RobotParams, State, hamiltonian, momentum, open_loop_rhs, open_loop_rhs_flat

MODES = ("nominal", "disturbed_nominal", "disturbed_robust")
N_SPOT_CHECKS = 8  # matching-residual samples recorded along a run


class NonFiniteState(Exception):
    """Integrator produced NaN/Inf components."""


class RegionExit(Exception):
    """Raised by Trace.require_ok() when a run stopped on DefinitenessLost."""


@dataclass(frozen=True)
class Scenario:
    """One simulation experiment: plant, controller, mode and grid."""

    params: RobotParams
    gains: ControllerGains
    mode: str = "nominal"
    q0: tuple[float, float] = (0.0, 0.0)
    qdot0: tuple[float, float] = (0.0, 0.0)
    t_end: float = 30.0
    dt: float = 1e-3
    disturbance: DisturbanceSpec | None = None
    adaptive: AdaptiveState | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.dt > 0.0:
            raise ValueError("dt must be > 0")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least one step dt")
        if self.mode != "nominal" and self.disturbance is None:
            raise ValueError(f"mode {self.mode!r} requires a disturbance")
        if self.mode == "disturbed_robust":
            if self.adaptive is None:
                raise ValueError("disturbed_robust mode requires adaptive settings")
            if self.adaptive.theta_hat.shape[0] != self.disturbance.regressor.ell:
                raise ValueError("theta_hat length does not match the regressor")
        try:
            rho = controller.region_rho(self.params, self.gains)
            if abs(self.q0[1]) >= rho:
                warnings.warn(
                    f"|q2(0)| = {abs(self.q0[1]):.4g} is outside the Md>0 region "
                    f"rho = {rho:.4g}; expect an immediate region exit")
        except EmptyRegion as e:
            warnings.warn(f"Md is nowhere positive definite: {e}")

    def initial_momentum(self) -> tuple[float, float]:
        """p0 = M(q2(0)) qdot0."""
        return momentum(self.params, self.q0[1], self.qdot0[0], self.qdot0[1])


@dataclass
class Trace:
    """Uniform-grid diagnostic records of one run."""

    t: np.ndarray
    q: np.ndarray            # (n, 2)
    p: np.ndarray            # (n, 2)
    u: np.ndarray
    d: np.ndarray
    d_hat: np.ndarray
    H: np.ndarray
    Hd: np.ndarray
    V_lyap: np.ndarray
    ptilde1: np.ndarray
    theta_hat: np.ndarray    # (n, ell); ell = 0 outside robust mode
    status: str = "ok"       # "ok" | "region_exit"
    exit_reason: str = ""
    # (t, kinetic residual, potential residual) at a few visited states
    spot_checks: list[tuple[float, float, float]] = field(default_factory=list)

    def require_ok(self):
        if self.status != "ok":
            raise RegionExit(self.exit_reason)

    @property
    def final_state(self) -> State:
        return State(q=self.q[-1], p=self.p[-1])


def step_rk4(rhs, x: np.ndarray, dt: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step of the autonomous ODE x' = rhs(x)."""
    k1 = rhs(x)
    k2 = rhs(x + (0.5 * dt) * k1)
    k3 = rhs(x + (0.5 * dt) * k2)
    k4 = rhs(x + dt * k3)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(f"non-finite state after RK4 step: {out}")
    return out


def _spot_residuals(params: RobotParams, gains: ControllerGains,
                    q2: float) -> tuple[float, float]:
    """Pointwise kinetic/potential matching residuals for trace spot checks.

    Kinetic: the two actuated scalar rows plus the unactuated ODE row of
    -Psi M' Psi^T + psi4 Md' = [[2a1, a2], [a2, 0]]; potential: the
    unactuated row of the potential matching identity (q1-independent).
    """
    s, c = math.sin(q2), math.cos(q2)
    ps1, ps2 = controller.psi_row1(params, gains, q2)
    ps3 = controller.psi3(params, gains, q2)
    ps4 = -gains.psi40
    _, dd2, dd4 = controller.desired_inertia_entries_derivative(params, gains, q2)
    a1, a2 = controller.alpha_entries(params, gains, q2)
    m11 = params.p1 + params.p2 * s * s
    dm11 = 2.0 * params.p2 * s * c
    dm12 = -params.p3 * s
    # rows of -Psi M' Psi^T + psi4*Md' (Md' entries: [[0, dd2],[dd2, dd4]])
    r11 = -(ps1 * (dm11 * ps1 + dm12 * ps2) + ps2 * dm12 * ps1) + ps4 * 0.0 - 2.0 * a1
    r12 = -(ps1 * (dm11 * ps3 + dm12 * ps4) + ps2 * dm12 * ps3) + ps4 * dd2 - a2
    r22 = -(ps3 * (dm11 * ps3 + dm12 * ps4) + ps4 * dm12 * ps3) + ps4 * dd4
    kin = max(abs(r11), abs(r12), abs(r22))
    # potential row: psi3 * dVd/dq1 + psi4 * dVd/dq2 = -p5 sin(q2); z-part cancels
    g = controller.shaped_potential_gradient(params, gains, (0.0, q2))
    pot = abs(ps3 * g[0] + ps4 * g[1] + params.p5 * s)
    return kin, pot


def run(scenario: Scenario) -> Trace:
    """Integrate the scenario and record the full diagnostic trace.

    Stops early with status "region_exit" when the controller loses Md
    definiteness; raises NonFiniteState if integration blows up.
    """
    params, gains = scenario.params, scenario.gains
    dist = scenario.disturbance
    robust = scenario.mode == "disturbed_robust"
    ell = dist.regressor.ell if robust else 0

    n = int(round(scenario.t_end / scenario.dt))
    n = max(n, 1)
    dt = scenario.dt

    if robust:
        ginv_rows = [tuple(row) for row in scenario.adaptive.gamma_inv]
        terms = dist.regressor.terms
        theta = tuple(dist.theta)
    if dist is not None:
        dterms = dist.regressor.terms
        dtheta = tuple(dist.theta)

    def rhs(x: np.ndarray) -> np.ndarray:
        q1, q2, p1c, p2c = x[0], x[1], x[2], x[3]
        u, pt1 = control_terms(params, gains, q1, q2, p1c, p2c)
        if dist is None:
            d = 0.0
        else:
            d = 0.0
            fvals = [t(q1, q2, p1c, p2c) for t in dterms]
            for fv, th in zip(fvals, dtheta):
                d += fv * th
        if robust:
            for fv, th in zip(fvals, x[4:]):
                u += fv * th
        qd1, qd2, pd1, pd2 = open_loop_rhs_flat(params, q2, p1c, p2c, u, d)
        if not robust:
            return np.array([qd1, qd2, pd1, pd2])
        out = np.empty(4 + ell)
        out[0], out[1], out[2], out[3] = qd1, qd2, pd1, pd2
        for i in range(ell):
            acc = 0.0
            for gij, fv in zip(ginv_rows[i], fvals):
                acc += gij * fv
            out[4 + i] = -pt1 * acc
        return out

    t_grid = np.arange(n + 1) * dt
    q = np.empty((n + 1, 2))
    p = np.empty((n + 1, 2))
    u_tr = np.empty(n + 1)
    d_tr = np.empty(n + 1)
    dhat_tr = np.empty(n + 1)
    h_tr = np.empty(n + 1)
    hd_tr = np.empty(n + 1)
    v_tr = np.empty(n + 1)
    pt1_tr = np.empty(n + 1)
    th_tr = np.empty((n + 1, ell))

    p0 = scenario.initial_momentum()
    x = np.array([scenario.q0[0], scenario.q0[1], p0[0], p0[1]])
    if robust:
        x = np.concatenate([x, scenario.adaptive.theta_hat])

    spot_every = max(n // N_SPOT_CHECKS, 1)
    spots: list[tuple[float, float, float]] = []
    status, reason = "ok", ""
    rows = n + 1

    for i in range(n + 1):
        q1, q2, p1c, p2c = x[0], x[1], x[2], x[3]
        try:
            u_now, pt1 = control_terms(params, gains, q1, q2, p1c, p2c)
            s_now = State(q=np.array([q1, q2]), p=np.array([p1c, p2c]))
            hd = controller.desired_hamiltonian(params, gains, s_now)
        except DefinitenessLost as e:
            status, reason, rows = "region_exit", str(e), i
            break
        d_now = dist.value(s_now) if dist is not None else 0.0
        if robust:
            fvals = [tm(q1, q2, p1c, p2c) for tm in terms]
            dhat = sum(fv * th for fv, th in zip(fvals, x[4:]))
            u_now += dhat
            err = x[4:] - np.asarray(theta)
            v_now = hd + 0.5 * float(err @ scenario.adaptive.gamma_inv @ err)
            th_tr[i] = x[4:]
        else:
            dhat, v_now = 0.0, hd
        q[i] = q1, q2
        p[i] = p1c, p2c
        u_tr[i], d_tr[i], dhat_tr[i] = u_now, d_now, dhat
        h_tr[i] = hamiltonian(params, s_now)
        hd_tr[i], v_tr[i], pt1_tr[i] = hd, v_now, pt1
        if i % spot_every == 0:
            kin, pot = _spot_residuals(params, gains, q2)
            spots.append((float(t_grid[i]), kin, pot))
        if i == n:
            break
        try:
            x = step_rk4(rhs, x, dt)
        except DefinitenessLost as e:
            status, reason, rows = "region_exit", str(e), i + 1
            break

    return Trace(
        t=t_grid[:rows], q=q[:rows], p=p[:rows], u=u_tr[:rows], d=d_tr[:rows],
        d_hat=dhat_tr[:rows], H=h_tr[:rows], Hd=hd_tr[:rows], V_lyap=v_tr[:rows],
        ptilde1=pt1_tr[:rows], theta_hat=th_tr[:rows], status=status,
        exit_reason=reason, spot_checks=spots)


def closed_loop_rhs_direct(params: RobotParams, gains: ControllerGains,
                           s: State) -> tuple[np.ndarray, np.ndarray]:
    """Target-form vector field, evaluated from the shaped quantities.

    Assembles [[0, M^{-1}Md], [-Md M^{-1}, J2 - G Kv G^T]] grad Hd
    literally; exists as an independent oracle against the composition
    open_loop_rhs + control_law, which must agree with it identically.
    """
    from .model import G, inertia

    q2 = float(s.q[1])
    m = inertia(params, q2)
    md = controller.desired_inertia(params, gains, q2)
    psi = controller.psi_matrix(params, gains, q2)
    pt = np.array(controller.momentum_tilde(params, gains, q2, s.p[0], s.p[1]))
    a = controller.alpha(params, gains, q2)
    j2s = float(pt @ a)
    j2 = np.array([[0.0, j2s], [-j2s, 0.0]])
    gkg = gains.kv * (G @ G.T)
    gq = controller.grad_q_Hd(params, gains, s)
    qdot = np.linalg.solve(m, md) @ pt
    pdot = -psi @ gq + (j2 - gkg) @ pt
    return qdot, pdot
