"""YAML run configuration: robot, controller, simulation, disturbance.

Only the `robot` section is mandatory; every other key has a
documented default (see DEFAULTS). Unknown keys are rejected with
their full path so typos cannot silently fall back to defaults.
Validation happens entirely at load time: a Config that loads is ready
to run.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import yaml

from .adaptive import AdaptiveState, DisturbanceSpec
from .controller import ControllerGains, d4_at_origin
from .model import RobotParams
from .regressor import ParseError, parse_regressor
from .simulate import Scenario
from .verify import CounterexampleSpec, VerifyOptions

DEFAULTS = {
    "controller": {"psi40": 1.0, "k1": 0.1, "k2": 100.0, "kappa": 1.0, "kv": 1.0},
    "simulation": {"mode": "nominal", "q0": [0.0, 0.0], "qdot0": [0.0, 0.0],
                   "dt": 1e-3, "t_end": 30.0},
    "adaptive": {"gamma": 1.0, "theta_hat0": None, "enabled": True},
    "output": {"dir": ".", "plots": True},
}


class ConfigError(Exception):
    """Invalid configuration; message carries the offending key path."""


def _require_keys(section: dict, path: str, allowed: set):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key "
                              f"(expected one of: {', '.join(sorted(allowed))})")


def _number(section: dict, path: str, key: str, default=None) -> float:
    value = section.get(key, default)
    if value is None:
        raise ConfigError(f"{path}.{key}: required key missing")
    if isinstance(value, str):
        # YAML 1.1 reads "1e-3" (no dot) as a string; accept it anyway.
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}.{key}: must be finite")
    return float(value)


def _vector(section: dict, path: str, key: str, length: int, default=None):
    value = section.get(key, default)
    if value is None:
        raise ConfigError(f"{path}.{key}: required key missing")
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ConfigError(f"{path}.{key}: expected a list of {length} numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}.{key}[{i}]: expected a number, got {v!r}")
        out.append(float(v))
    return out


@dataclass(frozen=True)
class Config:
    """Fully validated run configuration."""

    params: RobotParams
    gains: ControllerGains
    mode: str
    q0: tuple[float, float]
    qdot0: tuple[float, float]
    dt: float
    t_end: float
    disturbance: DisturbanceSpec | None
    adaptive: AdaptiveState | None
    adaptive_enabled: bool
    verify: VerifyOptions
    out_dir: str
    plots: bool

    def scenario(self) -> Scenario:
        return Scenario(params=self.params, gains=self.gains, mode=self.mode,
                        q0=self.q0, qdot0=self.qdot0, t_end=self.t_end,
                        dt=self.dt, disturbance=self.disturbance,
                        adaptive=self.adaptive)


def _load_robot(section) -> RobotParams:
    if not isinstance(section, dict):
        raise ConfigError("robot: section missing or not a mapping")
    _require_keys(section, "robot",
                  {"p", "m1", "m2", "l1", "l2", "I1", "I2", "g"})
    physical = {"m1", "m2", "l1", "l2", "I1", "I2", "g"} & set(section)
    if "p" in section:
        if physical:
            warnings.warn("robot: both p and physical constants given; p wins",
                          stacklevel=2)
        p = _vector(section, "robot", "p", 5)
        try:
            return RobotParams(*p)
        except ValueError as e:
            raise ConfigError(f"robot.p: {e}") from e
    kwargs = {k: _number(section, "robot", k) for k in ("m1", "m2", "l1", "l2", "I1", "I2")}
    kwargs["g"] = _number(section, "robot", "g", 9.81)
    try:
        return RobotParams.from_physical(**kwargs)
    except ValueError as e:
        raise ConfigError(f"robot: {e}") from e


def _load_gains(section, params: RobotParams) -> ControllerGains:
    section = section if section is not None else {}
    if not isinstance(section, dict):
        raise ConfigError("controller: not a mapping")
    defaults = DEFAULTS["controller"]
    _require_keys(section, "controller", set(defaults))
    values = {k: _number(section, "controller", k, defaults[k]) for k in defaults}
    try:
        gains = ControllerGains(**values)
    except ValueError as e:
        raise ConfigError(f"controller: {e}") from e
    d40 = d4_at_origin(params, gains)
    if d40 <= 0.0:
        raise ConfigError(
            f"controller: d4(0) = p3/k1 - p4*psi40 = {d40:.6g} <= 0 — "
            "Md cannot be positive definite at the equilibrium; "
            "decrease k1*psi40")
    return gains


def _load_disturbance(section) -> DisturbanceSpec | None:
    if section is None:
        return None
    if not isinstance(section, dict):
        raise ConfigError("disturbance: not a mapping")
    _require_keys(section, "disturbance", {"f", "theta"})
    f = section.get("f")
    if not isinstance(f, list) or not f or not all(isinstance(t, str) for t in f):
        raise ConfigError("disturbance.f: expected a nonempty list of expressions")
    try:
        regressor = parse_regressor(f)
    except ParseError as e:
        raise ConfigError(f"disturbance.f: {e}") from e
    theta = _vector(section, "disturbance", "theta", len(f))
    return DisturbanceSpec(regressor=regressor, theta=np.array(theta))


def _load_adaptive(section, dist: DisturbanceSpec | None) -> tuple[AdaptiveState | None, bool]:
    defaults = DEFAULTS["adaptive"]
    section = section if section is not None else {}
    if not isinstance(section, dict):
        raise ConfigError("adaptive: not a mapping")
    _require_keys(section, "adaptive", set(defaults))
    enabled = section.get("enabled", defaults["enabled"])
    if not isinstance(enabled, bool):
        raise ConfigError("adaptive.enabled: expected true/false")
    if dist is None:
        if section:
            raise ConfigError("adaptive: requires a disturbance section (nothing to adapt)")
        return None, enabled
    ell = dist.regressor.ell
    theta_hat0 = (_vector(section, "adaptive", "theta_hat0", ell)
                  if section.get("theta_hat0") is not None else [0.0] * ell)
    gamma = section.get("gamma", defaults["gamma"])
    if isinstance(gamma, (int, float)) and not isinstance(gamma, bool):
        if gamma <= 0:
            raise ConfigError("adaptive.gamma: must be > 0")
        gamma_arr = float(gamma) * np.eye(ell)
    elif isinstance(gamma, list):
        rows = [_vector({"row": r}, "adaptive.gamma", "row", ell) for r in gamma]
        if len(rows) != ell:
            raise ConfigError(f"adaptive.gamma: expected {ell}x{ell} matrix")
        gamma_arr = np.array(rows)
    else:
        raise ConfigError("adaptive.gamma: expected a number or a matrix")
    try:
        state = AdaptiveState(theta_hat=np.array(theta_hat0), gamma=gamma_arr)
    except ValueError as e:
        raise ConfigError(f"adaptive: {e}") from e
    return state, enabled


def _load_verify(section) -> VerifyOptions:
    section = section if section is not None else {}
    if not isinstance(section, dict):
        raise ConfigError("verify: not a mapping")
    allowed = {"grid_points", "span", "planar_grid", "samples", "seed",
               "scan_cells", "md_scan_points", "psi3_offset", "derivatives",
               "counterexample"}
    _require_keys(section, "verify", allowed)
    kwargs = {}
    for key in ("grid_points", "planar_grid", "samples", "seed",
                "scan_cells", "md_scan_points"):
        if key in section:
            kwargs[key] = int(_number(section, "verify", key))
    for key in ("span", "psi3_offset"):
        if key in section:
            kwargs[key] = _number(section, "verify", key)
    if "derivatives" in section:
        if section["derivatives"] not in ("analytic", "fd"):
            raise ConfigError("verify.derivatives: expected 'analytic' or 'fd'")
        kwargs["derivatives"] = section["derivatives"]
    if "counterexample" in section:
        ce = section["counterexample"]
        if not isinstance(ce, dict):
            raise ConfigError("verify.counterexample: not a mapping")
        _require_keys(ce, "verify.counterexample", {"frak_k1", "frak_k2", "b"})
        try:
            kwargs["counterexample"] = CounterexampleSpec(
                frak_k1=_number(ce, "verify.counterexample", "frak_k1", 1.0),
                frak_k2=_number(ce, "verify.counterexample", "frak_k2", 1.0),
                b=_number(ce, "verify.counterexample", "b", 1.0))
        except ValueError as e:
            raise ConfigError(f"verify.counterexample: {e}") from e
    return VerifyOptions(**kwargs)


def load_config(path: str) -> Config:
    """Load and validate a YAML config file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML: {e}") from e
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    _require_keys(raw, "config", {"robot", "controller", "simulation",
                                  "disturbance", "adaptive", "verify", "output"})

    params = _load_robot(raw.get("robot"))
    gains = _load_gains(raw.get("controller"), params)

    sim = raw.get("simulation") or {}
    if not isinstance(sim, dict):
        raise ConfigError("simulation: not a mapping")
    sim_defaults = DEFAULTS["simulation"]
    _require_keys(sim, "simulation", set(sim_defaults))
    mode = sim.get("mode", sim_defaults["mode"])
    q0 = tuple(_vector(sim, "simulation", "q0", 2, sim_defaults["q0"]))
    qdot0 = tuple(_vector(sim, "simulation", "qdot0", 2, sim_defaults["qdot0"]))
    dt = _number(sim, "simulation", "dt", sim_defaults["dt"])
    t_end = _number(sim, "simulation", "t_end", sim_defaults["t_end"])

    dist = _load_disturbance(raw.get("disturbance"))
    adaptive, enabled = _load_adaptive(raw.get("adaptive"), dist)

    if mode not in ("nominal", "disturbed_nominal", "disturbed_robust"):
        raise ConfigError(f"simulation.mode: unknown mode {mode!r}")
    if mode != "nominal" and dist is None:
        raise ConfigError(f"simulation.mode: {mode} requires a disturbance section")
    if mode == "disturbed_robust" and not enabled:
        raise ConfigError("simulation.mode: disturbed_robust requires adaptive.enabled")
    if dt <= 0 or t_end < dt:
        raise ConfigError("simulation: need dt > 0 and t_end >= dt")

    out = raw.get("output") or {}
    if not isinstance(out, dict):
        raise ConfigError("output: not a mapping")
    _require_keys(out, "output", set(DEFAULTS["output"]))
    out_dir = out.get("dir", DEFAULTS["output"]["dir"])
    if not isinstance(out_dir, str):
        raise ConfigError("output.dir: expected a string")
    plots = out.get("plots", DEFAULTS["output"]["plots"])
    if not isinstance(plots, bool):
        raise ConfigError("output.plots: expected true/false")

    return Config(params=params, gains=gains, mode=mode, q0=q0, qdot0=qdot0,
                  dt=dt, t_end=t_end, disturbance=dist, adaptive=adaptive,
                  adaptive_enabled=enabled, verify=_load_verify(raw.get("verify")),
                  out_dir=out_dir, plots=plots)
