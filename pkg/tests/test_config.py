"""YAML configuration loading and validation.

Covers:
  - minimal robot-only file falls back to documented defaults
  - unknown keys rejected with their full path, in every section
  - lumped p vs physical constants, including the p-wins warning
  - controller gains validated against the d4(0) > 0 requirement
  - disturbance parsing errors surface with position info
  - adaptive section: gamma scalar/matrix, theta_hat0, enabled gating
  - mode/disturbance/adaptive cross-checks
  - verify options plumbing
  - Config.scenario() produces a runnable Scenario
"""
import numpy as np
import pytest

from ripsim.config import Config, ConfigError, load_config
from ripsim.regressor import ParseError
from ripsim.simulate import Scenario, run

MINIMAL = "robot: {p: [2.0, 1.0, 1.0, 2.0, 1.0]}\n"


def write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_minimal_defaults(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL))
    assert (cfg.params.p1, cfg.params.p4) == (2.0, 2.0)
    assert (cfg.gains.psi40, cfg.gains.k1, cfg.gains.k2) == (1.0, 0.1, 100.0)
    assert (cfg.gains.kappa, cfg.gains.kv) == (1.0, 1.0)
    assert cfg.mode == "nominal"
    assert cfg.q0 == (0.0, 0.0) and cfg.qdot0 == (0.0, 0.0)
    assert (cfg.dt, cfg.t_end) == (1e-3, 30.0)
    assert cfg.disturbance is None and cfg.adaptive is None
    assert cfg.adaptive_enabled is True
    assert cfg.out_dir == "." and cfg.plots is True
    assert cfg.verify.grid_points == 1000


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "absent.yaml"))


def test_invalid_yaml(tmp_path):
    with pytest.raises(ConfigError, match="not valid YAML"):
        load_config(write(tmp_path, "robot: [unclosed\n"))


def test_top_level_must_be_mapping(tmp_path):
    with pytest.raises(ConfigError, match="top level"):
        load_config(write(tmp_path, "- 1\n- 2\n"))


def test_robot_section_required(tmp_path):
    with pytest.raises(ConfigError, match="robot"):
        load_config(write(tmp_path, "controller: {kv: 2.0}\n"))


@pytest.mark.parametrize("text,path", [
    ("robot: {p: [2,1,1,2,1]}\nbogus: 1\n", r"config\.bogus"),
    ("robot: {p: [2,1,1,2,1], mass: 3}\n", r"robot\.mass"),
    (MINIMAL + "controller: {Kv: 2}\n", r"controller\.Kv"),
    (MINIMAL + "simulation: {step: 1e-3}\n", r"simulation\.step"),
    (MINIMAL + "disturbance: {f: ['1'], theta: [1], seed: 0}\n",
     r"disturbance\.seed"),
    (MINIMAL + "verify: {cells: 100}\n", r"verify\.cells"),
    (MINIMAL + "output: {folder: x}\n", r"output\.folder"),
])
def test_unknown_keys_rejected_with_path(tmp_path, text, path):
    with pytest.raises(ConfigError, match=path):
        load_config(write(tmp_path, text))


def test_p_vector_validated(tmp_path):
    with pytest.raises(ConfigError, match=r"robot\.p"):
        load_config(write(tmp_path, "robot: {p: [2, -1, 1, 2, 1]}\n"))
    with pytest.raises(ConfigError, match=r"robot\.p"):
        load_config(write(tmp_path, "robot: {p: [2, 1, 1]}\n"))
    with pytest.raises(ConfigError, match=r"robot\.p\[2\]"):
        load_config(write(tmp_path, "robot: {p: [2, 1, 'x', 2, 1]}\n"))


def test_physical_constants_path(tmp_path):
    text = ("robot: {m1: 0.5, m2: 0.25, l1: 0.4, l2: 0.3, "
            "I1: 0.01, I2: 0.005, g: 9.8}\n")
    cfg = load_config(write(tmp_path, text))
    assert cfg.params.p1 == pytest.approx(0.01 + 0.5 * 0.16)
    assert cfg.params.p5 == pytest.approx(0.25 * 0.3 * 9.8)


def test_p_wins_over_physical_with_warning(tmp_path):
    text = "robot: {p: [2, 1, 1, 2, 1], m1: 0.5, m2: 0.25, l1: 0.4, l2: 0.3, I1: 0.01, I2: 0.005}\n"
    with pytest.warns(UserWarning, match="p wins"):
        cfg = load_config(write(tmp_path, text))
    assert cfg.params.p1 == 2.0


def test_gains_rejected_when_d4_not_positive(tmp_path):
    text = MINIMAL + "controller: {k1: 0.6}\n"
    with pytest.raises(ConfigError, match=r"d4\(0\)"):
        load_config(write(tmp_path, text))


def test_gain_value_errors_carry_path(tmp_path):
    with pytest.raises(ConfigError, match="controller"):
        load_config(write(tmp_path, MINIMAL + "controller: {k2: -5}\n"))
    with pytest.raises(ConfigError, match=r"controller\.kv"):
        load_config(write(tmp_path, MINIMAL + "controller: {kv: true}\n"))


def test_disturbance_parse_error_chained(tmp_path):
    text = MINIMAL + "disturbance: {f: ['sin(q3)'], theta: [1.0]}\n"
    with pytest.raises(ConfigError, match="q3") as excinfo:
        load_config(write(tmp_path, text))
    assert isinstance(excinfo.value.__cause__, ParseError)


def test_disturbance_theta_length(tmp_path):
    text = MINIMAL + "disturbance: {f: ['1', 'q1'], theta: [1.0]}\n"
    with pytest.raises(ConfigError, match=r"disturbance\.theta"):
        load_config(write(tmp_path, text))


def test_disturbance_f_must_be_strings(tmp_path):
    text = MINIMAL + "disturbance: {f: [1.0], theta: [1.0]}\n"
    with pytest.raises(ConfigError, match=r"disturbance\.f"):
        load_config(write(tmp_path, text))


def test_adaptive_requires_disturbance(tmp_path):
    text = MINIMAL + "adaptive: {gamma: 2.0}\n"
    with pytest.raises(ConfigError, match="adaptive"):
        load_config(write(tmp_path, text))


def test_adaptive_defaults_and_scalar_gamma(tmp_path):
    text = (MINIMAL +
            "disturbance: {f: ['1', 'q1'], theta: [0.5, -0.2]}\n"
            "adaptive: {gamma: 2.0}\n")
    cfg = load_config(write(tmp_path, text))
    assert np.array_equal(cfg.adaptive.theta_hat, [0.0, 0.0])
    assert np.allclose(cfg.adaptive.gamma, 2.0 * np.eye(2))
    assert cfg.adaptive_enabled is True


def test_adaptive_matrix_gamma(tmp_path):
    text = (MINIMAL +
            "disturbance: {f: ['1', 'q1'], theta: [0.5, -0.2]}\n"
            "adaptive: {gamma: [[2.0, 0.5], [0.5, 3.0]], theta_hat0: [0.1, 0.2]}\n")
    cfg = load_config(write(tmp_path, text))
    assert np.allclose(cfg.adaptive.gamma, [[2.0, 0.5], [0.5, 3.0]])
    assert np.array_equal(cfg.adaptive.theta_hat, [0.1, 0.2])


def test_adaptive_matrix_gamma_shape_checked(tmp_path):
    text = (MINIMAL +
            "disturbance: {f: ['1', 'q1'], theta: [0.5, -0.2]}\n"
            "adaptive: {gamma: [[2.0, 0.0]]}\n")
    with pytest.raises(ConfigError, match=r"adaptive\.gamma"):
        load_config(write(tmp_path, text))


def test_adaptive_gamma_not_pd_rejected(tmp_path):
    text = (MINIMAL +
            "disturbance: {f: ['1', 'q1'], theta: [0.5, -0.2]}\n"
            "adaptive: {gamma: [[1.0, 5.0], [5.0, 1.0]]}\n")
    with pytest.raises(ConfigError, match="adaptive"):
        load_config(write(tmp_path, text))


def test_adaptive_gamma_positive(tmp_path):
    text = (MINIMAL +
            "disturbance: {f: ['1'], theta: [0.5]}\n"
            "adaptive: {gamma: -1.0}\n")
    with pytest.raises(ConfigError, match=r"adaptive\.gamma"):
        load_config(write(tmp_path, text))


def test_theta_hat0_length_checked(tmp_path):
    text = (MINIMAL +
            "disturbance: {f: ['1', 'q1'], theta: [0.5, -0.2]}\n"
            "adaptive: {theta_hat0: [0.1]}\n")
    with pytest.raises(ConfigError, match=r"adaptive\.theta_hat0"):
        load_config(write(tmp_path, text))


@pytest.mark.parametrize("mode", ["disturbed_nominal", "disturbed_robust"])
def test_disturbed_modes_require_disturbance(tmp_path, mode):
    text = MINIMAL + f"simulation: {{mode: {mode}}}\n"
    with pytest.raises(ConfigError, match="requires a disturbance"):
        load_config(write(tmp_path, text))


def test_robust_requires_enabled(tmp_path):
    text = (MINIMAL +
            "simulation: {mode: disturbed_robust}\n"
            "disturbance: {f: ['1'], theta: [0.5]}\n"
            "adaptive: {enabled: false}\n")
    with pytest.raises(ConfigError, match="enabled"):
        load_config(write(tmp_path, text))


def test_unknown_mode(tmp_path):
    with pytest.raises(ConfigError, match=r"simulation\.mode"):
        load_config(write(tmp_path, MINIMAL + "simulation: {mode: free}\n"))


def test_bad_timestep(tmp_path):
    with pytest.raises(ConfigError, match="dt"):
        load_config(write(tmp_path, MINIMAL + "simulation: {dt: 0.0}\n"))
    with pytest.raises(ConfigError, match="dt"):
        load_config(write(tmp_path,
                          MINIMAL + "simulation: {dt: 0.5, t_end: 0.1}\n"))


def test_verify_options(tmp_path):
    text = MINIMAL + ("verify: {grid_points: 64, psi3_offset: 0.01, "
                      "derivatives: fd, seed: 3, "
                      "counterexample: {frak_k1: 2.0, b: 0.5}}\n")
    cfg = load_config(write(tmp_path, text))
    assert cfg.verify.grid_points == 64
    assert cfg.verify.psi3_offset == 0.01
    assert cfg.verify.derivatives == "fd"
    assert cfg.verify.seed == 3
    assert cfg.verify.counterexample.frak_k1 == 2.0
    assert cfg.verify.counterexample.frak_k2 == 1.0
    assert cfg.verify.counterexample.b == 0.5


def test_verify_derivatives_validated(tmp_path):
    with pytest.raises(ConfigError, match=r"verify\.derivatives"):
        load_config(write(tmp_path, MINIMAL + "verify: {derivatives: exact}\n"))


def test_verify_counterexample_positive(tmp_path):
    text = MINIMAL + "verify: {counterexample: {b: -1.0}}\n"
    with pytest.raises(ConfigError, match="must be > 0"):
        load_config(write(tmp_path, text))


def test_output_section(tmp_path):
    text = MINIMAL + "output: {dir: results, plots: false}\n"
    cfg = load_config(write(tmp_path, text))
    assert cfg.out_dir == "results" and cfg.plots is False


def test_scenario_roundtrip_runs(tmp_path):
    text = ("robot: {p: [2.0, 1.0, 1.0, 2.0, 1.0]}\n"
            "controller: {kappa: 0.5, kv: 2.0}\n"
            "simulation: {mode: disturbed_robust, q0: [0.1, 0.2], dt: 1e-3, t_end: 0.05}\n"
            "disturbance: {f: ['1', 'sin(q2)'], theta: [0.3, -0.1]}\n"
            "adaptive: {gamma: 2.0, theta_hat0: [0.05, 0.0]}\n")
    cfg = load_config(write(tmp_path, text))
    scenario = cfg.scenario()
    assert isinstance(scenario, Scenario)
    assert scenario.mode == "disturbed_robust"
    assert scenario.q0 == (0.1, 0.2)
    trace = run(scenario)
    assert trace.status == "ok"
    assert len(trace.t) == 51
    assert not np.array_equal(trace.theta_hat[-1], trace.theta_hat[0])
