import numpy as np
import pytest

from riccati_attitude.observers import Variant
from riccati_attitude.scenario import PRESETS, ConfigError, evaluate, load_scenario, parse_scenario, preset

MINIMAL = """
[scenario]
name = tiny
horizon = 1
dt = 0.02
"""


def test_expression_language():
    assert evaluate("2/sqrt(15)") == pytest.approx(0.5163977794943222)
    assert evaluate("deg(180)") == pytest.approx(np.pi)
    assert np.allclose(evaluate("-5, 5, -5"), [-5, 5, -5])
    assert np.allclose(evaluate("diag(2*I3, 20*I3)"), np.diag([2, 2, 2, 20, 20, 20]))


@pytest.mark.parametrize("bad", ["__import__('os')", "open('x')", "(1).real", "[x for x in ()]", "1 if 1 else 2"])
def test_expression_language_rejects_code(bad):
    with pytest.raises(ValueError):
        evaluate(bad)


def test_minimal_scenario_defaults():
    scn = parse_scenario(MINIMAL)
    assert scn.name == "tiny" and scn.n_steps == 50
    assert scn.variants == (Variant.LAMBDA_TILDE, Variant.LAMBDA_BAR)
    assert np.allclose(scn.gains[Variant.LAMBDA_TILDE].Q, np.diag([25.0] * 3 + [100.0] * 3))


def test_sim1_preset_matches_published_setup():
    scn = preset("sim1")
    g = scn.gains[Variant.LAMBDA_TILDE]
    assert np.allclose(np.diag(g.P0), [2] * 3 + [20] * 3)
    assert np.allclose(np.diag(g.S), [0.01] * 3 + [1] * 3)
    assert np.allclose(scn.init.V_err, [-5, 5, -5])
    assert scn.init.q_err.q0 == pytest.approx(0.0, abs=1e-15) and np.allclose(scn.init.q_err.q, [1, 0, 0])
    assert not scn.sensors.noise_enabled


def test_sim2_preset_rates_and_noise():
    s = preset("sim2").sensors
    assert (s.imu_rate, s.aiding_rate) == (50.0, 20.0)
    assert (s.sigma_omega, s.sigma_acc, s.sigma_v12, s.sigma_v3, s.sigma_mag) == (0.1, 1.0, 0.2, 0.2, 0.1)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_parses(name):
    assert preset(name).name == name


def test_per_variant_gain_override():
    scn = parse_scenario(MINIMAL + "\n[gains.2]\nk = 2\n")
    assert scn.gains[Variant.LAMBDA_BAR].k == 2.0 and scn.gains[Variant.LAMBDA_TILDE].k == 1.0


def test_overrides():
    scn = preset("sim2", seed=42, no_noise=True, variant="2", out_dir="/tmp/x")
    assert scn.sensors.seed == 42 and not scn.sensors.noise_enabled
    assert scn.variants == (Variant.LAMBDA_BAR,) and scn.out_dir == "/tmp/x"
    assert scn.config_hash != preset("sim2").config_hash


def test_config_hash_ignores_formatting():
    a = parse_scenario(MINIMAL)
    b = parse_scenario(MINIMAL.replace("horizon = 1", "horizon   =   1   ; comment"))
    assert a.config_hash == b.config_hash


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ("[scenario]\nhorizon = 0\n", 2, "horizon"),
        ("[scenario]\nhorizon = 0.1\ndt = 0.02\n", 2, "10*dt"),
        ("[scenario]\nhorizon = 10\n[sensors]\nsigma_acc = abc\n", 4, "sigma_acc"),
        ("[scenario]\nhorizon = 10\n[gains]\nQ = 1, 2\n", 4, "Q"),
        ("[scenario]\nhorizon = 10\n[init]\nq_err = 1, 1, 0, 0\n", 4, "unit quaternion"),
        ("[scenario]\nhorizon = 10\nhorizn = 3\n", 3, "unknown key"),
        ("[scenario]\nhorizon = 10\n[bogus]\n", 3, "unknown section"),
        ("[scenario]\nhorizon = 10\n[trajectory]\nvelocity = spiral\n", 4, "spiral"),
        ("[scenario]\nhorizon = 10\n[checks]\nexpect_cases = sideways\n", 4, "sideways"),
    ],
)
def test_config_errors_report_location(text, line, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_scenario(text)
    assert exc.value.line == line
    assert fragment in str(exc.value)


def test_malformed_file_reports_line(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[scenario]\nhorizon = 10\nthis line has no separator\n")
    with pytest.raises(ConfigError) as exc:
        load_scenario(p)
    assert exc.value.line == 3


def test_missing_file():
    with pytest.raises(ConfigError):
        load_scenario("/nonexistent/scenario.ini")


def test_dt_must_divide_imu_period():
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL.replace("dt = 0.02", "dt = 0.015"))
