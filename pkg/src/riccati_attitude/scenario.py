"""Scenario configuration: INI files, a safe expression language, and built-in presets.

Values may be arithmetic expressions over ``pi``, ``sqrt``, ``sin``, ``cos``,
``deg`` (degrees to radians), ``I3`` and ``diag``; vectors are comma
separated.  Example::

    [gains]
    P0 = diag(2*I3, 20*I3)
    [init]
    V_err = -5, 5, -5
    q_err = cos(pi/2), sin(pi/2), 0, 0
"""

from __future__ import annotations

import ast
import configparser
import hashlib
import math
import operator
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .observability import ObservabilityConfig
from .observers import Variant
from .riccati import GainConfig
from .sensors import SensorConfig
from .so3 import UnitQuaternion
from .trajectory import (
    ALPHA,
    CIRCLE_RADIUS,
    GRAVITY,
    MAG_FIELD,
    AngleProfile,
    EulerAttitude,
    HarmonicVelocity,
    Trajectory,
    circular_velocity,
)


class ConfigError(ValueError):
    """Invalid scenario configuration, with the offending location when known."""

    def __init__(self, message: str, section: str | None = None, key: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if section is not None:
            where.append(f"[{section}]" + (f" {key}" if key else ""))
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.section, self.key, self.line = section, key, line


# --------------------------------------------------------------------------
# expression evaluation

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _diag(*blocks):
    mats = [np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks]
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n))
    i = 0
    for m in mats:
        k = m.shape[0]
        out[i : i + k, i : i + k] = m if m.shape == (k, k) else np.diag(m.ravel())
        i += k
    return out


_NAMES = {"pi": math.pi, "e": math.e, "g": GRAVITY, "alpha": ALPHA, "I3": np.eye(3)}
_FUNCS = {
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "deg": np.deg2rad,
    "diag": _diag,
    "eye": lambda n: np.eye(int(n)),
}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        return _UNOPS[type(node.op)](_eval(node.operand))
    if isinstance(node, (ast.Tuple, ast.List)):
        return np.array([_eval(e) for e in node.elts], dtype=float)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords:
        return _FUNCS[node.func.id](*[_eval(a) for a in node.args])
    raise ValueError(f"unsupported expression element {ast.dump(node)[:40]}")


def evaluate(text: str):
    """Evaluate an arithmetic expression; comma-separated input yields an array."""
    try:
        return _eval(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {text!r}") from exc


# --------------------------------------------------------------------------
# scenario types


@dataclass(frozen=True)
class InitSpec:
    """Initial estimation errors: ``V_err = V - V_hat`` and ``R R_hat^T`` as a quaternion."""

    V_err: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q_err: UnitQuaternion = field(default_factory=lambda: UnitQuaternion(1.0, np.zeros(3)))


@dataclass(frozen=True)
class Checks:
    """Scenario assertions; a ``None`` threshold disables the check."""

    converge_by: float | None = None
    att_threshold_deg: float = 1.0
    vel_threshold: float = 0.05
    monotone_after: float | None = None
    monotone_block: float = 5.0
    rms_from: float | None = None
    rms_att_deg: float = 5.0
    rms_vel: float = 0.5
    equilibrium_tol: float | None = None
    max_runtime: float | None = None
    expect_uniform: bool | None = None
    expect_cases: tuple = ()
    expect_excitation: bool | None = None
    expect_singular_ablation: bool | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    horizon: float
    dt: float
    trajectory: Trajectory
    sensors: SensorConfig
    gains: dict
    init: InitSpec
    variants: tuple = (Variant.LAMBDA_TILDE, Variant.LAMBDA_BAR)
    use_magnetometer: bool = True
    run_observers: bool = True
    observability: bool = False
    ablate_mag: bool = False
    obs: ObservabilityConfig = field(default_factory=ObservabilityConfig)
    checks: Checks = field(default_factory=Checks)
    out_dir: str = "out"
    source: str = ""

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive", "scenario", "dt")
        if self.horizon < 10 * self.dt:
            raise ConfigError(f"horizon {self.horizon:g} s shorter than 10*dt", "scenario", "horizon")
        ratio = 1.0 / (self.sensors.imu_rate * self.dt)
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError("IMU period must be an integer multiple of dt", "sensors", "imu_rate")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.source.encode()).hexdigest()


# --------------------------------------------------------------------------
# parsing

_SECTIONS = ("scenario", "trajectory", "sensors", "gains", "gains.1", "gains.2", "init", "observability", "checks")


def _locate(text: str, section: str, key: str | None) -> int | None:
    cur = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]", line)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return i
            continue
        if cur == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", line):
            return i
    return None


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, text: str):
        self.cp, self.text = cp, text
        self.used: set = set()

    def error(self, msg, section, key=None):
        return ConfigError(msg, section, key, _locate(self.text, section, key))

    def has(self, section, key):
        return self.cp.has_option(section, key)

    def raw(self, section, key, default=None):
        if not self.cp.has_option(section, key):
            return default
        self.used.add((section, key))
        return self.cp.get(section, key)

    def num(self, section, key, default=None, positive=False, allow_none=False):
        raw = self.raw(section, key)
        if raw is None or (allow_none and raw.strip().lower() == "none"):
            return default
        try:
            val = float(evaluate(raw))
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise self.error(f"expected a number, got {raw!r} ({exc})", section, key) from None
        if not math.isfinite(val) or (positive and val <= 0):
            raise self.error(f"expected a positive finite number, got {raw!r}", section, key)
        return val

    def integer(self, section, key, default=None):
        val = self.num(section, key)
        if val is None:
            return default
        if val != int(val):
            raise self.error("expected an integer", section, key)
        return int(val)

    def flag(self, section, key, default=None):
        raw = self.raw(section, key)
        if raw is None:
            return default
        try:
            return self.cp.BOOLEAN_STATES[raw.strip().lower()]
        except KeyError:
            raise self.error(f"expected a boolean, got {raw!r}", section, key) from None

    def array(self, section, key, shape, default=None):
        raw = self.raw(section, key)
        if raw is None:
            return default
        try:
            val = np.asarray(evaluate(raw), dtype=float)
            if val.ndim == 0 and len(shape) == 2:
                val = val * np.eye(shape[0])
            val = val.reshape(shape)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise self.error(f"expected shape {shape}, got {raw!r} ({exc})", section, key) from None
        return val

    def text_value(self, section, key, default=None):
        raw = self.raw(section, key)
        return default if raw is None else raw.strip()


def _angle_profile(r: _Reader, name: str) -> AngleProfile:
    sec = "trajectory"
    return AngleProfile(**{
        f: r.num(sec, f"{name}_{f}", 0.0) for f in ("amplitude", "freq", "phase", "offset", "rate", "approach", "tau")
    })


def _trajectory(r: _Reader) -> Trajectory:
    sec = "trajectory"
    g = r.num(sec, "g", GRAVITY, positive=True)
    kind = r.text_value(sec, "velocity", "circular")
    if kind == "circular":
        vel = circular_velocity(r.num(sec, "radius", CIRCLE_RADIUS), r.num(sec, "circle_rate", ALPHA))
    elif kind == "harmonic":
        vec = lambda k: tuple(r.array(sec, k, (3,), np.zeros(3)))  # noqa: E731
        vel = HarmonicVelocity(vec("v_bias"), vec("v_amplitude"), vec("v_freq"), vec("v_phase"))
    else:
        raise r.error(f"unknown velocity profile {kind!r} (circular, harmonic)", sec, "velocity")
    att = EulerAttitude(*(_angle_profile(r, n) for n in ("roll", "pitch", "yaw")))
    return Trajectory(vel, att, g)


def _sensors(r: _Reader, seed=None, no_noise=False) -> SensorConfig:
    sec = "sensors"
    d = SensorConfig()
    kw = dict(
        imu_rate=r.num(sec, "imu_rate", d.imu_rate, positive=True),
        aiding_rate=r.num(sec, "aiding_rate", d.aiding_rate, positive=True),
        sigma_omega=r.num(sec, "sigma_omega", d.sigma_omega),
        sigma_acc=r.num(sec, "sigma_acc", d.sigma_acc),
        sigma_v12=r.num(sec, "sigma_v12", d.sigma_v12),
        sigma_v3=r.num(sec, "sigma_v3", d.sigma_v3),
        sigma_mag=r.num(sec, "sigma_mag", d.sigma_mag),
        seed=r.integer(sec, "seed", d.seed),
        noise_enabled=r.flag(sec, "noise", d.noise_enabled),
        ideal_imu=r.flag(sec, "ideal_imu", d.ideal_imu),
        mag_field=tuple(r.array(sec, "mag_field", (3,), MAG_FIELD)),
    )
    if seed is not None:
        kw["seed"] = int(seed)
    if no_noise:
        kw["noise_enabled"] = False
    try:
        return SensorConfig(**kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise r.error(str(exc), sec) from None


def _gain(r: _Reader, sec: str, base: GainConfig | None) -> GainConfig:
    base = base or GainConfig.default_tuning()
    try:
        return GainConfig(
            P0=r.array(sec, "P0", (6, 6), base.P0),
            Q=r.array(sec, "Q", (6, 6), base.Q),
            S=r.array(sec, "S", (6, 6), base.S),
            k=r.num(sec, "k", base.k),
            k_max=r.num(sec, "k_max", base.k_max, positive=True),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise r.error(str(exc), sec) from None


def _variants(r: _Reader, override=None):
    raw = override if override is not None else r.text_value("scenario", "variants", "both")
    raw = str(raw).strip().lower()
    if raw == "both":
        return (Variant.LAMBDA_TILDE, Variant.LAMBDA_BAR)
    try:
        return tuple(Variant.parse(v.strip()) for v in raw.split(","))
    except ValueError as exc:
        raise r.error(str(exc), "scenario", "variants") from None


def _init(r: _Reader) -> InitSpec:
    sec = "init"
    V_err = r.array(sec, "V_err", (3,), np.zeros(3))
    q = r.array(sec, "q_err", (4,), None)
    if q is None:
        axis = r.array(sec, "axis", (3,), np.array([1.0, 0.0, 0.0]))
        angle = r.num(sec, "angle", 0.0)
        if np.linalg.norm(axis) == 0:
            raise r.error("axis must be non-zero", sec, "axis")
        q_err = UnitQuaternion.from_axis_angle(axis, angle)
    else:
        if abs(np.linalg.norm(q) - 1.0) > 1e-6:
            raise r.error(f"q_err must be a unit quaternion (|q|={np.linalg.norm(q):.6g})", sec, "q_err")
        q_err = UnitQuaternion(float(q[0]), q[1:])
    return InitSpec(V_err, q_err)


def _obs(r: _Reader, horizon: float, dt: float) -> ObservabilityConfig:
    sec = "observability"
    d = ObservabilityConfig()
    try:
        return ObservabilityConfig(
            delta=r.num(sec, "delta", d.delta, positive=True),
            mu=r.num(sec, "mu", d.mu, positive=True),
            rho=r.num(sec, "rho", d.rho, positive=True),
            v_max=r.num(sec, "v_max", None, allow_none=True),
            omega_max=r.num(sec, "omega_max", None, allow_none=True),
            delta_bar=r.num(sec, "delta_bar", None, allow_none=True),
            rho_bar=r.num(sec, "rho_bar", d.rho_bar, positive=True),
            horizon=horizon,
            dt=r.num(sec, "dt", dt, positive=True),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise r.error(str(exc), sec) from None


def _checks(r: _Reader) -> Checks:
    sec = "checks"
    d = Checks()
    cases = r.text_value(sec, "expect_cases", "")
    known = {"vertical", "pure_translation", "slow_motion", "none"}
    cases = tuple(c.strip() for c in cases.split(",") if c.strip())
    bad = [c for c in cases if c not in known]
    if bad:
        raise r.error(f"unknown case(s) {bad}; expected one of {sorted(known)}", sec, "expect_cases")
    return Checks(
        converge_by=r.num(sec, "converge_by", None, allow_none=True),
        att_threshold_deg=r.num(sec, "att_threshold_deg", d.att_threshold_deg, positive=True),
        vel_threshold=r.num(sec, "vel_threshold", d.vel_threshold, positive=True),
        monotone_after=r.num(sec, "monotone_after", None, allow_none=True),
        monotone_block=r.num(sec, "monotone_block", d.monotone_block, positive=True),
        rms_from=r.num(sec, "rms_from", None, allow_none=True),
        rms_att_deg=r.num(sec, "rms_att_deg", d.rms_att_deg, positive=True),
        rms_vel=r.num(sec, "rms_vel", d.rms_vel, positive=True),
        equilibrium_tol=r.num(sec, "equilibrium_tol", None, allow_none=True),
        max_runtime=r.num(sec, "max_runtime", None, allow_none=True),
        expect_uniform=r.flag(sec, "expect_uniform", None),
        expect_cases=cases,
        expect_excitation=r.flag(sec, "expect_excitation", None),
        expect_singular_ablation=r.flag(sec, "expect_singular_ablation", None),
    )


def parse_scenario(
    text: str,
    *,
    seed: int | None = None,
    no_noise: bool = False,
    variant: str | None = None,
    ablate_mag: bool | None = None,
    out_dir: str | None = None,
    source_name: str = "<string>",
) -> Scenario:
    """Build a :class:`Scenario` from INI text; command-line overrides are keyword-only."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source_name)
    except configparser.ParsingError as exc:
        line, content = exc.errors[0]
        raise ConfigError(f"cannot parse {content.strip()!r} (expected key = value)", line=line) from None
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], line=line) from None
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section (expected one of {', '.join(_SECTIONS)})", sec, line=_locate(text, sec, None))
    r = _Reader(cp, text)

    sec = "scenario"
    name = r.text_value(sec, "name", "custom")
    horizon = r.num(sec, "horizon", 60.0)
    dt = r.num(sec, "dt", 0.02, positive=True)
    if horizon <= 0:
        raise r.error("horizon must be positive", sec, "horizon")
    if horizon < 10 * dt:
        raise r.error(f"horizon {horizon:g} s shorter than 10*dt = {10 * dt:g} s", sec, "horizon")

    base = _gain(r, "gains", None)
    gains = {v: _gain(r, f"gains.{int(v)}", base) if cp.has_section(f"gains.{int(v)}") else base for v in Variant}
    ablate = r.flag(sec, "ablate_mag", False) if ablate_mag is None else ablate_mag
    observability = r.flag(sec, "observability", False) or bool(ablate_mag)

    scn = Scenario(
        name=name,
        horizon=horizon,
        dt=dt,
        trajectory=_trajectory(r),
        sensors=_sensors(r, seed, no_noise),
        gains=gains,
        init=_init(r),
        variants=_variants(r, variant),
        use_magnetometer=r.flag(sec, "use_magnetometer", True),
        run_observers=r.flag(sec, "run_observers", True),
        observability=observability,
        ablate_mag=ablate,
        obs=_obs(r, horizon, dt),
        checks=_checks(r),
        out_dir=out_dir or r.text_value(sec, "out_dir", "out"),
        source=_canonical(cp, seed, no_noise, variant, ablate_mag),
    )
    unused = [f"[{s}] {k}" for s in cp.sections() for k in cp[s] if (s, k) not in r.used]
    if unused:
        s, k = unused[0][1:].split("] ")
        raise ConfigError(f"unknown key ({len(unused)} unrecognised: {', '.join(unused)})", s, k, _locate(text, s, k))
    return scn


def _canonical(cp, seed, no_noise, variant, ablate) -> str:
    """Normalised config text plus overrides; hashed into every output header."""
    lines = []
    for sec in sorted(cp.sections()):
        lines.append(f"[{sec}]")
        lines.extend(f"{k}={' '.join(cp[sec][k].split())}" for k in sorted(cp[sec]))
    lines.append(f"#overrides seed={seed} no_noise={no_noise} variant={variant} ablate_mag={ablate}")
    return "\n".join(lines)


def load_scenario(path, **overrides) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc.strerror}") from None
    return parse_scenario(text, source_name=str(path), **overrides)


# --------------------------------------------------------------------------
# presets

_SIM_COMMON = """
[trajectory]
velocity = circular
radius = 15
circle_rate = 2/sqrt(15)
roll_amplitude = deg(30)
roll_freq = 0.7
pitch_amplitude = deg(30)
pitch_freq = 0.5
pitch_phase = pi/2
yaw_offset = pi/2
yaw_rate = 2/sqrt(15)

[gains]
P0 = diag(2*I3, 20*I3)
Q = diag(25*I3, 100*I3)
S = diag(0.01*I3, I3)
k = 1

[init]
V_err = -5, 5, -5
q_err = cos(pi/2), sin(pi/2), 0, 0
"""

PRESETS: dict[str, str] = {
    "sim1": """
[scenario]
name = sim1
horizon = 60
dt = 0.02

[sensors]
noise = false
ideal_imu = true
imu_rate = 50
aiding_rate = 50

[checks]
converge_by = 40
att_threshold_deg = 1
vel_threshold = 0.05
monotone_after = 5
max_runtime = 5
"""
    + _SIM_COMMON,
    "sim2": """
[scenario]
name = sim2
horizon = 60
dt = 0.02

[sensors]
noise = true
imu_rate = 50
aiding_rate = 20
sigma_omega = 0.1
sigma_acc = 1
sigma_v12 = 0.2
sigma_v3 = 0.2
sigma_mag = 0.1
seed = 1

[checks]
rms_from = 40
rms_att_deg = 5
rms_vel = 0.5
max_runtime = 5
"""
    + _SIM_COMMON,
    "equilibrium": """
[scenario]
name = equilibrium
horizon = 10
dt = 0.02

[sensors]
noise = false
ideal_imu = true
aiding_rate = 50

[init]
V_err = 0, 0, 0
q_err = 1, 0, 0, 0

[checks]
equilibrium_tol = 1e-6
"""
    + _SIM_COMMON.split("[init]")[0],
    "default-observability": """
[scenario]
name = default-observability
horizon = 60
run_observers = false
observability = true

[observability]
delta_bar = 2*pi/alpha

[checks]
expect_uniform = true
expect_excitation = true
"""
    + _SIM_COMMON.split("[gains]")[0],
    "no-mag": """
[scenario]
name = no-mag
horizon = 60
use_magnetometer = false
observability = true
ablate_mag = true

[sensors]
noise = false
ideal_imu = true
aiding_rate = 50

[checks]
expect_singular_ablation = true
"""
    + _SIM_COMMON,
    "vertical": """
[scenario]
name = vertical
horizon = 30
run_observers = false
observability = true

[trajectory]
velocity = harmonic
v_amplitude = 0, 0, 1
v_freq = 0, 0, 1
roll_amplitude = deg(40)
roll_freq = 0.8
pitch_amplitude = deg(20)
pitch_freq = 0.5
yaw_rate = 0.3

[checks]
expect_cases = vertical
""",
    "pure-translation": """
[scenario]
name = pure-translation
horizon = 30
run_observers = false
observability = true

[trajectory]
velocity = circular
roll_offset = deg(30)
pitch_offset = deg(20)
yaw_offset = deg(45)

[checks]
expect_cases = pure_translation
expect_uniform = true
""",
    "slow-motion": """
[scenario]
name = slow-motion
horizon = 30
run_observers = false
observability = true

[trajectory]
; speed 1.5 m/s, |Omega| = 0.6 rad/s: product 0.9
velocity = circular
radius = 5
circle_rate = 0.3
roll_offset = deg(30)
pitch_offset = deg(20)
yaw_rate = 0.6

[observability]
v_max = 1.5
omega_max = 0.6

[checks]
expect_cases = slow_motion
""",
    "fast-motion": """
[scenario]
name = fast-motion
horizon = 30
run_observers = false
observability = true

[trajectory]
; product 1.2: outside the slow-motion bound
velocity = circular
radius = 5
circle_rate = 0.3
roll_offset = deg(30)
pitch_offset = deg(20)
yaw_rate = 0.8

[observability]
v_max = 1.5
omega_max = 0.8

[checks]
expect_cases = none
""",
    "constant-velocity": """
[scenario]
name = constant-velocity
horizon = 60
run_observers = false
observability = true

[trajectory]
velocity = harmonic
v_bias = 1, 0, 0
roll_amplitude = deg(20)
roll_freq = 0.5
yaw_rate = 0.3

[checks]
expect_cases = slow_motion
expect_excitation = true
""",
    "crossing-r33": """
[scenario]
name = crossing-r33
horizon = 60
run_observers = false
observability = true

[trajectory]
; R33 = cos(roll) touches zero at the roll extremes
velocity = circular
roll_amplitude = pi/2
roll_freq = 1.5

[observability]
rho = 0.5
delta_bar = 2*pi/alpha

[checks]
expect_uniform = true
""",
}


def preset(name: str, **overrides) -> Scenario:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return parse_scenario(PRESETS[name], source_name=f"preset:{name}", **overrides)
