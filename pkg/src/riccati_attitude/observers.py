"""Riccati velocity-aided attitude observers.

Two observers share the same estimate dynamics

    R_hat' = R_hat [Omega - sigma_R]x
    V_hat' = -[Omega]x V_hat + a_B + g R_hat^T e3 - sigma_V

and differ in the attitude-error chart used to build the linear
time-varying model ``(A, C)`` fed to the Riccati equation:

- ``Variant.LAMBDA_TILDE``: ``lambda = 2 q`` of ``R R_hat^T`` (inertial error),
  input ``u = [R_hat sigma_R; sigma_V]``.
- ``Variant.LAMBDA_BAR``: ``lambda = 2 q`` of ``R_hat^T R`` (body error),
  input ``u = [sigma_R; sigma_V]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .riccati import GainConfig, RiccatiState, correction_rate, cre_step, innovation
from .sensors import MeasurementFrame
from .so3 import E1, E2, E3, cross3, euler_zyx, exp_rotation, orthonormalize, projector, rotation_angle, skew
from .trajectory import GRAVITY, MAG_FIELD, TruthState


class Variant(enum.IntEnum):
    LAMBDA_TILDE = 1
    LAMBDA_BAR = 2

    @classmethod
    def parse(cls, value) -> Variant:
        if isinstance(value, Variant):
            return value
        text = str(value).strip().lower()
        aliases = {"1": cls.LAMBDA_TILDE, "tilde": cls.LAMBDA_TILDE, "2": cls.LAMBDA_BAR, "bar": cls.LAMBDA_BAR}
        if text not in aliases:
            raise ValueError(f"unknown observer variant {value!r}")
        return aliases[text]


@dataclass(frozen=True)
class LinearizedSystem:
    A: np.ndarray
    C: np.ndarray


def output_vector(R_hat, V_hat, m: MeasurementFrame, m_I=MAG_FIELD, mag_cross: bool = False) -> np.ndarray:
    """Residual ``[V1 - V1_hat, V2 - V2_hat, v3 - e3^T R_hat V_hat, R_hat m_B - m_I]``.

    With ``mag_cross`` the last block is ``(R_hat m_B) x m_I`` instead.
    """
    m_I = np.asarray(m_I, dtype=float)
    if abs(np.linalg.norm(m_I) - 1.0) > 1e-9:
        raise ValueError("m_I must be a unit vector")
    Rm = R_hat @ m.m_B
    mag = cross3(Rm, m_I) if mag_cross else Rm - m_I
    return np.concatenate(([m.V1 - V_hat[0], m.V2 - V_hat[1], m.v3 - E3 @ R_hat @ V_hat], mag))


def _c_matrix(att_v3: np.ndarray, R_hat: np.ndarray, mag_block: np.ndarray) -> np.ndarray:
    C = np.zeros((6, 6))
    C[0, 3:] = E1
    C[1, 3:] = E2
    C[2, :3] = att_v3
    C[2, 3:] = E3 @ R_hat
    C[3:, :3] = mag_block
    return C


def linearize_v1(R_hat, V_hat, omega, m_I=MAG_FIELD, g: float = GRAVITY, mag_cross: bool = False) -> LinearizedSystem:
    """Error model in the inertial-error chart (state ``[lambda_tilde; V_tilde]``)."""
    m_I = np.asarray(m_I, dtype=float)
    A = np.zeros((6, 6))
    A[3:, :3] = g * R_hat.T @ skew(E3)
    A[3:, 3:] = -skew(omega)
    mag_block = projector(m_I) if mag_cross else skew(m_I)
    C = _c_matrix(-E3 @ skew(R_hat @ V_hat), R_hat, mag_block)
    return LinearizedSystem(A, C)


def linearize_v2(R_hat, V_hat, omega, m_I=MAG_FIELD, g: float = GRAVITY) -> LinearizedSystem:
    """Error model in the body-error chart (state ``[lambda_bar; V_tilde]``)."""
    m_I = np.asarray(m_I, dtype=float)
    W = skew(omega)
    A = np.zeros((6, 6))
    A[:3, :3] = -W
    A[3:, :3] = g * skew(R_hat.T @ E3)
    A[3:, 3:] = -W
    C = _c_matrix(-E3 @ R_hat @ skew(V_hat), R_hat, skew(m_I) @ R_hat)
    return LinearizedSystem(A, C)


def linearize(variant: Variant, R_hat, V_hat, omega, m_I=MAG_FIELD, g: float = GRAVITY, mag_cross: bool = False):
    if variant == Variant.LAMBDA_TILDE:
        return linearize_v1(R_hat, V_hat, omega, m_I, g, mag_cross)
    if mag_cross:
        raise ValueError("the cross-product magnetometer residual is only defined for the lambda-tilde observer")
    return linearize_v2(R_hat, V_hat, omega, m_I, g)


@dataclass(frozen=True)
class ObserverConfig:
    variant: Variant
    gains: GainConfig
    m_I: np.ndarray = field(default_factory=lambda: MAG_FIELD.copy())
    g: float = GRAVITY
    use_magnetometer: bool = True
    mag_cross: bool = False
    # Apply the correction (and the CRE output term) only when fresh aiding data arrived.
    correct_on_fresh_only: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        m_I = np.asarray(self.m_I, dtype=float)
        object.__setattr__(self, "m_I", m_I / np.linalg.norm(m_I))
        if self.mag_cross and self.variant != Variant.LAMBDA_TILDE:
            raise ValueError("mag_cross requires the lambda-tilde observer")


@dataclass(frozen=True)
class ObserverState:
    R_hat: np.ndarray
    V_hat: np.ndarray
    riccati: RiccatiState
    variant: Variant


@dataclass(frozen=True)
class StepOutput:
    y: np.ndarray
    u: np.ndarray
    sigma_R: np.ndarray
    sigma_V: np.ndarray


def initial_state(cfg: ObserverConfig, R_hat, V_hat, t: float = 0.0) -> ObserverState:
    return ObserverState(
        R_hat=np.array(R_hat, dtype=float),
        V_hat=np.array(V_hat, dtype=float),
        riccati=RiccatiState(cfg.gains.P0.copy(), t),
        variant=cfg.variant,
    )


def _rotation_increments(w: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Rotation vectors over ``[0, dt/2]`` and ``[0, dt]`` for rates sampled at 0, dt/2, dt.

    Quadratic interpolation of the rate plus the second-order coning term.
    """
    w0, w1, w2 = w
    half = dt / 24.0 * (5.0 * w0 + 8.0 * w1 - w2) + (dt / 2.0) ** 2 / 12.0 * cross3(w0, w1)
    full = dt / 6.0 * (w0 + 4.0 * w1 + w2) + dt**2 / 12.0 * cross3(w0, w2)
    return half, full


def propagate(R_hat, V_hat, omega_path, acc_path, sigma_R, sigma_V, dt: float, g: float = GRAVITY):
    """Integrate the estimate dynamics over one step with frozen innovation terms.

    ``omega_path``/``acc_path`` hold IMU readings at ``t, t+dt/2, t+dt`` (rows).
    Constant rows reproduce a zero-order hold, for which the attitude update
    is the exact ``R_hat expm((Omega - sigma_R) dt)``.
    """
    w = omega_path - sigma_R
    half, full = _rotation_increments(w, dt)
    R_mid = R_hat @ exp_rotation(half)
    R_end = R_hat @ exp_rotation(full)

    def f(omega, acc, R, V):
        return -cross3(omega, V) + acc + g * (R.T @ E3) - sigma_V

    k1 = f(omega_path[0], acc_path[0], R_hat, V_hat)
    k2 = f(omega_path[1], acc_path[1], R_mid, V_hat + 0.5 * dt * k1)
    k3 = f(omega_path[1], acc_path[1], R_mid, V_hat + 0.5 * dt * k2)
    k4 = f(omega_path[2], acc_path[2], R_end, V_hat + dt * k3)
    V_new = V_hat + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return orthonormalize(R_end), V_new


# Largest dt * (output-injection rate) accepted for one frozen-innovation sub-step.
MAX_INJECTION_STEP = 0.5


def _quadratic_path(path: np.ndarray, dt: float, taus) -> np.ndarray:
    """Evaluate the quadratic through samples at ``0, dt/2, dt`` at times ``taus``."""
    s = np.asarray(taus, dtype=float)[:, None] / dt
    l0 = 2.0 * (s - 0.5) * (s - 1.0)
    l1 = -4.0 * s * (s - 1.0)
    l2 = 2.0 * s * (s - 0.5)
    return l0 * path[0] + l1 * path[1] + l2 * path[2]


def _aiding_at(m: MeasurementFrame, tau: float, dt: float) -> MeasurementFrame:
    """Aiding readings at ``t + tau`` interpolated from ``m.aiding_path``; held otherwise."""
    if m.aiding_path is None or tau == 0.0:
        return m
    a = _quadratic_path(m.aiding_path, dt, (tau,))[0]
    return replace(m, V1=a[0], V2=a[1], v3=a[2], m_B=a[3:] / np.linalg.norm(a[3:]))


def _reduce(C, Q, y, cfg: ObserverConfig):
    if cfg.use_magnetometer:
        return C, Q, y
    return C[:3], Q[:3, :3], y[:3]


def injection_substeps(st: ObserverState, m: MeasurementFrame, cfg: ObserverConfig, dt: float) -> int:
    """Sub-steps needed so that ``h * k * rho(P C^T Q C) <= MAX_INJECTION_STEP``."""
    lin = linearize(cfg.variant, st.R_hat, st.V_hat, m.omega, cfg.m_I, cfg.g, cfg.mag_cross)
    C, Q, _ = _reduce(lin.C, cfg.gains.Q, np.zeros(6), cfg)
    rate = cfg.gains.gain(st.riccati.t) * correction_rate(st.riccati.P, C, Q)
    return max(1, int(np.ceil(dt * rate / MAX_INJECTION_STEP)))


def _substep(st: ObserverState, m: MeasurementFrame, cfg: ObserverConfig, h: float, omega_path, acc_path):
    R_hat, V_hat, P = st.R_hat, st.V_hat, st.riccati.P
    t = st.riccati.t
    lin = linearize(cfg.variant, R_hat, V_hat, omega_path[0], cfg.m_I, cfg.g, cfg.mag_cross)
    y = output_vector(R_hat, V_hat, m, cfg.m_I, cfg.mag_cross)
    C, Q, y = _reduce(lin.C, cfg.gains.Q, y, cfg)

    if m.fresh_aiding or not cfg.correct_on_fresh_only:
        u = innovation(P, C, Q, cfg.gains.gain(t), y)
    else:
        u = np.zeros(6)
        Q = np.zeros_like(Q)
    sigma_R = R_hat.T @ u[:3] if cfg.variant == Variant.LAMBDA_TILDE else u[:3]
    sigma_V = u[3:]

    R_new, V_new = propagate(R_hat, V_hat, omega_path, acc_path, sigma_R, sigma_V, h, cfg.g)
    P_new = cre_step(P, lin.A, C, Q, cfg.gains.S, h, t=t)
    new = replace(st, R_hat=R_new, V_hat=V_new, riccati=RiccatiState(P_new, t + h))
    return new, StepOutput(y, u, sigma_R, sigma_V)


def observer_step(st: ObserverState, m: MeasurementFrame, cfg: ObserverConfig, dt: float, substeps: int | None = None):
    """Advance the observer by ``dt`` using measurement frame ``m``.

    The residual is recomputed on every sub-step against the held aiding
    measurements; IMU readings are interpolated from ``m.omega_path`` and
    ``m.acc_path`` when present, held otherwise.  ``substeps=None`` splits
    the step only while the output injection is too stiff for ``dt``.

    Returns the new state and the residual/innovation terms at the start
    of the step.
    """
    if m.omega_path is not None:
        omega_path, acc_path = m.omega_path, m.acc_path
    else:
        omega_path = np.tile(m.omega, (3, 1))
        acc_path = np.tile(m.acc, (3, 1))
    n = injection_substeps(st, m, cfg, dt) if substeps is None else int(substeps)
    if n == 1:
        return _substep(st, m, cfg, dt, omega_path, acc_path)

    h = dt / n
    first = None
    for i in range(n):
        taus = (i * h, (i + 0.5) * h, (i + 1) * h)
        st, out = _substep(
            st, _aiding_at(m, i * h, dt), cfg, h, _quadratic_path(omega_path, dt, taus), _quadratic_path(acc_path, dt, taus)
        )
        first = first or out
    return st, first


@dataclass(frozen=True)
class ErrorMetrics:
    attitude_error: float
    V_err: np.ndarray
    euler_err: np.ndarray

    @property
    def velocity_error(self) -> float:
        return float(np.linalg.norm(self.V_err))


def _wrap(a):
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


def error_metrics(truth: TruthState, R_hat, V_hat) -> ErrorMetrics:
    e_true = np.array(euler_zyx(truth.R)[:3])
    e_hat = np.array(euler_zyx(R_hat)[:3])
    return ErrorMetrics(
        attitude_error=rotation_angle(truth.R @ R_hat.T),
        V_err=truth.V - V_hat,
        euler_err=_wrap(e_true - e_hat),
    )


def estimate_from_errors(truth: TruthState, R_err, V_err) -> tuple[np.ndarray, np.ndarray]:
    """Initial estimate given ``R_err = R R_hat^T`` and ``V_err = V - V_hat``."""
    return R_err.T @ truth.R, truth.V - np.asarray(V_err, dtype=float)
