"""Multi-rate sensor simulation with zero-order hold.

IMU channels (gyro, accelerometer) are refreshed at ``imu_rate``; the aiding
channels (``V1``, ``V2``, ``v3``, magnetometer) at ``aiding_rate``.  Between
refreshes each channel holds its latest sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .trajectory import MAG_FIELD, Trajectory, TruthState


@dataclass(frozen=True)
class SensorConfig:
    imu_rate: float = 50.0
    aiding_rate: float = 20.0
    sigma_omega: float = 0.1
    sigma_acc: float = 1.0
    sigma_v12: float = 0.2
    sigma_v3: float = 0.2
    sigma_mag: float = 0.1
    seed: int = 0
    noise_enabled: bool = True
    # Ideal mode: every channel is read at each integration stage (t, t+dt/2,
    # t+dt), emulating continuous-time sensors; the rates are then only used
    # for the freshness flags.  Used for the noise-free runs.
    ideal_imu: bool = False
    mag_field: tuple = tuple(MAG_FIELD)

    def __post_init__(self):
        if self.imu_rate <= 0 or self.aiding_rate <= 0:
            raise ValueError("sensor rates must be positive")
        sigmas = (self.sigma_omega, self.sigma_acc, self.sigma_v12, self.sigma_v3, self.sigma_mag)
        if any(s < 0 for s in sigmas):
            raise ValueError("noise standard deviations must be non-negative")
        m = np.asarray(self.mag_field, dtype=float)
        if abs(np.linalg.norm(m) - 1.0) > 1e-3:
            raise ValueError(f"mag_field must be (nearly) unit length, got |m|={np.linalg.norm(m):.6f}")

    @property
    def m_I(self) -> np.ndarray:
        m = np.asarray(self.mag_field, dtype=float)
        return m / np.linalg.norm(m)


@dataclass(frozen=True)
class ImuSample:
    omega: np.ndarray
    acc: np.ndarray


@dataclass(frozen=True)
class AidingSample:
    V1: float
    V2: float
    v3: float
    m_B: np.ndarray


@dataclass(frozen=True)
class MeasurementFrame:
    t: float
    omega: np.ndarray
    acc: np.ndarray
    V1: float
    V2: float
    v3: float
    m_B: np.ndarray
    fresh_imu: bool = True
    fresh_aiding: bool = True
    # Optional readings at (t, t + dt/2, t + dt), one row each; aiding rows
    # are (V1, V2, v3, m_B).
    omega_path: np.ndarray | None = None
    acc_path: np.ndarray | None = None
    aiding_path: np.ndarray | None = None


def sample_imu(state: TruthState, cfg: SensorConfig, rng: np.random.Generator | None) -> ImuSample:
    omega = state.omega.copy()
    acc = state.a_B.copy()
    if cfg.noise_enabled and rng is not None:
        omega = omega + cfg.sigma_omega * rng.standard_normal(3)
        acc = acc + cfg.sigma_acc * rng.standard_normal(3)
    return ImuSample(omega, acc)


def sample_aiding(state: TruthState, cfg: SensorConfig, rng: np.random.Generator | None) -> AidingSample:
    V1, V2 = float(state.V[0]), float(state.V[1])
    v3 = float(state.v[2])
    m_B = state.R.T @ cfg.m_I
    if cfg.noise_enabled and rng is not None:
        V1 += cfg.sigma_v12 * rng.standard_normal()
        V2 += cfg.sigma_v12 * rng.standard_normal()
        v3 += cfg.sigma_v3 * rng.standard_normal()
        m_B = m_B + cfg.sigma_mag * rng.standard_normal(3)
        m_B = m_B / np.linalg.norm(m_B)
    return AidingSample(V1, V2, v3, m_B)


def sample_sensors(
    state: TruthState, cfg: SensorConfig, rng: np.random.Generator | None = None
) -> MeasurementFrame:
    """Single synchronous reading of every channel at ``state.t``."""
    imu = sample_imu(state, cfg, rng)
    aid = sample_aiding(state, cfg, rng)
    return MeasurementFrame(state.t, imu.omega, imu.acc, aid.V1, aid.V2, aid.v3, aid.m_B)


@dataclass
class SensorSampler:
    """Produces the held multi-rate measurement stream on a fixed clock.

    ``dt`` is the simulation step.  The IMU period must be an integer
    multiple of ``dt``; aiding samples are taken at their own instants
    ``j / aiding_rate`` and become visible at the first step at or after
    that instant.
    """

    trajectory: Trajectory
    cfg: SensorConfig
    dt: float
    # Optional truth lookup (e.g. a cache); defaults to ``trajectory.state``.
    truth_fn: Callable[[float], TruthState] | None = None
    rng: np.random.Generator = field(init=False)

    def __post_init__(self):
        ratio = 1.0 / (self.cfg.imu_rate * self.dt)
        self.imu_every = int(round(ratio))
        if self.imu_every < 1 or abs(ratio - self.imu_every) > 1e-9:
            raise ValueError(
                f"IMU period {1 / self.cfg.imu_rate:g} s is not a multiple of dt={self.dt:g} s"
            )
        self.rng = np.random.default_rng(self.cfg.seed)
        self.truth = self.truth_fn or self.trajectory.state

    def frames(self, n_steps: int) -> Iterator[MeasurementFrame]:
        cfg, dt = self.cfg, self.dt
        imu: ImuSample | None = None
        aid: AidingSample | None = None
        last_aid = -1
        for k in range(n_steps):
            t = k * dt
            fresh_imu = k % self.imu_every == 0
            omega_path = acc_path = aiding_path = None
            if cfg.ideal_imu:
                readings = [sample_imu(self.truth((k + c) * dt), cfg, self.rng) for c in (0.0, 0.5, 1.0)]
                imu = readings[0]
                omega_path = np.array([r.omega for r in readings])
                acc_path = np.array([r.acc for r in readings])
                fresh_imu = True
            elif fresh_imu:
                imu = sample_imu(self.truth(t), cfg, self.rng)

            j = int(np.floor(t * cfg.aiding_rate + 1e-9))
            fresh_aid = j > last_aid
            if cfg.ideal_imu:
                aids = [sample_aiding(self.truth((k + c) * dt), cfg, self.rng) for c in (0.0, 0.5, 1.0)]
                aid = aids[0]
                aiding_path = np.array([[a.V1, a.V2, a.v3, *a.m_B] for a in aids])
                fresh_aid = True
            elif fresh_aid:
                aid = sample_aiding(self.truth(j / cfg.aiding_rate), cfg, self.rng)
            if fresh_aid:
                last_aid = j

            yield MeasurementFrame(
                t=t,
                omega=imu.omega,
                acc=imu.acc,
                V1=aid.V1,
                V2=aid.V2,
                v3=aid.v3,
                m_B=aid.m_B,
                fresh_imu=fresh_imu,
                fresh_aiding=fresh_aid,
                omega_path=omega_path,
                acc_path=acc_path,
                aiding_path=aiding_path,
            )
