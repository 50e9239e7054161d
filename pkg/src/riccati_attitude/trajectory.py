"""Analytic ground-truth trajectories.

A trajectory is the composition of an inertial velocity profile and a Z-Y-X
Euler attitude profile.  Everything (angular rate, acceleration, specific
force) is returned in closed form so that the sensor model and the
observability analysis can be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .so3 import E3, from_euler_zyx

GRAVITY = 9.81
ALPHA = 2.0 / np.sqrt(15.0)
CIRCLE_RADIUS = 15.0
MAG_FIELD_PRINTED = np.array([0.434, -0.0091, 0.9008])
# printed value has norm 0.99994; renormalised so it lies on the unit sphere
MAG_FIELD = MAG_FIELD_PRINTED / np.linalg.norm(MAG_FIELD_PRINTED)


@dataclass(frozen=True)
class TruthState:
    t: float
    R: np.ndarray
    V: np.ndarray
    v: np.ndarray
    v_dot: np.ndarray
    omega: np.ndarray
    a_B: np.ndarray

    @property
    def r33(self) -> float:
        return float(self.R[2, 2])


@dataclass(frozen=True)
class AngleProfile:
    """``offset + rate*t + amplitude*sin(freq*t + phase) + approach*(1 - exp(-t/tau))``.

    All angles in radians, rates in rad/s.  ``approach`` is a slow drift
    towards ``offset + approach``; with ``tau <= 0`` it is disabled.
    """

    amplitude: float = 0.0
    freq: float = 0.0
    phase: float = 0.0
    offset: float = 0.0
    rate: float = 0.0
    approach: float = 0.0
    tau: float = 0.0

    def __call__(self, t: float) -> tuple[float, float]:
        arg = self.freq * t + self.phase
        angle = self.offset + self.rate * t + self.amplitude * np.sin(arg)
        dangle = self.rate + self.amplitude * self.freq * np.cos(arg)
        if self.tau > 0.0 and self.approach != 0.0:
            decay = np.exp(-t / self.tau)
            angle += self.approach * (1.0 - decay)
            dangle += self.approach * decay / self.tau
        return float(angle), float(dangle)

    @property
    def is_constant(self) -> bool:
        moving = self.rate != 0.0 or (self.amplitude != 0.0 and self.freq != 0.0)
        return not moving and (self.approach == 0.0 or self.tau <= 0.0)


@dataclass(frozen=True)
class EulerAttitude:
    """Attitude ``R = Rz(yaw) Ry(pitch) Rx(roll)`` driven by three angle profiles."""

    roll: AngleProfile = field(default_factory=AngleProfile)
    pitch: AngleProfile = field(default_factory=AngleProfile)
    yaw: AngleProfile = field(default_factory=AngleProfile)

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        phi, dphi = self.roll(t)
        theta, dtheta = self.pitch(t)
        psi, dpsi = self.yaw(t)
        sphi, cphi = np.sin(phi), np.cos(phi)
        sth, cth = np.sin(theta), np.cos(theta)
        # body rates from Z-Y-X Euler rates
        omega = np.array(
            [
                dphi - dpsi * sth,
                dtheta * cphi + dpsi * sphi * cth,
                -dtheta * sphi + dpsi * cphi * cth,
            ]
        )
        return from_euler_zyx(phi, theta, psi), omega


@dataclass(frozen=True)
class HarmonicVelocity:
    """Per-axis inertial velocity ``bias + amplitude * sin(freq*t + phase)``."""

    bias: tuple = (0.0, 0.0, 0.0)
    amplitude: tuple = (0.0, 0.0, 0.0)
    freq: tuple = (0.0, 0.0, 0.0)
    phase: tuple = (0.0, 0.0, 0.0)

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        b, a, w, p = (np.asarray(x, dtype=float) for x in (self.bias, self.amplitude, self.freq, self.phase))
        arg = w * t + p
        return b + a * np.sin(arg), a * w * np.cos(arg)


def circular_velocity(radius: float = CIRCLE_RADIUS, rate: float = ALPHA) -> HarmonicVelocity:
    """Horizontal circle at constant speed ``radius * rate``."""
    s = radius * rate
    return HarmonicVelocity(amplitude=(s, s, 0.0), freq=(rate, rate, 0.0), phase=(np.pi, np.pi / 2, 0.0))


def default_attitude(
    roll_amp: float = np.deg2rad(30.0),
    pitch_amp: float = np.deg2rad(30.0),
    roll_freq: float = 0.7,
    pitch_freq: float = 0.5,
    yaw_rate: float = ALPHA,
) -> EulerAttitude:
    return EulerAttitude(
        roll=AngleProfile(amplitude=roll_amp, freq=roll_freq),
        pitch=AngleProfile(amplitude=pitch_amp, freq=pitch_freq, phase=np.pi / 2),
        yaw=AngleProfile(offset=np.pi / 2, rate=yaw_rate),
    )


@dataclass(frozen=True)
class Trajectory:
    velocity: HarmonicVelocity = field(default_factory=circular_velocity)
    attitude: EulerAttitude = field(default_factory=default_attitude)
    g: float = GRAVITY

    def state(self, t: float) -> TruthState:
        R, omega = self.attitude(t)
        v, v_dot = self.velocity(t)
        return TruthState(
            t=float(t),
            R=R,
            V=R.T @ v,
            v=v,
            v_dot=v_dot,
            omega=omega,
            a_B=R.T @ (v_dot - self.g * E3),
        )

    def sample(self, t0: float, t1: float, n: int) -> list[TruthState]:
        return [self.state(t) for t in np.linspace(t0, t1, n)]


DEFAULT_TRAJECTORY = Trajectory()


def reference_velocity(t: float) -> tuple[np.ndarray, np.ndarray]:
    """Velocity of the circular reference and its time derivative."""
    if t < 0:
        raise ValueError("t must be non-negative")
    s = CIRCLE_RADIUS * ALPHA
    c, sn = np.cos(ALPHA * t), np.sin(ALPHA * t)
    return np.array([-s * sn, s * c, 0.0]), np.array([-s * ALPHA * c, -s * ALPHA * sn, 0.0])


def truth_attitude(t: float, profile: EulerAttitude | None = None) -> tuple[np.ndarray, np.ndarray]:
    if t < 0:
        raise ValueError("t must be non-negative")
    return (profile or DEFAULT_TRAJECTORY.attitude)(t)


def truth_state(t: float, trajectory: Trajectory | None = None) -> TruthState:
    if t < 0:
        raise ValueError("t must be non-negative")
    return (trajectory or DEFAULT_TRAJECTORY).state(t)
