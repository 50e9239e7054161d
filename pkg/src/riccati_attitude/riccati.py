"""Continuous Riccati equation propagation and innovation law."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

GainFn = Union[float, Callable[[float], float]]


class RiccatiDivergenceError(RuntimeError):
    """Raised when the Riccati solution loses positive definiteness."""

    def __init__(self, t: float, min_eig: float):
        super().__init__(f"Riccati matrix lost positive definiteness at t={t:.6g} s (min eigenvalue {min_eig:.3e})")
        self.t = t
        self.min_eig = min_eig


def block_diag6(a: float, b: float) -> np.ndarray:
    """``diag(a I3, b I3)``."""
    return np.diag([a, a, a, b, b, b]).astype(float)


def _is_spd(M: np.ndarray) -> bool:
    return np.allclose(M, M.T, atol=1e-12) and np.linalg.eigvalsh(M).min() > 0.0


@dataclass(frozen=True)
class GainConfig:
    """Observer tuning.

    ``k`` is either a constant or a function of time; it must stay in
    ``[0.5, k_max]``.
    """

    P0: np.ndarray
    Q: np.ndarray
    S: np.ndarray
    k: GainFn = 1.0
    k_max: float = 10.0

    def __post_init__(self):
        for name in ("P0", "Q", "S"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))
        if self.P0.shape != (6, 6) or self.S.shape != (6, 6):
            raise ValueError("P0 and S must be 6x6")
        if self.Q.shape[0] != self.Q.shape[1]:
            raise ValueError("Q must be square")
        if not _is_spd(self.P0):
            raise ValueError("P0 must be symmetric positive definite")
        if not _is_spd(self.S):
            raise ValueError("S must be symmetric positive definite")
        if not np.allclose(self.Q, self.Q.T, atol=1e-12) or np.linalg.eigvalsh(self.Q).min() < -1e-12:
            raise ValueError("Q must be symmetric positive semidefinite")
        if not callable(self.k):
            self.gain(0.0)

    def gain(self, t: float) -> float:
        k = float(self.k(t)) if callable(self.k) else float(self.k)
        if not 0.5 <= k <= self.k_max:
            raise ValueError(f"gain k={k} outside [0.5, {self.k_max}]")
        return k

    @classmethod
    def default_tuning(cls, **kw) -> GainConfig:
        return cls(P0=block_diag6(2.0, 20.0), Q=block_diag6(25.0, 100.0), S=block_diag6(0.01, 1.0), **kw)


@dataclass
class RiccatiState:
    P: np.ndarray
    t: float = 0.0

    @property
    def min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.P)[0])

    @property
    def cond(self) -> float:
        w = np.linalg.eigvalsh(self.P)
        return float(w[-1] / w[0])


def cre_rhs(P, A, C, Q, S) -> np.ndarray:
    PCt = P @ C.T
    return A @ P + P @ A.T - PCt @ Q @ PCt.T + S


# RK4 stability interval on the negative real axis is about [-2.78, 0].
RK4_STABLE_STEP = 2.5


def correction_rate(P, C, Q) -> float:
    """Largest eigenvalue of ``P C^T Q C`` (the output-injection rate, 1/s)."""
    L = np.linalg.cholesky(P)
    return float(max(np.linalg.eigvalsh(L.T @ (C.T @ Q @ C) @ L)[-1], 0.0))


def stable_substeps(P, A, C, Q, dt: float) -> int:
    """Number of equal RK4 sub-steps keeping ``dt`` inside the stability region.

    The spectral radius of the CRE's Jacobian is bounded by
    ``2 (|A| + rho(P C^T Q C))``.
    """
    stiffness = 2.0 * (np.linalg.norm(A, 2) + correction_rate(P, C, Q))
    return max(1, int(np.ceil(dt * stiffness / RK4_STABLE_STEP)))


def _rk4(P, A, C, Q, S, h):
    k1 = cre_rhs(P, A, C, Q, S)
    k2 = cre_rhs(P + 0.5 * h * k1, A, C, Q, S)
    k3 = cre_rhs(P + 0.5 * h * k2, A, C, Q, S)
    k4 = cre_rhs(P + h * k3, A, C, Q, S)
    return P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def cre_step(P, A, C, Q, S, dt: float, t: float = 0.0, substeps: int | None = None) -> np.ndarray:
    """Advance ``P' = AP + PA^T - PC^T Q C P + S`` by ``dt`` with frozen A, C, Q, S.

    Classical RK4; ``substeps=None`` picks the sub-step count from
    :func:`stable_substeps`.  The result is symmetrised and a non-positive
    minimum eigenvalue raises :class:`RiccatiDivergenceError`.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = stable_substeps(P, A, C, Q, dt) if substeps is None else int(substeps)
    h = dt / n
    for _ in range(n):
        P = _rk4(P, A, C, Q, S, h)
    P = 0.5 * (P + P.T)
    min_eig = float(np.linalg.eigvalsh(P)[0])
    if not np.isfinite(min_eig) or min_eig <= 0.0:
        raise RiccatiDivergenceError(t + dt, min_eig)
    return P


def innovation(P, C, Q, k: float, y) -> np.ndarray:
    """Riccati correction input ``u = -k P C^T Q y``."""
    return -k * (P @ (C.T @ (Q @ np.asarray(y, dtype=float))))
