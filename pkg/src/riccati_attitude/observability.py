"""Observability analysis of the zero-error linearised pair (A*, C*).

The pair is obtained by evaluating the observers' ``(A, C)`` at
``R_hat = R, V_hat = V``.  Uniform observability is tested through the
matrix ``D = M^T M`` with ``M = [C*; C* A* + dC*/dt]``, either pointwise
(``D(t) >= mu I``) or over sliding windows, and through the observability
Gramian.  Sufficient trajectory conditions (vertical motion, pure
translation, slow motion, persistent horizontal acceleration) are checked
by :func:`lemma3_verdict` and :func:`lemma4_verdict`; they only ever
certify observability, a failed condition means "no guarantee".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .observers import Variant
from .so3 import E1, E2, E3, projector, skew
from .trajectory import GRAVITY, MAG_FIELD, Trajectory, TruthState

PI_E3 = np.diag([1.0, 1.0, 0.0])


@dataclass(frozen=True)
class StarPair:
    A: np.ndarray
    C: np.ndarray
    Delta: np.ndarray
    t: float


@dataclass(frozen=True)
class DMatrix:
    D11: np.ndarray
    D12: np.ndarray
    D21: np.ndarray
    D22: np.ndarray
    t: float

    @property
    def D(self) -> np.ndarray:
        return np.block([[self.D11, self.D12], [self.D21, self.D22]])

    @classmethod
    def from_matrix(cls, D: np.ndarray, t: float) -> DMatrix:
        return cls(D[:3, :3], D[:3, 3:], D[3:, :3], D[3:, 3:], t)

    @property
    def min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.D)[0])


@dataclass(frozen=True)
class ObservabilityConfig:
    delta: float = 5.0
    mu: float = 1e-3
    rho: float = 0.5
    v_max: float | None = None
    omega_max: float | None = None
    delta_bar: float | None = None
    rho_bar: float = 1e-3
    horizon: float = 60.0
    dt: float = 0.02
    zero_tol: float = 1e-9
    n_steps: int | None = None

    def __post_init__(self):
        for name in ("delta", "mu", "rho", "rho_bar", "horizon", "dt"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("v_max", "omega_max", "delta_bar"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def window_bar(self) -> float:
        return self.delta if self.delta_bar is None else self.delta_bar

    def quadrature_steps(self, window: float) -> int:
        """Simpson intervals per window: ``max(64, window/dt)`` rounded up to even."""
        n = self.n_steps or max(64, int(np.ceil(window / self.dt)))
        return n + (n % 2)


# --------------------------------------------------------------------------
# star pair and D matrix


def star_pair(
    truth: TruthState, variant=Variant.LAMBDA_TILDE, m_I=MAG_FIELD, g: float = GRAVITY, use_magnetometer: bool = True
) -> StarPair:
    variant = Variant.parse(variant)
    R, v, W = truth.R, truth.v, skew(truth.omega)
    m_I = np.asarray(m_I, dtype=float)
    Delta = np.vstack((E1, E2, E3 @ R))
    A = np.zeros((6, 6))
    A[3:, 3:] = -W
    C = np.zeros((6, 6))
    C[:3, 3:] = Delta
    if variant == Variant.LAMBDA_TILDE:
        A[3:, :3] = g * R.T @ skew(E3)
        C[2, :3] = -E3 @ skew(v)
        C[3:, :3] = skew(m_I)
    else:
        A[:3, :3] = -W
        A[3:, :3] = g * skew(R.T @ E3)
        C[2, :3] = -E3 @ skew(v) @ R
        C[3:, :3] = skew(m_I) @ R
    if not use_magnetometer:
        C = C[:3]
    return StarPair(A, C, Delta, truth.t)


def d_matrix_analytic(
    truth: TruthState, variant=Variant.LAMBDA_TILDE, m_I=MAG_FIELD, g: float = GRAVITY, use_magnetometer: bool = True
) -> DMatrix:
    """Closed-form blocks of ``D = M^T M``."""
    variant = Variant.parse(variant)
    R, v, v_dot, W = truth.R, truth.v, truth.v_dot, skew(truth.omega)
    Re3 = R @ E3
    a = np.cross(E3, Re3)
    b = np.cross(E3, v)
    c = np.cross(E3, v_dot)
    D11 = g**2 * PI_E3 - g**2 * np.outer(a, a) + np.outer(b, b) + np.outer(c, c)
    if use_magnetometer:
        D11 = D11 + projector(np.asarray(m_I, dtype=float))
    D12 = skew(v) @ np.outer(E3, E3) @ R + g * skew(E3) @ R @ PI_E3 @ W
    Delta = np.vstack((E1, E2, E3 @ R))
    D22 = Delta.T @ Delta - W @ PI_E3 @ W
    if variant == Variant.LAMBDA_BAR:
        D11 = R.T @ D11 @ R
        D12 = R.T @ D12
    return DMatrix(D11, D12, D12.T, D22, truth.t)


def m_matrix_numeric(
    trajectory: Trajectory,
    t: float,
    variant=Variant.LAMBDA_TILDE,
    fd_step: float = 1e-5,
    m_I=MAG_FIELD,
    use_magnetometer: bool = True,
) -> np.ndarray:
    """``M = [C*; C* A* + dC*/dt]`` with a central-difference ``dC*/dt``."""
    g = trajectory.g
    sp = star_pair(trajectory.state(t), variant, m_I, g, use_magnetometer)
    Cp = star_pair(trajectory.state(t + fd_step), variant, m_I, g, use_magnetometer).C
    Cm = star_pair(trajectory.state(t - fd_step), variant, m_I, g, use_magnetometer).C
    C_dot = (Cp - Cm) / (2.0 * fd_step)
    return np.vstack((sp.C, sp.C @ sp.A + C_dot))


def d_matrix_numeric(
    trajectory: Trajectory,
    t: float,
    variant=Variant.LAMBDA_TILDE,
    fd_step: float = 1e-5,
    m_I=MAG_FIELD,
    use_magnetometer: bool = True,
) -> DMatrix:
    M = m_matrix_numeric(trajectory, t, variant, fd_step, m_I, use_magnetometer)
    return DMatrix.from_matrix(M.T @ M, t)


def d_matrix(trajectory: Trajectory, t: float, variant=Variant.LAMBDA_TILDE, m_I=MAG_FIELD, use_magnetometer=True):
    return d_matrix_analytic(trajectory.state(t), variant, m_I, trajectory.g, use_magnetometer).D


# --------------------------------------------------------------------------
# transition matrix and Gramian


def _star_A(trajectory: Trajectory, t: float, variant, m_I) -> np.ndarray:
    return star_pair(trajectory.state(t), variant, m_I, trajectory.g).A


def transition_matrix(
    trajectory: Trajectory, t0: float, t1: float, variant=Variant.LAMBDA_TILDE, n_steps: int = 200, m_I=MAG_FIELD
) -> np.ndarray:
    """``Phi(t1, t0)`` for ``dx/dt = A*(t) x`` by fixed-step RK4."""
    h = (t1 - t0) / n_steps
    Phi = np.eye(6)
    for j in range(n_steps):
        s = t0 + j * h
        A0 = _star_A(trajectory, s, variant, m_I)
        Am = _star_A(trajectory, s + 0.5 * h, variant, m_I)
        A1 = _star_A(trajectory, s + h, variant, m_I)
        k1 = A0 @ Phi
        k2 = Am @ (Phi + 0.5 * h * k1)
        k3 = Am @ (Phi + 0.5 * h * k2)
        k4 = A1 @ (Phi + h * k3)
        Phi = Phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Phi


def simpson_weights(n: int, h: float) -> np.ndarray:
    if n < 2 or n % 2:
        raise ValueError("composite Simpson needs an even number of intervals >= 2")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def gramian(
    trajectory: Trajectory,
    t: float,
    delta: float,
    variant=Variant.LAMBDA_TILDE,
    n_steps: int = 128,
    m_I=MAG_FIELD,
    use_magnetometer: bool = True,
) -> np.ndarray:
    """Observability Gramian ``(1/delta) int_t^{t+delta} Phi^T C^T C Phi ds``.

    ``Phi(s, t)`` is propagated with RK4 on the quadrature grid and the
    integral uses composite Simpson over ``n_steps`` intervals.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    n_steps += n_steps % 2
    h = delta / n_steps
    w = simpson_weights(n_steps, h)
    g = trajectory.g
    Phi = np.eye(6)
    W = np.zeros((6, 6))
    sp = star_pair(trajectory.state(t), variant, m_I, g, use_magnetometer)
    for j in range(n_steps + 1):
        CPhi = sp.C @ Phi
        W += w[j] * (CPhi.T @ CPhi)
        if j == n_steps:
            break
        s = t + j * h
        Am = star_pair(trajectory.state(s + 0.5 * h), variant, m_I, g, use_magnetometer).A
        nxt = star_pair(trajectory.state(s + h), variant, m_I, g, use_magnetometer)
        k1 = sp.A @ Phi
        k2 = Am @ (Phi + 0.5 * h * k1)
        k3 = Am @ (Phi + 0.5 * h * k2)
        k4 = nxt.A @ (Phi + h * k3)
        Phi = Phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        sp = nxt
    return W / delta


# --------------------------------------------------------------------------
# checkers


@dataclass(frozen=True)
class InstantVerdict:
    passed: bool
    min_eig: float
    mu: float


def check_instantaneous(D, mu: float) -> InstantVerdict:
    D = D.D if isinstance(D, DMatrix) else np.asarray(D, dtype=float)
    if not np.allclose(D, D.T, atol=1e-9 * max(1.0, np.abs(D).max())):
        raise ValueError("D must be symmetric")
    lam = float(np.linalg.eigvalsh(D)[0])
    return InstantVerdict(lam >= mu, lam, mu)


def sliding_window_means(values: np.ndarray, n: int, h: float, stride: int = 1) -> np.ndarray:
    """Simpson window means of samples on a uniform grid.

    ``values`` has shape ``(N, ...)``; returns one mean per window start
    ``0, stride, 2*stride, ...`` with each window spanning ``n`` intervals.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] < n + 1:
        raise ValueError("series shorter than one window")
    w = simpson_weights(n, h) / (n * h)
    windows = np.lib.stride_tricks.sliding_window_view(values, n + 1, axis=0)[::stride]
    return np.tensordot(windows, w, axes=([-1], [0]))


@dataclass(frozen=True)
class UniformVerdict:
    passed: bool
    mu: float
    delta: float
    window_starts: np.ndarray
    window_min_eigs: np.ndarray

    @property
    def min_eig(self) -> float:
        return float(self.window_min_eigs.min())


def windowed_min_eigs(matrix_fn, t0: float, t1: float, delta: float, n_steps: int, stride: int = 1):
    """Minimum eigenvalue of ``(1/delta) int_t^{t+delta} F(s) ds`` for sliding ``t``.

    ``F`` is sampled on a uniform grid of spacing ``delta/n_steps`` covering
    ``[t0, t1]``; window starts are grid points spaced by ``stride``.
    """
    if t1 - t0 < delta - 1e-12:
        raise ValueError(f"horizon {t1 - t0:g} s shorter than window {delta:g} s")
    h = delta / n_steps
    N = int(np.floor((t1 - t0) / h + 1e-9))
    grid = t0 + h * np.arange(N + 1)
    F = np.array([matrix_fn(s) for s in grid])
    means = sliding_window_means(F, n_steps, h, stride)
    # sliding_window_view puts the window axis last; means has shape (K, 6, 6)
    eigs = np.linalg.eigvalsh(means)[:, 0]
    return grid[: len(grid) - n_steps][::stride], eigs


def check_uniform(
    trajectory: Trajectory,
    cfg: ObservabilityConfig,
    variant=Variant.LAMBDA_TILDE,
    m_I=MAG_FIELD,
    use_magnetometer: bool = True,
    stride: int = 1,
) -> UniformVerdict:
    """Sliding-window test ``(1/delta) int D >= mu I`` over ``[0, horizon]``."""
    if cfg.horizon < cfg.delta:
        raise ValueError(f"horizon {cfg.horizon:g} s shorter than window delta={cfg.delta:g} s")
    n = cfg.quadrature_steps(cfg.delta)
    starts, eigs = windowed_min_eigs(
        lambda s: d_matrix(trajectory, s, variant, m_I, use_magnetometer), 0.0, cfg.horizon, cfg.delta, n, stride
    )
    return UniformVerdict(bool(np.all(eigs >= cfg.mu)), cfg.mu, cfg.delta, starts, eigs)


# --------------------------------------------------------------------------
# sufficient conditions


def slow_motion_bound(rho: float, g: float = GRAVITY) -> float:
    """Largest ``v_max * Omega_max`` covered by the slow-motion case."""
    return g * rho**2 / np.sqrt(6.0)


@dataclass
class TrajectoryStats:
    t: np.ndarray
    r33: np.ndarray
    v_cross_e3: np.ndarray
    omega_norm: np.ndarray
    v_norm: np.ndarray
    v_dot: np.ndarray


def trajectory_stats(trajectory: Trajectory, horizon: float, dt: float) -> TrajectoryStats:
    ts = np.linspace(0.0, horizon, int(round(horizon / dt)) + 1)
    states = [trajectory.state(t) for t in ts]
    return TrajectoryStats(
        t=ts,
        r33=np.array([s.R[2, 2] for s in states]),
        v_cross_e3=np.array([np.linalg.norm(np.cross(s.v, E3)) for s in states]),
        omega_norm=np.array([np.linalg.norm(s.omega) for s in states]),
        v_norm=np.array([np.linalg.norm(s.v) for s in states]),
        v_dot=np.array([s.v_dot for s in states]),
    )


@dataclass
class CaseReport:
    vertical: bool
    pure_translation: bool
    slow_motion: bool
    r33_bound_holds: bool
    min_abs_r33: float
    v_max: float
    omega_max: float
    slow_motion_bound: float
    min_eig_D: float
    mu: float

    @property
    def cases(self) -> list[str]:
        names = ("vertical", "pure_translation", "slow_motion")
        return [n for n in names if getattr(self, n)]

    @property
    def guaranteed(self) -> bool:
        return self.r33_bound_holds and bool(self.cases)

    @property
    def verdict(self) -> str:
        return "pass" if self.guaranteed else "no guarantee"

    @property
    def consistent(self) -> bool:
        """A guarantee must be confirmed by a strictly positive pointwise D."""
        return (not self.guaranteed) or self.min_eig_D > 0.0


def lemma3_verdict(
    trajectory: Trajectory, cfg: ObservabilityConfig, variant=Variant.LAMBDA_TILDE, m_I=MAG_FIELD
) -> CaseReport:
    st = trajectory_stats(trajectory, cfg.horizon, cfg.dt)
    v_max = cfg.v_max if cfg.v_max is not None else float(st.v_norm.max())
    omega_max = cfg.omega_max if cfg.omega_max is not None else float(st.omega_norm.max())
    bound = slow_motion_bound(cfg.rho, trajectory.g)
    min_eig = min(
        float(np.linalg.eigvalsh(d_matrix(trajectory, t, variant, m_I))[0]) for t in st.t
    )
    return CaseReport(
        vertical=bool(st.v_cross_e3.max() < cfg.zero_tol),
        pure_translation=bool(st.omega_norm.max() < cfg.zero_tol),
        slow_motion=bool(v_max * omega_max <= bound),
        r33_bound_holds=bool(np.abs(st.r33).min() >= cfg.rho),
        min_abs_r33=float(np.abs(st.r33).min()),
        v_max=v_max,
        omega_max=omega_max,
        slow_motion_bound=bound,
        min_eig_D=min_eig,
        mu=cfg.mu,
    )


@dataclass
class ExcitationReport:
    cases_report: CaseReport
    r33_window_min: float
    r33_window_ok: bool
    acc_window_min: float
    acc_window_means: np.ndarray
    persistent_acceleration: bool
    uniform: UniformVerdict

    @property
    def cases(self) -> list[str]:
        cases = list(self.cases_report.cases)
        if self.persistent_acceleration:
            cases.append("persistent_acceleration")
        return cases

    @property
    def guaranteed(self) -> bool:
        return self.r33_window_ok and bool(self.cases)

    @property
    def verdict(self) -> str:
        return "pass" if self.guaranteed else "no guarantee"

    @property
    def consistent(self) -> bool:
        return (not self.guaranteed) or self.uniform.min_eig > 0.0


def lemma4_verdict(
    trajectory: Trajectory, cfg: ObservabilityConfig, variant=Variant.LAMBDA_TILDE, m_I=MAG_FIELD
) -> ExcitationReport:
    horizon = cfg.horizon
    if horizon < max(cfg.delta, cfg.window_bar):
        raise ValueError("horizon shorter than the analysis windows")
    cases = lemma3_verdict(trajectory, cfg, variant, m_I)

    n = cfg.quadrature_steps(cfg.delta)
    _, r33_means = windowed_min_eigs(
        lambda s: np.atleast_2d(trajectory.state(s).R[2, 2] ** 2), 0.0, horizon, cfg.delta, n
    )
    nb = cfg.quadrature_steps(cfg.window_bar)
    _, acc_means = _windowed_vector_means(
        lambda s: trajectory.state(s).v_dot[:2] ** 2, 0.0, horizon, cfg.window_bar, nb
    )
    acc_min = float(acc_means.min())
    uniform = check_uniform(trajectory, cfg, variant, m_I)
    return ExcitationReport(
        cases_report=cases,
        r33_window_min=float(r33_means.min()),
        r33_window_ok=bool(r33_means.min() >= cfg.rho**2),
        acc_window_min=acc_min,
        acc_window_means=acc_means,
        persistent_acceleration=bool(acc_min >= cfg.rho_bar),
        uniform=uniform,
    )


def _windowed_vector_means(fn, t0: float, t1: float, delta: float, n_steps: int):
    h = delta / n_steps
    N = int(np.floor((t1 - t0) / h + 1e-9))
    grid = t0 + h * np.arange(N + 1)
    vals = np.array([fn(s) for s in grid])
    return grid[: len(grid) - n_steps], sliding_window_means(vals, n_steps, h)


# --------------------------------------------------------------------------
# magnetometer ablation


@dataclass
class AblationReport:
    variant: Variant
    row3_norm: float
    col3_norm: float
    null_residual: float
    gramian_min_eig: float
    gramian_min_eig_with_mag: float
    window_min_eig_with_mag: float
    d_ablated: DMatrix = field(repr=False)

    @property
    def singular(self) -> bool:
        return self.gramian_min_eig < 1e-10


def ablated_d_matrix(truth: TruthState, variant=Variant.LAMBDA_TILDE, g: float = GRAVITY) -> DMatrix:
    return d_matrix_analytic(truth, variant, g=g, use_magnetometer=False)


def magnetometer_ablation(
    trajectory: Trajectory,
    variant=Variant.LAMBDA_TILDE,
    t: float = 0.0,
    delta: float = 5.0,
    n_steps: int = 128,
    m_I=MAG_FIELD,
) -> AblationReport:
    """Compare the observability of the pair with and without magnetometer rows.

    Without magnetometer the first-chart D has an identically zero third row
    and column (the heading error is invisible); in the second chart the
    null direction is ``R^T e3`` instead.
    """
    variant = Variant.parse(variant)
    truth = trajectory.state(t)
    Dab = ablated_d_matrix(truth, variant, trajectory.g)
    D = Dab.D
    null = np.concatenate((E3 if variant == Variant.LAMBDA_TILDE else truth.R.T @ E3, np.zeros(3)))
    W_ab = gramian(trajectory, t, delta, variant, n_steps, m_I, use_magnetometer=False)
    W = gramian(trajectory, t, delta, variant, n_steps, m_I, use_magnetometer=True)
    n = max(64, n_steps)
    n += n % 2
    _, eigs = windowed_min_eigs(lambda s: d_matrix(trajectory, s, variant, m_I), t, t + delta, delta, n)
    return AblationReport(
        variant=variant,
        row3_norm=float(np.linalg.norm(D[2, :])),
        col3_norm=float(np.linalg.norm(D[:, 2])),
        null_residual=float(np.linalg.norm(D @ null)),
        gramian_min_eig=float(np.linalg.eigvalsh(W_ab)[0]),
        gramian_min_eig_with_mag=float(np.linalg.eigvalsh(W)[0]),
        window_min_eig_with_mag=float(eigs.min()),
        d_ablated=Dab,
    )


# --------------------------------------------------------------------------
# aggregated report

# analytic vs finite-difference D disagreement that invalidates a run
D_CONSISTENCY_TOL = 1e-5


@dataclass
class ObservabilityReport:
    variant: Variant
    cfg: ObservabilityConfig
    t: np.ndarray
    min_eig_D: np.ndarray
    window_min_eig: np.ndarray
    r33: np.ndarray
    v_cross_e3: np.ndarray
    omega_norm: np.ndarray
    instantaneous_pass: bool
    uniform: UniformVerdict
    excitation: ExcitationReport
    d_consistency: float
    ablation: AblationReport | None = None

    @property
    def cases_report(self) -> CaseReport:
        return self.excitation.cases_report

    @property
    def consistent(self) -> bool:
        return self.d_consistency <= D_CONSISTENCY_TOL and self.cases_report.consistent and self.excitation.consistent

    def rows(self):
        """Per-time rows ``(t, min_eig_D, window_min_eig, R33, |v x e3|, |Omega|)``."""
        return zip(self.t, self.min_eig_D, self.window_min_eig, self.r33, self.v_cross_e3, self.omega_norm)

    def summary_lines(self) -> list[str]:
        c, l3, l4 = self.cfg, self.cases_report, self.excitation
        out = [
            f"variant: {int(self.variant)}",
            f"delta: {c.delta:g} s, mu: {c.mu:g}, rho: {c.rho:g}, rho_bar: {c.rho_bar:g}, delta_bar: {c.window_bar:g} s",
            f"instantaneous: {'pass' if self.instantaneous_pass else 'fail'} (min eig D = {self.min_eig_D.min():.6g})",
            f"uniform: {'pass' if self.uniform.passed else 'fail'} (min windowed eig = {self.uniform.min_eig:.6g})",
            f"pointwise sufficient conditions: {l3.verdict}; cases: {', '.join(l3.cases) or 'no case applies'}; "
            f"min |R33| = {l3.min_abs_r33:.6g} (rho = {c.rho:g}); "
            f"v_max*omega_max = {l3.v_max * l3.omega_max:.6g} (bound {l3.slow_motion_bound:.6g})",
            f"windowed sufficient conditions: {l4.verdict}; cases: {', '.join(l4.cases) or 'no case applies'}; "
            f"min windowed R33^2 = {l4.r33_window_min:.6g}; min windowed acc^2 = {l4.acc_window_min:.6g}",
            f"analytic/numeric D max deviation: {self.d_consistency:.3e} (limit {D_CONSISTENCY_TOL:g})",
            f"cross-checks consistent: {self.consistent}",
        ]
        if self.ablation is not None:
            a = self.ablation
            out.append(
                f"magnetometer ablation: |D row3| = {a.row3_norm:.3e}, |D col3| = {a.col3_norm:.3e}, "
                f"Gramian min eig = {a.gramian_min_eig:.3e} ({'singular' if a.singular else 'regular'}), "
                f"with magnetometer = {a.gramian_min_eig_with_mag:.6g}"
            )
        return out


def observability_report(
    trajectory: Trajectory,
    cfg: ObservabilityConfig,
    variant=Variant.LAMBDA_TILDE,
    m_I=MAG_FIELD,
    use_magnetometer: bool = True,
    ablate: bool = False,
    fd_every: int = 25,
) -> ObservabilityReport:
    """Run every check on one trajectory.

    The per-time series lives on the Simpson grid of the ``delta`` window;
    ``window_min_eig`` is NaN where the window would pass the horizon.  The
    analytic D is compared with the finite-difference oracle every
    ``fd_every`` grid points.
    """
    variant = Variant.parse(variant)
    if cfg.horizon < cfg.delta:
        raise ValueError(f"horizon {cfg.horizon:g} s shorter than window delta={cfg.delta:g} s")
    n = cfg.quadrature_steps(cfg.delta)
    h = cfg.delta / n
    N = int(np.floor(cfg.horizon / h + 1e-9))
    grid = h * np.arange(N + 1)
    states = [trajectory.state(s) for s in grid]
    Ds = np.array([d_matrix_analytic(s, variant, m_I, trajectory.g, use_magnetometer).D for s in states])
    min_eig = np.linalg.eigvalsh(Ds)[:, 0]
    win = np.full(len(grid), np.nan)
    win_eigs = np.linalg.eigvalsh(sliding_window_means(Ds, n, h))[:, 0]
    win[: len(win_eigs)] = win_eigs
    uniform = UniformVerdict(bool(np.all(win_eigs >= cfg.mu)), cfg.mu, cfg.delta, grid[: len(win_eigs)], win_eigs)

    dev = 0.0
    for s in grid[::fd_every]:
        if s - 1e-5 < 0:
            continue
        a = Ds[int(round(s / h))]
        b = d_matrix_numeric(trajectory, s, variant, 1e-5, m_I, use_magnetometer).D
        dev = max(dev, float(np.abs(a - b).max()))

    excitation = lemma4_verdict(trajectory, cfg, variant, m_I)
    ablation = magnetometer_ablation(trajectory, variant, 0.0, cfg.delta, 128, m_I) if ablate else None
    return ObservabilityReport(
        variant=variant,
        cfg=cfg,
        t=grid,
        min_eig_D=min_eig,
        window_min_eig=win,
        r33=np.array([s.R[2, 2] for s in states]),
        v_cross_e3=np.array([np.linalg.norm(np.cross(s.v, E3)) for s in states]),
        omega_norm=np.array([np.linalg.norm(s.omega) for s in states]),
        instantaneous_pass=bool(np.all(min_eig >= cfg.mu)),
        uniform=uniform,
        excitation=excitation,
        d_consistency=dev,
        ablation=ablation,
    )
