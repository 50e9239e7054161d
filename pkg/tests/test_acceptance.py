"""End-to-end acceptance criteria A1-A9."""

import time

import numpy as np
import pytest

from oracles import error_drift, jacobian, measured_output, rel_err
from riccati_attitude.harness import TruthCache, measurement_stream, run_observer, run_scenario, summarize_observer
from riccati_attitude.observability import (
    ObservabilityConfig,
    check_instantaneous,
    check_uniform,
    d_matrix,
    d_matrix_analytic,
    d_matrix_numeric,
    lemma3_verdict,
    lemma4_verdict,
    magnetometer_ablation,
    slow_motion_bound,
)
from riccati_attitude.observers import Variant, linearize
from riccati_attitude.riccati import cre_step
from riccati_attitude.scenario import PRESETS, parse_scenario, preset
from riccati_attitude.so3 import random_rotation
from riccati_attitude.trajectory import (
    ALPHA,
    DEFAULT_TRAJECTORY,
    MAG_FIELD,
    AngleProfile,
    EulerAttitude,
    HarmonicVelocity,
    Trajectory,
)


def timed_observer_runs(name):
    """Each observer timed end to end: measurement generation plus filtering."""
    scn = preset(name)
    out = []
    for v in scn.variants:
        t0 = time.perf_counter()
        truth = TruthCache(scn.trajectory)
        trace = run_observer(scn, v, measurement_stream(scn, truth), truth)
        elapsed = time.perf_counter() - t0
        summary, checks = summarize_observer(scn, trace)
        out.append((v, elapsed, summary, checks))
    return out


def test_a1_noise_free_convergence(acceptance):
    runs = timed_observer_runs("sim1")
    ok = True
    details = []
    for v, elapsed, s, checks in runs:
        checks = {k: c for k, c in checks.items() if "runtime" not in k}
        ok &= all(checks.values()) and s.time_to_threshold is not None and s.time_to_threshold < 40.0 and elapsed < 5.0
        details.append(f"obs{int(v)} settled {s.time_to_threshold:.1f}s runtime {elapsed:.2f}s")
        for name, c in checks.items():
            assert c, name
        assert elapsed < 5.0
    acceptance("A1", ok, "; ".join(details))


def test_a2_noisy_multirate_run(acceptance):
    runs = timed_observer_runs("sim2")
    ok = True
    details = []
    for v, elapsed, s, _ in runs:
        this = s.diverged is None and s.rms_att_deg < 5.0 and s.rms_vel < 0.5 and elapsed < 5.0
        ok &= this
        details.append(f"obs{int(v)} rms {s.rms_att_deg:.2f}deg {s.rms_vel:.3f}m/s runtime {elapsed:.2f}s")
    acceptance("A2", ok, "; ".join(details))
    assert ok


def test_a3_linearization_oracle(acceptance):
    worst = 0.0
    for variant in (1, 2):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            R_hat, V_hat, omega = random_rotation(rng), 3.0 * rng.standard_normal(3), rng.standard_normal(3)
            lin = linearize(variant, R_hat, V_hat, omega, MAG_FIELD)
            A_fd = jacobian(lambda x: error_drift(variant, R_hat, V_hat, omega, x), np.zeros(6), 1e-5)
            C_fd = jacobian(lambda x: measured_output(variant, R_hat, V_hat, x, MAG_FIELD), np.zeros(6), 1e-5)
            worst = max(worst, rel_err(lin.A, A_fd), rel_err(lin.C, C_fd))
    acceptance("A3", worst < 1e-3, f"max relative error {worst:.2e}")
    assert worst < 1e-3


def random_trajectory(rng):
    u = lambda lo, hi, n=None: rng.uniform(lo, hi, n)  # noqa: E731
    vel = HarmonicVelocity(tuple(u(-3, 3, 3)), tuple(u(0, 5, 3)), tuple(u(0.1, 1.5, 3)), tuple(u(0, 2 * np.pi, 3)))
    prof = lambda amp: AngleProfile(u(0, amp), u(0.1, 1.5), u(0, 2 * np.pi), u(-0.5, 0.5), u(-0.5, 0.5))  # noqa: E731
    return Trajectory(vel, EulerAttitude(prof(0.8), prof(0.6), prof(3.0)))


def test_a4_d_matrix_equivalence(acceptance):
    dev = cong = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        traj = random_trajectory(rng)
        t = rng.uniform(1.0, 50.0)
        s = traj.state(t)
        for variant in (1, 2):
            a = d_matrix_analytic(s, variant).D
            n = d_matrix_numeric(traj, t, variant, 1e-5).D
            dev = max(dev, float(np.abs(a - n).max()))
        d1, d2 = d_matrix_analytic(s, 1).D11, d_matrix_analytic(s, 2).D11
        cong = max(cong, float(np.abs(d2 - s.R.T @ d1 @ s.R).max()))
    ok = dev < 1e-6 and cong < 1e-12
    acceptance("A4", ok, f"max |analytic - numeric| {dev:.2e}, congruence residual {cong:.2e}")
    assert ok


def test_a5_cre_oracle(acceptance):
    q, s = 2.0, 0.5
    P = np.eye(6)
    A, C, Q, S = np.zeros((6, 6)), np.eye(6), q * np.eye(6), s * np.eye(6)
    for _ in range(2000):
        P = cre_step(P, A, C, Q, S, 0.01)
    fp_err = float(np.abs(P - np.sqrt(s / q) * np.eye(6)).max())

    rng = np.random.default_rng(3)
    # weakly damped so the step-size sequence sits in the asymptotic regime
    A, C = rng.standard_normal((6, 6)), 0.3 * rng.standard_normal((6, 6))
    sols = []
    for h in (0.025, 0.0125, 0.00625):
        P = np.eye(6)
        for _ in range(int(round(0.5 / h))):
            P = cre_step(P, A, C, np.eye(6), np.eye(6), h, substeps=1)
        sols.append(P)
    order = np.log2(np.abs(sols[0] - sols[1]).max() / np.abs(sols[1] - sols[2]).max())
    ok = fp_err < 1e-6 and order >= 3.8
    acceptance("A5", ok, f"fixed-point error {fp_err:.1e}, measured RK4 order {order:.2f}")
    assert ok


def test_a6_magnetometer_ablation(acceptance):
    rep = magnetometer_ablation(DEFAULT_TRAJECTORY, Variant.LAMBDA_TILDE, t=0.0, delta=5.0)
    uni = check_uniform(DEFAULT_TRAJECTORY, ObservabilityConfig(horizon=60.0))
    ok = rep.row3_norm < 1e-12 and rep.col3_norm < 1e-12 and rep.gramian_min_eig < 1e-10 and uni.min_eig > 1e-3
    acceptance(
        "A6",
        ok,
        f"|row3| {rep.row3_norm:.1e} |col3| {rep.col3_norm:.1e} Gramian min eig {rep.gramian_min_eig:.1e}; "
        f"with magnetometer windowed min eig {uni.min_eig:.3f}",
    )
    assert ok


def test_a7_pointwise_sufficient_cases(acceptance):
    ok = slow_motion_bound(0.5) == pytest.approx(1.0013, abs=1e-4)
    details = []
    for name, case in (("vertical", "vertical"), ("pure-translation", "pure_translation"), ("slow-motion", "slow_motion")):
        scn = preset(name)
        rep = lemma3_verdict(scn.trajectory, scn.obs)
        ts = np.arange(0.0, scn.horizon + 1e-9, 0.02)
        inst = all(check_instantaneous(d_matrix(scn.trajectory, t), 1e-4).passed for t in ts)
        this = case in rep.cases and rep.min_abs_r33 >= 0.5 and inst
        if name == "slow-motion":
            this &= rep.v_max * rep.omega_max == pytest.approx(0.9)
        ok &= this
        details.append(f"{name}: cases={','.join(rep.cases)} min eig D {rep.min_eig_D:.3f}")
    acceptance("A7", ok, "; ".join(details))
    assert ok


def test_a8_persistent_excitation(acceptance):
    period = 2 * np.pi / ALPHA
    rep = lemma4_verdict(DEFAULT_TRAJECTORY, ObservabilityConfig(delta_bar=period))
    means_ok = bool(np.all(np.abs(rep.acc_window_means - 8.0) <= 0.08))
    scn = preset("constant-velocity")
    cv = lemma4_verdict(scn.trajectory, scn.obs)
    ok = means_ok and rep.persistent_acceleration and rep.uniform.passed
    ok &= not cv.persistent_acceleration and bool(cv.cases_report.cases) and cv.guaranteed
    acceptance(
        "A8",
        ok,
        f"windowed acc^2 means in [{rep.acc_window_means.min():.4f}, {rep.acc_window_means.max():.4f}], "
        f"uniform min eig {rep.uniform.min_eig:.3f}; constant velocity: acc^2 {cv.acc_window_min:g}, "
        f"pointwise sufficient cases {','.join(cv.cases_report.cases)}",
    )
    assert ok


def test_a9_equilibrium_and_determinism(acceptance, tmp_path):
    scn = preset("equilibrium")
    worst = 0.0
    truth = TruthCache(scn.trajectory)
    frames = measurement_stream(scn, truth)
    for v in scn.variants:
        tr = run_observer(scn, v, frames, truth)
        worst = max(worst, tr.att_err_deg.max(), tr.vel_err.max())
    text = PRESETS["sim2"].replace("horizon = 60", "horizon = 10")
    for d in ("a", "b"):
        run_scenario(parse_scenario(text), tmp_path / d)
    names = ("truth.csv", "observer_v1.csv", "observer_v2.csv")
    same = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)
    ok = worst < 1e-6 and same
    acceptance("A9", ok, f"max equilibrium error {worst:.1e} (deg, m/s); seeded CSVs identical: {same}")
    assert ok
