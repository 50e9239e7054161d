import numpy as np
import pytest

from oracles import error_drift, jacobian, measured_output, rel_err, truth_from_error
from riccati_attitude.observers import (
    ObserverConfig,
    Variant,
    error_metrics,
    estimate_from_errors,
    initial_state,
    linearize,
    observer_step,
    output_vector,
    propagate,
)
from riccati_attitude.riccati import GainConfig, RiccatiState
from riccati_attitude.sensors import MeasurementFrame
from riccati_attitude.so3 import exp_rotation, random_rotation
from riccati_attitude.trajectory import DEFAULT_TRAJECTORY, MAG_FIELD


def random_estimate(seed):
    rng = np.random.default_rng(seed)
    return random_rotation(rng), 3.0 * rng.standard_normal(3), rng.standard_normal(3)


def frame_from_truth(R, V, omega=np.zeros(3), acc=np.zeros(3)):
    v = R @ V
    return MeasurementFrame(0.0, omega, acc, V[0], V[1], v[2], R.T @ MAG_FIELD)


def linearization_errors(variant, seed):
    R_hat, V_hat, omega = random_estimate(seed)
    lin = linearize(variant, R_hat, V_hat, omega, MAG_FIELD)
    A_fd = jacobian(lambda x: error_drift(variant, R_hat, V_hat, omega, x), np.zeros(6))
    C_fd = jacobian(lambda x: measured_output(variant, R_hat, V_hat, x, MAG_FIELD), np.zeros(6))
    return rel_err(lin.A, A_fd), rel_err(lin.C, C_fd)


@pytest.mark.parametrize("variant", [1, 2])
def test_linearization_matches_finite_differences(variant):
    errs = [linearization_errors(variant, s) for s in range(20)]
    assert max(max(e) for e in errs) < 1e-3


@pytest.mark.parametrize("variant", [1, 2])
def test_output_vector_matches_direct_residual(variant):
    R_hat, V_hat, _ = random_estimate(11)
    x = np.array([0.1, -0.2, 0.05, 0.3, -0.1, 0.2])
    R, V = truth_from_error(variant, R_hat, V_hat, x)
    y = output_vector(R_hat, V_hat, frame_from_truth(R, V), MAG_FIELD)
    assert np.allclose(y, measured_output(variant, R_hat, V_hat, x, MAG_FIELD))


def test_output_vector_zero_at_truth_and_requires_unit_field():
    R, V, _ = random_estimate(2)
    m = frame_from_truth(R, V)
    assert np.allclose(output_vector(R, V, m, MAG_FIELD), 0.0)
    with pytest.raises(ValueError):
        output_vector(R, V, m, 2 * MAG_FIELD)


def test_mag_cross_block_is_projector():
    R_hat, V_hat, omega = random_estimate(4)
    lin = linearize(Variant.LAMBDA_TILDE, R_hat, V_hat, omega, MAG_FIELD, mag_cross=True)
    assert np.allclose(lin.C[3:, :3], np.eye(3) - np.outer(MAG_FIELD, MAG_FIELD))
    with pytest.raises(ValueError):
        linearize(Variant.LAMBDA_BAR, R_hat, V_hat, omega, MAG_FIELD, mag_cross=True)


def test_variant_parse():
    assert Variant.parse("tilde") is Variant.LAMBDA_TILDE
    assert Variant.parse(2) is Variant.LAMBDA_BAR
    with pytest.raises(ValueError):
        Variant.parse("3")


def test_held_propagation_is_exact_exponential():
    R, V, omega = random_estimate(5)
    sig = np.array([0.01, -0.02, 0.03])
    R1, _ = propagate(R, V, np.tile(omega, (3, 1)), np.zeros((3, 3)), sig, np.zeros(3), 0.02)
    assert np.allclose(R1, R @ exp_rotation((omega - sig) * 0.02), atol=1e-14)


def test_velocity_propagation_fourth_order():
    # constant inputs: V' = -omega x V + a + g R^T e3 has a closed form
    omega = np.array([0.0, 0.0, 0.5])
    R0 = np.eye(3)
    acc = np.array([0.0, 0.0, -9.81])
    V0 = np.array([1.0, 0.0, 0.0])

    def run(h, T=1.0):
        R, V = R0, V0
        for _ in range(int(round(T / h))):
            R, V = propagate(R, V, np.tile(omega, (3, 1)), np.tile(acc, (3, 1)), np.zeros(3), np.zeros(3), h)
        return V

    exact = exp_rotation(-omega * 1.0) @ V0
    e1, e2 = np.abs(run(0.1) - exact).max(), np.abs(run(0.05) - exact).max()
    assert np.log2(e1 / e2) > 3.5


def test_variant_step_consistency():
    """With block-diagonal P both observers apply the same correction."""
    rng = np.random.default_rng(9)
    R = random_rotation(rng)
    V = rng.standard_normal(3)
    R_hat = exp_rotation([0.1, -0.05, 0.08]) @ R
    V_hat = V + [0.2, -0.1, 0.3]
    gains = GainConfig.default_tuning()
    m = frame_from_truth(R, V, omega=rng.standard_normal(3), acc=rng.standard_normal(3))
    out = []
    for v in (1, 2):
        cfg = ObserverConfig(variant=v, gains=gains)
        st = initial_state(cfg, R_hat, V_hat)
        P = gains.P0.copy()
        if v == 2:
            # same covariance expressed in the body-frame error coordinates
            P[:3, :3] = R_hat.T @ P[:3, :3] @ R_hat
        st = st.__class__(st.R_hat, st.V_hat, RiccatiState(P), st.variant)
        out.append(observer_step(st, m, cfg, 1e-3, substeps=1)[1])
    assert np.allclose(out[0].sigma_R, out[1].sigma_R, atol=1e-3 * np.abs(out[0].sigma_R).max())
    assert np.allclose(out[0].sigma_V, out[1].sigma_V, atol=1e-3 * np.abs(out[0].sigma_V).max())


def test_estimate_from_errors_roundtrip():
    s = DEFAULT_TRAJECTORY.state(1.0)
    R_err = exp_rotation([0.2, 0.1, -0.3])
    R_hat, V_hat = estimate_from_errors(s, R_err, [1.0, 2.0, 3.0])
    em = error_metrics(s, R_hat, V_hat)
    assert em.attitude_error == pytest.approx(np.linalg.norm([0.2, 0.1, -0.3]))
    assert np.allclose(em.V_err, [1.0, 2.0, 3.0])
