import numpy as np
import pytest
from hypothesis import given, strategies as st

from dqnpower.dcpc import dcpc_update, run_dcpc
from dqnpower.errors import InvalidMeasurementError
from dqnpower.radio import build_scenario, compute_sinr

SCENARIO = build_scenario(0)


def fixed_point(sc):
    """Solve SINR_i = eta_i as a 2x2 linear system in (p1, p2)."""
    h, n, eta = sc.channel_gain_sq, sc.noise_power, sc.sinr_threshold
    a = np.array([[h[0, 0], -eta[0] * h[1, 0]],
                  [-eta[1] * h[0, 1], h[1, 1]]])
    return np.linalg.solve(a, eta * n)


def test_update_hand_value():
    assert dcpc_update(0.1, 1 / 0.6, 1.2, 0.4) == pytest.approx(0.072)


def test_update_fixed_point():
    assert dcpc_update(0.23, 0.7, 0.7, 0.4) == 0.23


def test_update_clamped():
    assert dcpc_update(1.0, 0.12, 1.2, 0.4) == 0.4


def test_update_zero_sinr():
    with pytest.raises(InvalidMeasurementError):
        dcpc_update(0.1, 0.0, 1.2, 0.4)


def test_fixed_point_values():
    p = fixed_point(SCENARIO)
    np.testing.assert_allclose(p, [0.1275, 0.09625], rtol=1e-12)


def test_converges_from_low_start():
    result = run_dcpc(SCENARIO, 0.05, 0.05, max_steps=100)
    assert result.converged and result.steps <= 100
    s1, s2 = result.final_sinrs
    assert abs(s1 - 1.2) < 1e-3 and abs(s2 - 0.7) < 1e-3
    np.testing.assert_allclose(result.trajectory[-1, 1:3], fixed_point(SCENARIO), rtol=1e-2)
    assert result.steps >= 10  # linear rate 0.84 per frame


def test_constant_from_fixed_point():
    p1, p2 = fixed_point(SCENARIO)
    result = run_dcpc(SCENARIO, p1, p2)
    assert result.converged and result.steps == 0
    assert len(result.trajectory) == 1


def test_non_convergence_reported():
    result = run_dcpc(SCENARIO, 0.05, 0.05, max_steps=3)
    assert not result.converged and result.steps is None
    assert len(result.trajectory) == 4


@given(st.floats(1e-4, 0.4), st.floats(1e-4, 0.4))
def test_powers_stay_in_range(p1, p2):
    traj = run_dcpc(SCENARIO, p1, p2, max_steps=60).trajectory
    assert np.all(traj[:, 1:3] > 0)
    assert np.all(traj[:, 1] <= 0.4) and np.all(traj[:, 2] <= 0.4)


@given(st.floats(1e-3, 0.4), st.floats(1e-3, 0.4))
def test_one_step_ahead_hits_target(p1, p2):
    s1 = compute_sinr(SCENARIO, p1, p2, 1)
    new_p1 = dcpc_update(p1, s1, 1.2, 0.4)
    if new_p1 < 0.4:
        assert compute_sinr(SCENARIO, new_p1, p2, 1) == pytest.approx(1.2, rel=1e-12)
    s2 = compute_sinr(SCENARIO, p1, p2, 2)
    new_p2 = dcpc_update(p2, s2, 0.7, 0.4)
    if new_p2 < 0.4:
        assert compute_sinr(SCENARIO, p1, new_p2, 2) == pytest.approx(0.7, rel=1e-12)
