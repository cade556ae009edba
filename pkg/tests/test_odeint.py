"""Integrator, quadrature, and zero-detection tests against closed forms."""

from __future__ import annotations

import math

import numpy as np
import pytest

from hamosc import coefsys, mat2, odeint
from conftest import const_scenario, hermitian

I2 = np.eye(2, dtype=complex)
Z2 = np.zeros((2, 2), dtype=complex)


# ---------------------------------------------------------------------------
# Adaptive stepping.


def test_zero_field_is_exact():
    traj = odeint.adaptive_solve(lambda t, y: np.zeros_like(y), [3.0, -1.0], (0.0, 5.0))
    assert float(np.max(np.abs(traj.states - np.array([3.0, -1.0])))) == 0.0
    st = traj.dense_eval(2.345)
    assert st[0] == 3.0 and st[1] == -1.0


def test_exponential_growth():
    traj = odeint.adaptive_solve(
        lambda t, y: y, [1.0], (0.0, 1.0), rtol=1e-10, atol=1e-12
    )
    assert abs(float(traj.states[-1, 0]) - math.e) <= 1e-8


def test_circular_motion_full_revolution():
    def field(t, y):
        return np.array([y[1], -y[0]])

    traj = odeint.adaptive_solve(field, [1.0, 0.0], (0.0, 2.0 * math.pi))
    assert abs(float(traj.states[-1, 0]) - 1.0) <= 1e-7
    assert abs(float(traj.states[-1, 1])) <= 1e-7


def test_tolerance_scaling():
    # the controller must actually respond to rtol: a 10^4-fold loosening
    # has to cost well over one order of magnitude of endpoint accuracy
    def field(t, y):
        return y

    def end_error(rtol):
        traj = odeint.adaptive_solve(field, [1.0], (0.0, 1.0), rtol=rtol, atol=1e-14)
        return abs(float(traj.states[-1, 0]) - math.e)

    assert end_error(1e-6) >= 8.0 * end_error(1e-10)


def test_dense_output_matches_nodes():
    traj = odeint.adaptive_solve(lambda t, y: y, [1.0], (0.0, 1.0))
    vals = traj.dense_eval(traj.times)
    assert float(np.max(np.abs(vals - traj.states))) <= 1e-12
    with pytest.raises(ValueError):
        traj.dense_eval(1.5)


def test_step_underflow_reported():
    # 1 + y^2 escapes in finite time; without an escape guard the
    # controller must give up rather than loop forever
    def field(t, y):
        return 1.0 + y * y

    with pytest.raises(odeint.StepUnderflow):
        odeint.adaptive_solve(field, [0.0], (0.0, 3.0))


# ---------------------------------------------------------------------------
# Quadrature.


def test_quadrature_closed_forms():
    assert abs(odeint.quadrature(lambda t: 1.0, (0.0, 1.0)) - 1.0) <= 1e-14
    assert abs(odeint.quadrature(math.sin, (0.0, math.pi)) - 2.0) <= 1e-12
    assert abs(odeint.quadrature(lambda t: 1.0 / t, (1.0, 2.0)) - math.log(2.0)) <= 1e-12
    assert odeint.quadrature(math.sin, (1.0, 1.0)) == 0.0
    # orientation flips the sign
    assert abs(odeint.quadrature(math.sin, (math.pi, 0.0)) + 2.0) <= 1e-12


# ---------------------------------------------------------------------------
# Matrix pair flow.


def test_pack_unpack_round_trip():
    rng = np.random.default_rng(31)
    phi = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    psi = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    p2, s2 = odeint.unpack_pair(odeint.pack_pair(phi, psi))
    assert np.array_equal(p2, phi) and np.array_equal(s2, psi)


def test_harmonic_pair_flow():
    s = coefsys.make_family("harmonic", {})
    traj = odeint.solve_hamiltonian(s, I2, Z2, (0.0, 10.0))
    for t in (2.5, 10.0):
        phi, psi = odeint.phi_psi_at(traj, t)
        assert mat2.norm_max(phi - math.cos(t) * I2) <= 1e-7
        assert mat2.norm_max(psi + math.sin(t) * I2) <= 1e-7
    assert traj.meta["kind"] == "hamiltonian"
    assert traj.meta["initial_defect"] == 0.0
    assert float(np.max(traj.meta["defects"])) <= 1e-8


def test_non_conjoined_start_rejected():
    s = coefsys.make_family("harmonic", {})
    with pytest.raises(odeint.ConjoinedDrift):
        odeint.solve_hamiltonian(s, I2, 1j * I2, (0.0, 1.0))


def test_pure_drift_exponential():
    s = const_scenario(np.eye(2), Z2, Z2)
    traj = odeint.solve_hamiltonian(s, I2, Z2, (0.0, 1.0))
    phi, psi = odeint.phi_psi_at(traj, 1.0)
    assert mat2.norm_max(phi - math.e * I2) <= 1e-7
    assert mat2.norm_max(psi) == 0.0


def test_liouville_identity():
    # stacking two conjoined solutions gives a fundamental 4x4 solution;
    # its determinant evolves by exp(integral of tr A - tr A*)
    rng = np.random.default_rng(32)
    a = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) * 0.4
    s = const_scenario(a, hermitian(rng, 0.5), hermitian(rng, 0.5))
    t1 = odeint.solve_hamiltonian(s, I2, Z2, (0.0, 2.0))
    t2 = odeint.solve_hamiltonian(s, Z2, I2, (0.0, 2.0))
    trace_rate = complex(np.trace(a) - np.conj(np.trace(a)))
    for t in np.linspace(0.0, 2.0, 9):
        p1, q1 = odeint.phi_psi_at(t1, float(t))
        p2, q2 = odeint.phi_psi_at(t2, float(t))
        x = np.block([[p1, p2], [q1, q2]])
        expected = np.exp(trace_rate * t)
        scale = float(np.max(np.abs(x))) ** 4 + 1.0
        assert abs(np.linalg.det(x) - expected) <= 1e-6 * scale


def test_frame_solver_matches_plain_on_moderate_window():
    s = coefsys.make_family("harmonic", {})
    plain = odeint.solve_hamiltonian(s, I2, Z2, (0.0, 10.0))
    frame = odeint.solve_hamiltonian_frame(s, I2, Z2, (0.0, 10.0))
    zp = odeint.detect_det_zeros(plain, real_coefficients=True)
    zf = odeint.detect_det_zeros(frame, real_coefficients=True)
    assert len(zp) == len(zf) == 3
    for a, b in zip(zp, zf):
        assert abs(a.time - b.time) <= 1e-6


# ---------------------------------------------------------------------------
# Determinant zeros.


def test_detect_det_zeros_harmonic():
    s = coefsys.make_family("harmonic", {})
    traj = odeint.solve_hamiltonian(s, I2, Z2, (0.0, 10.0))
    zeros = odeint.detect_det_zeros(traj, 1e-7, real_coefficients=True)
    times = [z.time for z in zeros]
    expected = [math.pi / 2.0, 3.0 * math.pi / 2.0, 5.0 * math.pi / 2.0]
    assert len(times) == 3
    assert max(abs(a - b) for a, b in zip(times, expected)) <= 1e-6


def test_detect_det_zeros_constant_flow_has_none():
    s = const_scenario(Z2, Z2, Z2)
    traj = odeint.solve_hamiltonian(s, I2, Z2, (0.0, 10.0))
    assert odeint.detect_det_zeros(traj, 1e-7, real_coefficients=True) == []


def test_detect_det_zeros_euler():
    s = coefsys.make_family("euler", {"c": 2.5})
    traj = odeint.solve_hamiltonian_frame(s, I2, Z2, (1.0, 100.0))
    zeros = odeint.detect_det_zeros(traj, 1e-7, real_coefficients=True)
    times = [z.time for z in zeros]
    assert len(times) == 2
    assert abs(times[0] - 2.2995125865799344) <= 1e-4
    assert abs(times[1] - 18.67325495830934) <= 1e-4


def test_detect_det_zeros_wants_hamiltonian_meta():
    traj = odeint.adaptive_solve(lambda t, y: np.zeros_like(y), np.zeros(8), (0.0, 1.0))
    with pytest.raises(ValueError):
        odeint.detect_det_zeros(traj)


# ---------------------------------------------------------------------------
# Scalar Riccati flows.


def test_scalar_riccati_tanh():
    traj, rec = odeint.solve_scalar_riccati(
        lambda t: 1.0, lambda t: 0.0, lambda t: -1.0, 0.0, (0.0, 1.0)
    )
    assert rec is None
    assert abs(float(traj.states[-1, 0]) - math.tanh(1.0)) <= 1e-8


def test_scalar_riccati_tan_escape():
    traj, rec = odeint.solve_scalar_riccati(
        lambda t: -1.0, lambda t: 0.0, lambda t: -1.0, 0.0, (0.0, 3.0)
    )
    assert rec is not None
    assert abs(rec.escape_time - 1.5707963) <= 1e-3
    assert rec.last_norm >= 1e6


def test_scalar_riccati_constant():
    traj, rec = odeint.solve_scalar_riccati(
        lambda t: 0.0, lambda t: 0.0, lambda t: 0.0, 5.0, (0.0, 4.0)
    )
    assert rec is None
    assert float(np.max(np.abs(traj.states[:, 0] - 5.0))) == 0.0


# ---------------------------------------------------------------------------
# Matrix Riccati flow.


def test_matrix_riccati_inverse_linear_decay():
    s = const_scenario(Z2, I2, Z2)
    traj, rec = odeint.solve_matrix_riccati(s, I2, (0.0, 1.0))
    assert rec is None
    z = odeint.riccati_z_at(traj, 1.0)
    assert mat2.norm_max(z - 0.5 * I2) <= 1e-8


def test_matrix_riccati_linear_in_c():
    # with A = B = 0 the flow is Z' = C; complex off-diagonal drift
    # exercises the imaginary component of the Hermitian parametrization
    c = np.array([[1.0, 0.5 + 2.0j], [0.5 - 2.0j, -1.0]])
    s = const_scenario(Z2, Z2, c)
    z0 = np.array([[0.5, 0.25 - 0.5j], [0.25 + 0.5j, 2.0]])
    traj, rec = odeint.solve_matrix_riccati(s, z0, (0.0, 3.0))
    assert rec is None
    for t in (0.5, 1.75, 3.0):
        z = odeint.riccati_z_at(traj, t)
        assert mat2.norm_max(z - (z0 + t * c)) <= 1e-12


def test_matrix_riccati_escape_and_g_bound():
    s = const_scenario(Z2, I2, Z2)
    traj, rec = odeint.solve_matrix_riccati(s, -I2, (0.0, 2.0))
    assert rec is not None
    assert abs(rec.escape_time - 1.0) <= 1e-3
    # G = 2 log(1 - t) has no lower bound as the escape is approached
    assert rec.g_lower_bound <= -10.0
    assert traj.meta["kind"] == "matrix_riccati"


def test_matrix_riccati_rejects_non_hermitian_start():
    s = const_scenario(Z2, I2, Z2)
    with pytest.raises(mat2.NotHermitian):
        odeint.solve_matrix_riccati(s, np.array([[0.0, 1.0], [0.0, 0.0]]), (0.0, 1.0))


def test_riccati_matches_pair_quotient():
    # Z = Psi Phi^{-1} along a nontrivial complex-coefficient flow
    rng = np.random.default_rng(33)
    a = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) * 0.3
    hb = hermitian(rng, 0.5)
    s = const_scenario(a, hb @ hb, hermitian(rng, 0.5))
    z0 = hermitian(rng, 0.4)
    pair = odeint.solve_hamiltonian(s, I2, z0 @ I2, (0.0, 1.0))
    ric, _ = odeint.solve_matrix_riccati(s, z0, (0.0, 1.0))
    for t in np.linspace(0.0, min(pair.t_end, ric.t_end), 12):
        phi, psi = odeint.phi_psi_at(pair, float(t))
        if abs(mat2.det2(phi)) < 1e-6:
            continue
        z = odeint.riccati_z_at(ric, float(t))
        assert mat2.norm_max(psi @ np.linalg.inv(phi) - z) <= 1e-7 * (
            1.0 + mat2.norm_max(z)
        )
