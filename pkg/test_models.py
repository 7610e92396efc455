"""
Pruebas estructurales de las plantas: regresores, antisimetría, cinemática y SO(3).

Ejecutar con: pytest test_models.py
"""

import os
import sys

import numpy as np
import pytest
from scipy.linalg import expm

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from modules.errors import ConfigurationError
from modules.models import (E3, AttitudeProfile, EulerParam, PointMass, SpacecraftState, TpvState, TwoLinkArm,
                            d_matrix, desired_attitude_profile, desired_attitude_quat, euler_error,
                            forward_kinematics, jacobian, jacobian_rate, kinematic_regressor,
                            lagrangian_accel, orthonormalize, plant_from_dict, quat_from_axis_angle,
                            quat_kinematics, quat_kinematics_inertial, quat_multiply, quat_normalize,
                            rotation_from_quat, skew, spacecraft_derivative, tpv_accel, tpv_derivative, unskew)

RNG = np.random.default_rng(2024)


def _rel(a, b):
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))


def test_regresor_dinamico_brazo():
    arm = TwoLinkArm()
    theta = arm.params
    worst = 0.0
    for _ in range(1000):
        q, dq, zeta, dzeta = RNG.uniform(-3, 3, size=(4, 2))
        lhs = arm.regressor(q, dq, zeta, dzeta) @ theta
        rhs = arm.inertia(q) @ dzeta + arm.coriolis(q, dq) @ zeta + arm.gravity(q)
        worst = max(worst, _rel(lhs, rhs))
    assert worst <= 1e-9


def test_regresor_masa_puntual():
    pm = PointMass(mass=2.5, dim=3)
    for _ in range(1000):
        q, dq, zeta, dzeta = RNG.uniform(-3, 3, size=(4, 3))
        lhs = pm.regressor(q, dq, zeta, dzeta) @ pm.params
        rhs = pm.inertia(q) @ dzeta + pm.coriolis(q, dq) @ zeta + pm.gravity(q)
        assert _rel(lhs, rhs) <= 1e-9


def test_antisimetria_mdot_menos_2c():
    arm = TwoLinkArm()
    eps = 1e-6
    for _ in range(200):
        q, dq, x = RNG.uniform(-3, 3, size=(3, 2))
        Mdot = (arm.inertia(q + eps * dq) - arm.inertia(q - eps * dq)) / (2 * eps)
        assert abs(x @ (Mdot - 2.0 * arm.coriolis(q, dq)) @ x) <= 1e-5


def test_inercia_definida_positiva():
    arm = TwoLinkArm()
    for _ in range(200):
        q = RNG.uniform(-np.pi, np.pi, size=2)
        assert np.min(np.linalg.eigvalsh(arm.inertia(q))) > 0.0


def test_regresor_cinematico():
    arm = TwoLinkArm()
    for _ in range(1000):
        q, xi = RNG.uniform(-3, 3, size=(2, 2))
        theta = RNG.uniform(0.1, 1.0, size=2)
        assert _rel(jacobian(arm, q, theta) @ xi, kinematic_regressor(q, xi) @ theta) <= 1e-9


def test_jacobiano_por_diferencias():
    arm = TwoLinkArm()
    q = np.array([0.3, 1.2])
    eps = 1e-6
    J = np.column_stack([(forward_kinematics(arm, q + eps * e) - forward_kinematics(arm, q - eps * e)) / (2 * eps)
                         for e in np.eye(2)])
    np.testing.assert_allclose(J, jacobian(arm, q), atol=1e-8)


def test_derivada_del_jacobiano():
    q, dq = np.array([0.4, 0.9]), np.array([0.7, -0.3])
    th, dth = np.array([0.45, 0.35]), np.array([0.02, -0.05])
    eps = 1e-6
    arm = TwoLinkArm()
    num = (jacobian(arm, q + eps * dq, th + eps * dth) - jacobian(arm, q - eps * dq, th - eps * dth)) / (2 * eps)
    np.testing.assert_allclose(jacobian_rate(q, dq, th, dth), num, atol=1e-8)


def test_aceleracion_lagrangiana_equilibrio():
    arm = TwoLinkArm()
    q = np.array([0.2, -0.4])
    acc = lagrangian_accel(arm, q, np.zeros(2), arm.gravity(q))
    np.testing.assert_allclose(acc, 0.0, atol=1e-12)


def test_planta_desde_diccionario():
    assert isinstance(plant_from_dict({"type": "two-link-arm", "m1": 2.0}), TwoLinkArm)
    pm = plant_from_dict({"type": "point-mass", "mass": 3.0, "dim": 2})
    assert pm.dof == 2 and pm.params[0] == 3.0
    with pytest.raises(ConfigurationError):
        plant_from_dict({"type": "quadrotor"})
    with pytest.raises(ConfigurationError):
        plant_from_dict({"type": "two-link-arm", "masa": 1.0})
    with pytest.raises(ConfigurationError):
        TwoLinkArm(m1=-1.0)


def test_rotacion_contra_exponencial():
    for _ in range(100):
        n = RNG.normal(size=3)
        n /= np.linalg.norm(n)
        a = RNG.uniform(-np.pi, np.pi)
        R = rotation_from_quat(quat_from_axis_angle(n, a))
        np.testing.assert_allclose(R, expm(a * skew(n)), atol=1e-12)


def test_skew_y_ortonormalizacion():
    b, c = RNG.normal(size=(2, 3))
    np.testing.assert_allclose(skew(b) @ c, np.cross(b, c))
    np.testing.assert_array_equal(unskew(skew(b)), b)
    R = rotation_from_quat(quat_from_axis_angle([1, 2, 3], 0.7)) + 1e-4 * RNG.normal(size=(3, 3))
    U = orthonormalize(R)
    np.testing.assert_allclose(U.T @ U, np.eye(3), atol=1e-12)
    assert np.linalg.det(U) == pytest.approx(1.0)


def test_error_de_euler():
    q = quat_from_axis_angle([0, 0, 1], 0.4)
    same = euler_error(EulerParam.from_array(q), EulerParam.from_array(q))
    np.testing.assert_allclose(same.array, EulerParam.identity().array, atol=1e-15)
    qz = quat_from_axis_angle([0, 1, 0], -0.3)
    err = euler_error(EulerParam.from_array(q), EulerParam.from_array(qz))
    conj = np.concatenate([-qz[:3], [qz[3]]])
    np.testing.assert_allclose(err.array, quat_multiply(conj, q), atol=1e-14)
    assert err.norm() == pytest.approx(1.0)


def test_cinematica_de_cuaternion():
    q = quat_normalize(np.array([0.1, -0.2, 0.3, 0.9]))
    w = np.array([0.3, -0.1, 0.5])
    eps = 1e-6
    R = rotation_from_quat(q)
    # S(ω) = Rᵀ R' con ω en el cuerpo
    dq = quat_kinematics(q, w)
    Rdot = (rotation_from_quat(q + eps * dq) - rotation_from_quat(q - eps * dq)) / (2 * eps)
    np.testing.assert_allclose(R.T @ Rdot, skew(w), atol=1e-8)
    np.testing.assert_allclose(quat_kinematics_inertial(q, R @ w), dq, atol=1e-13)
    assert d_matrix(q).shape == (4, 3)


def test_tpv_en_vuelo_estacionario():
    state = TpvState(x=np.zeros(3), v=np.zeros(3), sigma=9.81, mass=1.0, gravity=9.81)
    dx, dv, dR = tpv_derivative(state, 9.81, np.zeros(3))
    np.testing.assert_allclose(dv, 0.0, atol=1e-15)
    np.testing.assert_allclose(dR, 0.0)
    np.testing.assert_allclose(tpv_accel(np.eye(3), 0.0, 1.0, 9.81), 9.81 * E3)


def test_nave_conserva_energia_sin_torque():
    M = np.array([[1.0, 0.1, 0.0], [0.1, 1.5, 0.0], [0.0, 0.0, 2.0]])
    s = SpacecraftState(attitude=quat_from_axis_angle([1, 1, 0], 0.3), omega=np.array([0.2, -0.1, 0.4]),
                        inertia=M, h_I=np.array([0.1, 0.05, 0.2]))
    _, dw = spacecraft_derivative(s, np.zeros(3))
    assert s.omega @ M @ dw == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ConfigurationError):
        SpacecraftState(attitude=np.array([0, 0, 0, 1.0]), omega=np.zeros(3), inertia=-M, h_I=np.zeros(3))


def test_perfil_de_actitud_deseada():
    profile = AttitudeProfile(axes=((0.0, 0.0, 1.0), (1.0, 0.0, 0.0)), amplitudes=(0.5, 0.2),
                              periods=(10.0, 7.0), phases=(0.0, 0.3))
    t, eps = 1.3, 1e-5
    (R, dR, ddR), (w, dw) = desired_attitude_profile(profile, t)
    (Rp, dRp, _), (wp, _) = desired_attitude_profile(profile, t + eps)
    (Rm, dRm, _), (wm, _) = desired_attitude_profile(profile, t - eps)
    np.testing.assert_allclose((Rp - Rm) / (2 * eps), dR, atol=1e-8)
    np.testing.assert_allclose((dRp - dRm) / (2 * eps), ddR, atol=1e-7)
    np.testing.assert_allclose((wp - wm) / (2 * eps), dw, atol=1e-7)
    np.testing.assert_allclose(rotation_from_quat(desired_attitude_quat(profile, t)), R, atol=1e-12)
    with pytest.raises(ConfigurationError):
        AttitudeProfile(periods=(0.0,))
