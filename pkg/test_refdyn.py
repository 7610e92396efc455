"""
Pruebas de las dinámicas de referencia (generadores de z).

Ejecutar con: pytest test_refdyn.py
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from modules.errors import ConfigurationError, SimulationAbort
from modules.models import TwoLinkArm, jacobian
from modules.refdyn import (CONSENSUS_VARIANTS, LeaderProfile, NeighborSample, RefDynState, TrackingAux,
                            consensus_order, consensus_ref_deriv, consensus_ref_deriv_manip, hurwitz_from_roots,
                            leader_bound, pointmass_ref_deriv, spacecraft_ref_deriv, taskspace_ref_deriv,
                            tpv_ref_deriv, tracking_integral_rates, tracking_ref_deriv)


def test_coeficientes_de_hurwitz():
    poly = hurwitz_from_roots([2.0, 1.0])
    assert poly.roots == (1.0, 2.0)
    assert poly.coeffs == pytest.approx((2.0, 3.0))
    assert poly.kappa0 == 1.0
    spec3 = hurwitz_from_roots([1.0, 2.0, 3.0])
    assert spec3.coeffs == pytest.approx((6.0, 11.0, 6.0))


def test_recuperacion_de_raices():
    rng = np.random.default_rng(7)
    for l in range(1, 6):
        roots = np.sort(rng.uniform(0.5, 4.0, size=l))
        poly = hurwitz_from_roots(roots)
        eig = np.sort(-np.linalg.eigvals(poly.companion()).real)
        assert np.max(np.abs(eig - roots)) <= 1e-8


def test_raices_invalidas():
    with pytest.raises(ConfigurationError, match="strictly positive"):
        hurwitz_from_roots([1.0, -2.0])
    with pytest.raises(ConfigurationError):
        hurwitz_from_roots([])


def test_orden_por_variante():
    assert consensus_order("first-order", hurwitz_from_roots([1.0])) == 1
    assert consensus_order("high-order-position", hurwitz_from_roots([1, 2, 3])) == 3
    with pytest.raises(ConfigurationError):
        consensus_order("second-order-switching", hurwitz_from_roots([1.0]))
    with pytest.raises(ConfigurationError):
        consensus_order("high-order-position", hurwitz_from_roots([1.0]))
    with pytest.raises(ConfigurationError):
        consensus_order("third-order", hurwitz_from_roots([1.0]))
    with pytest.raises(ConfigurationError):
        RefDynState(order=2, stack=np.zeros((3, 2)))


def test_consenso_es_equilibrio_de_todas_las_variantes():
    q = np.array([0.3, -0.2])
    zero = np.zeros(2)
    nbs = [NeighborSample(1.0, q.copy(), zero.copy()), NeighborSample(0.5, q.copy(), zero.copy())]
    for variant, (order, uses_acc, _) in CONSENSUS_VARIANTS.items():
        poly = hurwitz_from_roots([1.0, 2.0, 3.0][:order or 3])
        stack = np.zeros((poly.order, 2))
        out = consensus_ref_deriv(variant, stack, q, zero, nbs, poly, ddq=zero if uses_acc else None)
        np.testing.assert_allclose(out, 0.0, atol=1e-14, err_msg=variant)


def test_segundo_orden_fijo_a_mano():
    poly = hurwitz_from_roots([1.0, 2.0])
    q, dq, ddq = np.array([1.0]), np.array([0.5]), np.array([0.1])
    nb = NeighborSample(2.0, np.array([0.0]), np.array([0.2]))
    # ξ = 1.5, ξ' = 0.6, ξ_j = 0.2 -> Σ = 2 (0.6 + 2·1.5 - 2·0.2) = 6.4
    out = consensus_ref_deriv("second-order-fixed", np.zeros((2, 1)), q, dq, [nb], poly, ddq=ddq)
    np.testing.assert_allclose(out, [-3 * 0.1 - 2 * 0.5 - 6.4])
    with pytest.raises(ConfigurationError):
        consensus_ref_deriv("second-order-fixed", np.zeros((2, 1)), q, dq, [nb], poly)


def test_velocidad_relativa_agrega_termino_del_vecino():
    poly = hurwitz_from_roots([1.0, 2.0])
    q, dq = np.array([0.4]), np.array([0.1])
    stack = np.array([[0.0], [0.3]])
    nb = NeighborSample(1.5, np.array([-0.2]), np.array([0.7]))
    pos = consensus_ref_deriv("high-order-position", stack, q, dq, [nb], poly)
    rel = consensus_ref_deriv("high-order-relative-velocity", stack, q, dq, [nb], poly)
    # α0 / κ0 = 2 / 1
    np.testing.assert_allclose(rel - pos, [1.5 * 2.0 * 0.7])


def test_manipulabilidad_suma_lambda_s():
    poly = hurwitz_from_roots([1.0, 2.0])
    q, dq, ddq, s = np.ones(2), np.zeros(2), np.zeros(2), np.array([0.1, -0.3])
    nbs = [NeighborSample(1.0, np.zeros(2), np.zeros(2))]
    base = consensus_ref_deriv("second-order-fixed", np.zeros((2, 2)), q, dq, nbs, poly, ddq=ddq)
    out = consensus_ref_deriv_manip(np.zeros((2, 2)), q, dq, nbs, poly, ddq, 2.0, s)
    np.testing.assert_allclose(out - base, 2.0 * s)


def test_tpv_equilibrio_y_vecinos():
    x = np.array([1.0, 2.0, 3.0])
    stack = np.zeros((3, 3))
    same = [NeighborSample(1.0, x.copy())]
    np.testing.assert_allclose(tpv_ref_deriv(stack, x, np.zeros(3), same, 1.0, 2.0, 3.0), 0.0)
    other = [NeighborSample(1.0, x - 1.0)]
    # solo entra c3 (x_i - x_j) = 6
    np.testing.assert_allclose(tpv_ref_deriv(stack, x, np.zeros(3), other, 1.0, 2.0, 3.0), -6.0)


def test_espacio_de_tarea_singular_aborta():
    arm = TwoLinkArm()
    q = np.array([0.3, 0.0])
    J = jacobian(arm, q)
    with pytest.raises(SimulationAbort) as info:
        taskspace_ref_deriv(np.zeros(2), q, np.zeros(2), np.zeros(2), arm.kinematic_params, np.zeros(2),
                            J, np.ones(2), np.zeros(2), 5.0, np.eye(2), t=1.5)
    assert info.value.kind == "singularity"


def test_espacio_de_tarea_sobre_la_referencia():
    arm = TwoLinkArm()
    q = np.array([0.3, 1.2])
    J = jacobian(arm, q)
    dxd = np.array([0.05, -0.02])
    z_r = np.linalg.solve(J, dxd)
    dz, zr, dzr = taskspace_ref_deriv(z_r, q, z_r, np.zeros(2), arm.kinematic_params, np.zeros(2),
                                      J, dxd, np.zeros(2), 5.0, 50.0 * np.eye(2))
    np.testing.assert_allclose(zr, z_r)
    np.testing.assert_allclose(dz, dzr)


def test_actitud_en_la_referencia():
    R = np.eye(3)
    w = np.array([0.0, 0.0, 0.3])
    dw = np.array([0.0, 0.0, -0.1])
    out = spacecraft_ref_deriv(w.copy(), R, w, dw, np.zeros(3), 2.0, 4.0)
    np.testing.assert_allclose(out, dw)


def test_cota_del_lider():
    leader = LeaderProfile.from_dict({"amplitude": 0.5, "frequency": 1.0}, 2)
    # |iα + (i)²| = √2 con α = 1
    assert leader_bound("order2-sign", leader, 1.0, 2.0) == pytest.approx(0.5 * np.sqrt(2.0))
    ts = np.linspace(0.0, 2 * np.pi, 20001)
    sampled = max(np.max(np.abs(leader.derivative(t, 3) + 2.0 * leader.derivative(t, 2)
                                + 1.0 * leader.derivative(t, 1))) for t in ts)
    assert leader_bound("order3-accel-sharing", leader, 1.0, 2.0) == pytest.approx(sampled, rel=1e-6)
    with pytest.raises(ConfigurationError):
        LeaderProfile.from_dict({"amplitude": [0.5, 0.5, 0.5]}, 2)


def test_derivadas_del_lider():
    leader = LeaderProfile.from_dict({"amplitude": [0.5, 0.2], "frequency": [1.0, 2.0],
                                      "phase": 0.3, "offset": [0.1, 0.0]}, 2)
    t, eps = 0.7, 1e-6
    for k in range(3):
        num = (leader.derivative(t + eps, k) - leader.derivative(t - eps, k)) / (2 * eps)
        np.testing.assert_allclose(num, leader.derivative(t, k + 1), atol=1e-7)


def test_gamma_debe_dominar_la_cota():
    with pytest.raises(ConfigurationError, match="gamma must exceed sup\\|xi0_dot\\| = 2"):
        TrackingAux(alpha=1.0, beta=2.0, gamma=1.5, bound=2.0)
    TrackingAux(alpha=1.0, beta=2.0, gamma=3.0, bound=2.0)


def test_seguimiento_con_signo():
    aux = TrackingAux(alpha=1.0, beta=2.0, gamma=3.0, bound=1.0)
    q, dq = np.array([0.5, 0.0]), np.array([0.1, 0.0])
    nb = NeighborSample(1.0, np.zeros(2), np.zeros(2))
    out = tracking_ref_deriv("order2-sign", q, dq, [nb], aux)
    # e = ξ_i = [0.6, 0]; sgn(0) = 0
    np.testing.assert_allclose(out, [-0.1 - 0.6 - 3.0, 0.0])
    with pytest.raises(ConfigurationError):
        tracking_ref_deriv("order3-accel-sharing", q, dq, [nb], aux)
    with pytest.raises(ConfigurationError):
        tracking_ref_deriv("order4", q, dq, [nb], aux)


def test_seguimiento_sin_aceleracion():
    aux = TrackingAux(alpha=1.0, beta=2.0, gamma=3.0, bound=1.0)
    q, dq = np.array([0.2]), np.array([0.4])
    nb = NeighborSample(2.0, np.array([0.0]), np.array([0.1]), dz=np.array([0.0]))
    i1, i2 = np.array([0.3]), np.array([-1.0])
    out = tracking_ref_deriv("order3-integral", q, dq, [nb], aux, integrals=(i1, i2), c_star=np.array([0.05]))
    np.testing.assert_allclose(out, [-0.8 - 0.2 - 2.0 * 0.3 - 0.3 + 3.0 + 0.05])
    rate1, rate2 = tracking_integral_rates(q, dq, np.array([0.5]), [nb], aux)
    # own = 2·0.4 + 0.2 = 1.0, other = 0.2
    np.testing.assert_allclose(rate1, [2.0 * 0.8])
    np.testing.assert_allclose(rate2, [1.0])


def test_masa_puntual_sobre_la_referencia():
    xd, dxd, ddxd, dddxd = 0.3, 0.9, -0.3, -0.9
    stack = np.array([[dxd], [ddxd]])
    out = pointmass_ref_deriv(stack, np.array([xd]), xd, dxd, ddxd, dddxd, (6.0, 11.0, 6.0))
    np.testing.assert_allclose(out, [dddxd])
