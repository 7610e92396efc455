"""
Pruebas de perfiles de retardo e historiales.

Ejecutar con: pytest test_delay.py
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from modules.delay import (DelayProfile, HistoryBuffer, delay_at, delay_rate, record, sample_delayed,
                           validate_profile)
from modules.errors import ConfigurationError, HistoryError
from modules.scenarios import standard_delay


def test_perfil_senoidal_con_salto():
    p = DelayProfile.from_dict(standard_delay(10.0))
    assert delay_at(p, 0.0) == pytest.approx(0.2)
    assert delay_at(p, np.pi / 2) == pytest.approx(0.3)
    # continuo por la derecha: en t = 10 ya incluye el salto
    assert delay_at(p, 10.0) - delay_at(p, 10.0, left_limit=True) == pytest.approx(0.1)
    assert delay_rate(p, 0.0) == pytest.approx(0.1)
    assert p.jump_times == [10.0]


def test_perfil_por_tramos():
    p = DelayProfile(kind="piecewise", jumps=((0.0, 0.1), (2.0, 0.3)), bound=0.5)
    assert delay_at(p, 1.0) == 0.1
    assert delay_at(p, 2.0) == 0.3
    assert delay_at(p, 2.0, left_limit=True) == 0.1
    assert delay_rate(p, 1.0) == 0.0
    with pytest.raises(ConfigurationError):
        DelayProfile(kind="piecewise", jumps=((1.0, 0.1),))


def test_validacion_de_cota():
    validate_profile(DelayProfile.from_dict(standard_delay(10.0)), 20.0, 0.01)
    with pytest.raises(ConfigurationError, match="T_max"):
        validate_profile(DelayProfile(kind="constant", base=0.6, bound=0.5), 1.0, 0.01)
    with pytest.raises(ConfigurationError):
        DelayProfile(kind="exponential")
    with pytest.raises(ConfigurationError):
        DelayProfile(bound=0.0)


def test_retencion_constante_antes_de_t0():
    b = HistoryBuffer([1.0, 2.0], horizon=1.0)
    record(b, 0.0, [1.0, 2.0])
    record(b, 0.1, [3.0, 4.0])
    np.testing.assert_array_equal(sample_delayed(b, 0.1, 0.5), [1.0, 2.0])


def test_retardo_cero_devuelve_el_valor_actual():
    b = HistoryBuffer([0.0], horizon=1.0)
    record(b, 0.0, [0.0])
    record(b, 0.1, [1.0])
    np.testing.assert_array_equal(sample_delayed(b, 0.1, 0.0), [1.0])
    # con la etapa actual se interpola entre la última muestra y `current`
    np.testing.assert_allclose(sample_delayed(b, 0.2, 0.05, current=[3.0]), [2.0])


def test_interpolacion_lineal():
    b = HistoryBuffer([0.0], horizon=5.0)
    for k in range(11):
        record(b, 0.1 * k, [0.1 * k])
    np.testing.assert_allclose(sample_delayed(b, 1.0, 0.35), [0.65], atol=1e-12)


def test_tiempo_no_monotono():
    b = HistoryBuffer([0.0], horizon=1.0)
    record(b, 0.0, [0.0])
    with pytest.raises(HistoryError):
        record(b, 0.0, [1.0])


def test_consulta_fuera_del_horizonte():
    b = HistoryBuffer([0.0], horizon=0.2)
    for k in range(100):
        record(b, 0.01 * k, [float(k)])
    with pytest.raises(HistoryError):
        sample_delayed(b, 0.99, 0.9)
    # lo retenido sigue siendo consultable
    sample_delayed(b, 0.99, 0.15)


def test_error_de_interpolacion_en_una_senoide():
    h, w = 0.05, 3.0
    b = HistoryBuffer([0.0], horizon=10.0)
    times = np.arange(0.0, 2 * np.pi + h / 2, h)
    for t in times:
        record(b, t, [np.sin(w * t)])
    bound = h ** 2 * w ** 2 / 8.0
    rng = np.random.default_rng(3)
    t_now = times[-1]
    for delay in rng.uniform(0.0, t_now - 0.1, size=500):
        got = sample_delayed(b, t_now, delay)[0]
        assert abs(got - np.sin(w * (t_now - delay))) <= bound + 1e-12


def test_la_consulta_no_comparte_memoria_con_el_historial():
    b = HistoryBuffer([5.0], horizon=1.0)
    record(b, 0.0, [1.0])
    record(b, 0.1, [2.0])
    for delay in (0.0, 0.1, 0.5):
        out = sample_delayed(b, 0.1, delay)
        out += 100.0
    np.testing.assert_array_equal(sample_delayed(b, 0.1, 0.0), [2.0])
    np.testing.assert_array_equal(sample_delayed(b, 0.1, 0.1), [1.0])
    np.testing.assert_array_equal(sample_delayed(b, 0.1, 0.5), [5.0])
