"""
Pruebas del bus de señales: listas blancas y órdenes de derivada.

Ejecutar con: pytest test_wiring.py
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from modules.errors import ConfigurationError, WiringViolation
from modules.wiring import CONTROLLER_SIGNALS, SignalBus, forbidden_reads, verify_order


def test_lectura_permitida_devuelve_copia():
    bus = SignalBus("pointmass").publish(x=np.array([1.0]), z=np.array([0.0]))
    x = bus.read("x")
    x[0] = 5.0
    np.testing.assert_array_equal(bus["x"], [1.0])
    assert bus.reads == {"x"}


def test_realimentacion_de_salida_sin_velocidad():
    bus = SignalBus("pointmass").publish(x=np.zeros(1), v=np.ones(1))
    with pytest.raises(WiringViolation, match="'v'"):
        bus.read("v")
    assert forbidden_reads(bus, {"v"}) == set()
    for controller, signal in (("taskspace", "x_dot"), ("spacecraft", "omega")):
        assert signal not in CONTROLLER_SIGNALS[controller]
        with pytest.raises(WiringViolation):
            SignalBus(controller).publish(**{signal: np.zeros(3)}).read(signal)


def test_senal_no_publicada():
    bus = SignalBus("slotine-li")
    with pytest.raises(WiringViolation, match="no publicada"):
        bus.read("q")
    bus.publish(q=np.zeros(2))
    bus.clear()
    with pytest.raises(WiringViolation):
        bus.read("q")


def test_controlador_desconocido_y_lista_explicita():
    with pytest.raises(ConfigurationError):
        SignalBus("pid")
    bus = SignalBus("custom", allowed={"q"}).publish(q=1.0, dq=2.0)
    assert bus.read("q") == 1.0
    with pytest.raises(WiringViolation):
        bus.read("dq")


def test_orden_de_derivadas():
    verify_order(2, 3, "tpv")
    verify_order(3, 3, "tpv")
    with pytest.raises(ConfigurationError, match="d\\^2z"):
        verify_order(3, 2, "tpv")
