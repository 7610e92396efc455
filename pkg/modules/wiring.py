"""
wiring.py - Bus de señales con lista blanca por controlador

Cada lazo publica las mediciones del paso en un SignalBus y el
controlador solo puede leer las señales declaradas. Así la realimentación
de salida (sin velocidad) queda verificada en tiempo de ejecución.
"""

from typing import Dict, FrozenSet, Iterable, Set

import numpy as np

from .errors import ConfigurationError, WiringViolation

# Señales que cada controlador puede leer. Las ausencias importan:
# masa puntual sin "v", espacio de tarea sin "x_dot", nave sin "omega".
CONTROLLER_SIGNALS: Dict[str, FrozenSet[str]] = {
    "slotine-li": frozenset({"q", "dq", "z", "dz", "theta_hat"}),
    "baseline": frozenset({"q", "dq", "theta_hat", "neighbors", "delay_rate", "impulse"}),
    "pointmass": frozenset({"x", "z", "dz", "int_z", "eta", "m_hat"}),
    "tpv-continuous": frozenset({"x", "v", "R", "sigma", "neighbors"}),
    "tpv-differentiable": frozenset({"x", "v", "R", "sigma", "z", "dz", "ddz"}),
    "tpv-adaptive": frozenset({"x", "v", "R", "sigma", "z", "dz", "ddz", "m_hat"}),
    "taskspace": frozenset({"q", "dq", "x", "z", "dz", "theta_hat", "kin_hat"}),
    "spacecraft": frozenset({"q", "z", "dz", "q_z", "y", "h"}),
}


class SignalBus:
    """Señales de un paso para un controlador concreto."""

    def __init__(self, controller: str, allowed: Iterable[str] = None):
        if allowed is None:
            if controller not in CONTROLLER_SIGNALS:
                raise ConfigurationError(f"controlador sin lista blanca: '{controller}'")
            allowed = CONTROLLER_SIGNALS[controller]
        self.controller = controller
        self.allowed = frozenset(allowed)
        self._signals: Dict[str, object] = {}
        self.reads: Set[str] = set()

    def publish(self, **signals) -> "SignalBus":
        self._signals.update(signals)
        return self

    def clear(self) -> None:
        self._signals.clear()

    def read(self, name: str):
        if name not in self.allowed:
            raise WiringViolation(f"{self.controller} leyo '{name}' fuera de su lista blanca")
        if name not in self._signals:
            raise WiringViolation(f"{self.controller}: senal '{name}' no publicada")
        self.reads.add(name)
        value = self._signals[name]
        return np.array(value, copy=True) if isinstance(value, np.ndarray) else value

    def __getitem__(self, name: str):
        return self.read(name)


def verify_order(required: int, produced: int, label: str = "") -> None:
    """El controlador no puede consumir derivadas de z que el generador no produce."""
    if required > produced:
        raise ConfigurationError(
            f"{label}: el controlador consume d^{required - 1}z pero el generador "
            f"solo expone hasta d^{produced - 1}z")


def forbidden_reads(bus: SignalBus, forbidden: Iterable[str]) -> Set[str]:
    """Señales prohibidas que se hayan leído (debe quedar vacío)."""
    return bus.reads & set(forbidden)
