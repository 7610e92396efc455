"""
errors.py - Excepciones del simulador Consenso-Py

Jerarquía:
    ConsensoError
    ├── ConfigurationError (también ValueError)
    │   └── GraphError
    ├── HistoryError
    ├── ModelError
    ├── WiringViolation
    └── SimulationAbort
"""

from typing import Optional


# =============================================================================
# EXCEPCIONES PERSONALIZADAS
# =============================================================================

class ConsensoError(Exception):
    """Raíz de todos los errores del simulador."""
    pass


class ConfigurationError(ConsensoError, ValueError):
    """Escenario inválido: error de parseo o invariante violada al cargar."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (linea {line}, columna {column})"
        super().__init__(message)


class GraphError(ConfigurationError):
    """Grafo o calendario de conmutación inválido."""
    pass


class HistoryError(ConsensoError):
    """Consulta retardada más antigua que el horizonte retenido."""
    pass


class ModelError(ConsensoError):
    """Fallo al resolver la dinámica de la planta (indica un bug del modelo)."""
    pass


class WiringViolation(ConsensoError):
    """Un controlador leyó una señal fuera de su lista blanca."""
    pass


class SimulationAbort(ConsensoError):
    """
    Interrupción controlada de una corrida.

    kind: 'divergence' | 'singularity' | 'thrust-floor'
    """

    def __init__(self, kind: str, message: str, t: float = 0.0, agent: int = -1, value: float = 0.0):
        self.kind = kind
        self.t = t
        self.agent = agent
        self.value = value
        super().__init__(f"[{kind}] t={t:.6g} agente={agent}: {message}")
