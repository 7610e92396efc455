import logging
import queue
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def configurar_logging(level: str = "INFO") -> None:
    """Configura el logging raíz una sola vez (idempotente)."""
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO), format=LOG_FORMAT)


@dataclass(frozen=True)
class RunEvent:
    """Evento de una corrida, siempre sobre la grilla de integración."""
    t: float
    kind: str
    agent: int = -1
    value: float = 0.0
    message: str = ""


class RunLogger:
    """
    Cola de eventos de una corrida.

    Cada evento se reenvía a logging y queda en la cola hasta que
    el RunRecord lo drena con get_events().
    """

    def __init__(self, name: str = "run"):
        self.name = name
        self.event_queue: "queue.Queue[RunEvent]" = queue.Queue()
        self._logger = logging.getLogger("modules.sim")

    def log(self, t: float, kind: str, message: str = "", agent: int = -1,
            value: float = 0.0, level: int = logging.INFO) -> RunEvent:
        event = RunEvent(t=float(t), kind=kind, agent=int(agent), value=float(value), message=message)
        self.event_queue.put(event)
        self._logger.log(level, f"[SIM] {self.name} t={t:.6g} {kind} agente={agent} {message}")
        return event

    def get_events(self) -> List[RunEvent]:
        events = []
        while not self.event_queue.empty():
            events.append(self.event_queue.get_nowait())
        return events


# =============================================================================
# GANANCIAS
# =============================================================================

def as_spd_matrix(value, dim: int, name: str) -> np.ndarray:
    """
    Convierte una ganancia declarada (escalar, diagonal o matriz) a una
    matriz dim×dim simétrica definida positiva.
    """
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        mat = float(arr) * np.eye(dim)
    elif arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ConfigurationError(f"{name}: se esperaban {dim} valores diagonales, hay {arr.shape[0]}")
        mat = np.diag(arr)
    elif arr.shape == (dim, dim):
        mat = arr.copy()
    else:
        raise ConfigurationError(f"{name}: dimension {arr.shape} incompatible con {dim}")
    if not np.allclose(mat, mat.T, atol=1e-12):
        raise ConfigurationError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(mat)) <= 0.0:
        raise ConfigurationError(f"{name} must be positive definite")
    return mat


def positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0.0:
        raise ConfigurationError(f"{name} must be positive (got {value})")
    return value


def sgn(x) -> np.ndarray:
    """Signo por componente con sgn(0) = 0."""
    return np.sign(np.asarray(x, dtype=float))


def max_pairwise_distance(points: Sequence[np.ndarray]) -> float:
    """Máxima distancia euclídea entre pares de filas."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.max(np.linalg.norm(diff, axis=-1)))


def fmt(value: Optional[float]) -> str:
    """Formato determinista para tablas."""
    if value is None:
        return ""
    return f"{float(value):.12g}"
