from abc import ABC, abstractmethod
from typing import Dict, List, Optional

import numpy as np


class ILagrangianModel(ABC):
    """
    Interfaz abstracta de una planta Lagrangiana
        M(q) q'' + C(q, q') q' + g(q) = tau
    lineal en el vector de parámetros dinámicos theta:
        Y(q, q', zeta, zeta') theta = M zeta' + C zeta + g
    """

    @property
    @abstractmethod
    def dof(self) -> int:
        """Grados de libertad m."""
        pass

    @property
    @abstractmethod
    def params(self) -> np.ndarray:
        """Parámetros dinámicos verdaderos (privilegio de simulación)."""
        pass

    @abstractmethod
    def inertia(self, q: np.ndarray) -> np.ndarray:
        """M(q), simétrica definida positiva."""
        pass

    @abstractmethod
    def coriolis(self, q: np.ndarray, dq: np.ndarray) -> np.ndarray:
        """C(q, q') en forma de Christoffel (M' - 2C antisimétrica)."""
        pass

    @abstractmethod
    def gravity(self, q: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def regressor(self, q: np.ndarray, dq: np.ndarray, zeta: np.ndarray, dzeta: np.ndarray) -> np.ndarray:
        """Y(q, q', zeta, zeta') de tamaño m × p."""
        pass


class IClosedLoop(ABC):
    """
    Contrato de un lazo cerrado integrable por sim.step / sim.run.

    El estado es un diccionario nombre -> np.ndarray; la derivada devuelve
    las mismas claves. Los lazos son dueños de sus historiales de retardo.
    """

    kind: str = ""

    @abstractmethod
    def initial_state(self) -> Dict[str, np.ndarray]:
        pass

    @abstractmethod
    def begin_step(self, t: float, x: Dict[str, np.ndarray], h: float) -> None:
        """Prepara el contexto del paso [t, t+h] (grafo activo, impulsos)."""
        pass

    @abstractmethod
    def derivative(self, t: float, x: Dict[str, np.ndarray], stage_end: bool = False) -> Dict[str, np.ndarray]:
        pass

    @abstractmethod
    def post_step(self, t: float, x: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """Renormalización y registro en los historiales tras aceptar un paso."""
        pass

    @abstractmethod
    def outputs(self, t: float, x: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """Canales muestreados para el RunRecord."""
        pass

    def lyapunov(self, t: float, x: Dict[str, np.ndarray]) -> Optional[np.ndarray]:
        """Función de Lyapunov por agente, o None si no aplica."""
        return None

    def check(self, t: float, x: Dict[str, np.ndarray]) -> None:
        """Verificaciones que pueden lanzar SimulationAbort."""
        pass

    def switch_instants(self) -> List[float]:
        return []
