"""
graph.py - Grafos dirigidos ponderados y calendarios de conmutación

Convención: w[i, j] > 0 significa que el agente i RECIBE del agente j
(arista i -> j). Un árbol de expansión existe cuando hay un vértice raíz
alcanzable desde todos los demás siguiendo esas aristas.
"""

import bisect
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import GraphError


# =============================================================================
# TIPOS
# =============================================================================

@dataclass(frozen=True)
class DirectedGraph:
    """Grafo dirigido ponderado de n agentes. Inmutable."""
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError(f"la matriz de pesos debe ser cuadrada, forma {w.shape}")
        if np.any(np.diag(w) != 0.0):
            raise GraphError("w_ii debe ser 0 para todo i")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise GraphError("todos los pesos w_ij deben ser finitos y >= 0")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def neighbors(self, i: int) -> List[int]:
        """N_i = {j | w_ij > 0}."""
        return [int(j) for j in np.flatnonzero(self.weights[i] > 0.0)]

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n))
        rows, cols = np.nonzero(self.weights > 0.0)
        g.add_edges_from(zip(rows.tolist(), cols.tolist()))
        return g

    def __eq__(self, other):
        return isinstance(other, DirectedGraph) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())


@dataclass(frozen=True)
class SwitchingSchedule:
    """
    Plan de conmutación: en [t_k, t_k+1) está activo graphs[active_index[k]].
    Tras el último instante persiste el último grafo.
    """
    graphs: Tuple[DirectedGraph, ...]
    switch_times: Tuple[float, ...]
    active_index: Tuple[int, ...]
    dwell: float

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        object.__setattr__(self, "switch_times", tuple(float(t) for t in self.switch_times))
        object.__setattr__(self, "active_index", tuple(int(k) for k in self.active_index))
        if not self.graphs:
            raise GraphError("el calendario necesita al menos un grafo")
        if len({g.n for g in self.graphs}) != 1:
            raise GraphError("todos los grafos deben compartir el mismo n")
        if not self.switch_times or self.switch_times[0] != 0.0:
            raise GraphError("switch_times debe empezar en t_0 = 0")
        if len(self.switch_times) != len(self.active_index):
            raise GraphError("switch_times y active_index deben tener la misma longitud")
        if not self.dwell > 0.0:
            raise GraphError("dwell debe ser positivo")
        for a, b in zip(self.switch_times, self.switch_times[1:]):
            if not b > a:
                raise GraphError("switch_times debe ser estrictamente creciente")
            if b - a < self.dwell - 1e-12:
                raise GraphError(f"intervalo {b - a:.6g} menor que el dwell {self.dwell:.6g}")
        for k in self.active_index:
            if not 0 <= k < len(self.graphs):
                raise GraphError(f"indice de grafo invalido: {k}")

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def is_switching(self) -> bool:
        """Verdadero si el grafo activo cambia en algún instante."""
        return len({self.graphs[k] for k in self.active_index}) > 1

    def switch_instants(self) -> List[float]:
        """Instantes t_k (k >= 1) en los que el grafo activo cambia realmente."""
        out = []
        for k in range(1, len(self.switch_times)):
            if self.graphs[self.active_index[k]] != self.graphs[self.active_index[k - 1]]:
                out.append(self.switch_times[k])
        return out


def fixed_schedule(graph: DirectedGraph) -> SwitchingSchedule:
    return SwitchingSchedule(graphs=(graph,), switch_times=(0.0,), active_index=(0,), dwell=1.0)


def periodic_schedule(graphs: Sequence[DirectedGraph], period: float, horizon: float,
                      sequence: Sequence[int] = None) -> SwitchingSchedule:
    """Rotación de grafos cada `period` segundos hasta cubrir `horizon`."""
    sequence = list(sequence) if sequence is not None else list(range(len(graphs)))
    count = max(1, int(np.floor(horizon / period + 1e-9)) + 1)
    times = [k * period for k in range(count)]
    idx = [sequence[k % len(sequence)] for k in range(count)]
    return SwitchingSchedule(graphs=tuple(graphs), switch_times=tuple(times),
                             active_index=tuple(idx), dwell=period)


# =============================================================================
# OPERACIONES
# =============================================================================

def laplacian(g: DirectedGraph) -> np.ndarray:
    """L = D - W, filas de suma cero."""
    w = g.weights
    return np.diag(w.sum(axis=1)) - w


def degree_matrix(g: DirectedGraph) -> np.ndarray:
    return np.diag(g.weights.sum(axis=1))


def has_rooted_spanning_tree(g: DirectedGraph, root: int) -> bool:
    """Todos los vértices alcanzan `root` siguiendo aristas i -> j."""
    if not 0 <= root < g.n:
        raise GraphError(f"raiz invalida: {root}")
    reach = nx.ancestors(g.to_networkx(), root)
    return len(reach) == g.n - 1


def has_spanning_tree(g: DirectedGraph) -> bool:
    """Existe k* tal que todo otro vértice tiene un camino dirigido hasta k*."""
    nxg = g.to_networkx()
    return any(len(nx.ancestors(nxg, k)) == g.n - 1 for k in range(g.n))


def _interval_index(s: SwitchingSchedule, t: float, left_limit: bool) -> int:
    if left_limit:
        k = bisect.bisect_left(s.switch_times, t) - 1
    else:
        k = bisect.bisect_right(s.switch_times, t) - 1
    return max(k, 0)


def graph_at(s: SwitchingSchedule, t: float, left_limit: bool = False) -> DirectedGraph:
    """
    Grafo activo en t, continuo por la derecha en los instantes de
    conmutación. Con left_limit=True devuelve el límite por la izquierda
    (lo usa el integrador en la última etapa de un paso).
    """
    return s.graphs[s.active_index[_interval_index(s, t, left_limit)]]


def union_over_window(s: SwitchingSchedule, t_a: float, t_b: float) -> DirectedGraph:
    """Unión (máximo elemento a elemento) de los grafos activos en [t_a, t_b)."""
    if t_a < 0.0:
        raise GraphError(f"ventana fuera del dominio del calendario: t_a={t_a}")
    if not t_a < t_b:
        raise GraphError(f"ventana vacia: t_a={t_a} >= t_b={t_b}")
    starts = s.switch_times
    result = np.zeros((s.n, s.n))
    for k, t_k in enumerate(starts):
        t_next = starts[k + 1] if k + 1 < len(starts) else np.inf
        if t_k < t_b and t_next > t_a:
            result = np.maximum(result, s.graphs[s.active_index[k]].weights)
    return DirectedGraph(result)


def union_has_spanning_tree(s: SwitchingSchedule, window: float, horizon: float) -> bool:
    """Verifica el árbol de expansión de la unión en ventanas consecutivas."""
    t = 0.0
    while t < horizon:
        if not has_spanning_tree(union_over_window(s, t, t + window)):
            return False
        t += window
    return True
