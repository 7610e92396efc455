"""
delay.py - Retardos variables T_ij(t) e historial interpolado

Tipos de perfil:
- constant:   T(t) = base
- sinusoidal: T(t) = base + amplitude·sin(rate·t) + saltos
- piecewise:  T(t) = valor del último salto (t_k, v_k) con t_k <= t

En 'sinusoidal' la lista `jumps` se interpreta como desplazamientos
acumulativos que se suman a partir de cada instante.
"""

import bisect
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, HistoryError

PROFILE_KINDS = ("constant", "sinusoidal", "piecewise")


@dataclass(frozen=True)
class DelayProfile:
    kind: str = "constant"
    base: float = 0.0
    amplitude: float = 0.0
    rate: float = 1.0
    jumps: Tuple[Tuple[float, float], ...] = ()
    bound: float = 1.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ConfigurationError(f"tipo de retardo desconocido '{self.kind}', use {PROFILE_KINDS}")
        jumps = tuple(sorted((float(t), float(v)) for t, v in self.jumps))
        object.__setattr__(self, "jumps", jumps)
        if not self.bound > 0.0:
            raise ConfigurationError("delay bound T_max must be positive")
        if self.kind == "piecewise" and (not jumps or jumps[0][0] > 0.0):
            raise ConfigurationError("perfil piecewise necesita un primer salto en t=0")

    @classmethod
    def from_dict(cls, data: dict) -> "DelayProfile":
        return cls(
            kind=data.get("kind", "constant"),
            base=float(data.get("base", 0.0)),
            amplitude=float(data.get("amplitude", 0.0)),
            rate=float(data.get("rate", 1.0)),
            jumps=tuple(tuple(j) for j in data.get("jumps", [])),
            bound=float(data.get("bound", 1.0)),
        )

    @property
    def jump_times(self) -> List[float]:
        return [t for t, _ in self.jumps if t > 0.0]


def _jump_part(p: DelayProfile, t: float, left_limit: bool) -> float:
    times = [jt for jt, _ in p.jumps]
    k = (bisect.bisect_left(times, t) if left_limit else bisect.bisect_right(times, t))
    if p.kind == "piecewise":
        return p.jumps[max(k - 1, 0)][1]
    return sum(v for _, v in p.jumps[:k])


def delay_at(p: DelayProfile, t: float, left_limit: bool = False) -> float:
    """Retardo en t; continuo por la derecha en los saltos."""
    if p.kind == "constant":
        return p.base + _jump_part(p, t, left_limit)
    if p.kind == "sinusoidal":
        return p.base + p.amplitude * np.sin(p.rate * t) + _jump_part(p, t, left_limit)
    return _jump_part(p, t, left_limit)


def delay_rate(p: DelayProfile, t: float) -> float:
    """dT/dt analítico entre saltos (lo necesita el baseline de backstepping)."""
    if p.kind == "sinusoidal":
        return p.amplitude * p.rate * np.cos(p.rate * t)
    return 0.0


def validate_profile(p: DelayProfile, horizon: float, h: float, label: str = "delay") -> None:
    """Muestrea el perfil sobre la grilla y verifica 0 <= T(t) <= T_max."""
    steps = int(round(horizon / h)) if horizon > 0 else 0
    grid = np.arange(steps + 1) * h
    values = np.array([delay_at(p, t) for t in grid])
    if np.any(values < -1e-12) or np.any(values > p.bound + 1e-12):
        worst = grid[np.argmax(np.maximum(-values, values - p.bound))]
        raise ConfigurationError(
            f"{label}: T(t) sale de [0, T_max={p.bound}] (t={worst:.6g})")


# =============================================================================
# HISTORIAL
# =============================================================================

class HistoryBuffer:
    """
    Historial de un agente: muestras (t, x) con t estrictamente creciente.
    Un único escritor (el integrador); las lecturas ocurren entre pasos o
    dentro de las etapas de Runge-Kutta.
    """

    def __init__(self, initial_value: Sequence[float], horizon: float):
        self.initial_value = np.array(initial_value, dtype=float)
        self.horizon = float(horizon)
        self._times: List[float] = []
        self._values: List[np.ndarray] = []
        self._start = 0
        self._evicted = False

    def __len__(self) -> int:
        return len(self._times) - self._start

    @property
    def last_time(self) -> float:
        return self._times[-1] if len(self) else -np.inf

    @property
    def first_time(self) -> float:
        return self._times[self._start] if len(self) else np.inf

    def _compact(self) -> None:
        if self._start > 1024 and self._start > len(self._times) // 2:
            del self._times[:self._start]
            del self._values[:self._start]
            self._start = 0


def record(b: HistoryBuffer, t: float, x: Sequence[float]) -> HistoryBuffer:
    """Agrega (t, x) y descarta lo anterior a t - horizon."""
    t = float(t)
    if len(b) and not t > b.last_time:
        raise HistoryError(f"tiempo no monotono: {t} <= {b.last_time}")
    b._times.append(t)
    b._values.append(np.array(x, dtype=float))
    cutoff = t - b.horizon
    # se conserva una muestra anterior al corte para poder interpolar en él
    while b._start + 1 < len(b._times) and b._times[b._start + 1] <= cutoff:
        b._start += 1
        b._evicted = True
    b._compact()
    return b


def sample_delayed(b: HistoryBuffer, t: float, delay: float, current=None) -> np.ndarray:
    """
    x(t - delay) interpolado linealmente.

    Antes de la primera muestra devuelve initial_value (retención constante).
    Si la consulta cae después de la última muestra y se pasa `current`
    (el valor en t, p. ej. la etapa de Runge-Kutta en curso) se interpola
    entre ambos; sin `current` se retiene la última muestra.
    """
    tq = float(t) - float(delay)
    if not len(b):
        return b.initial_value.copy() if current is None else np.array(current, dtype=float)
    times = b._times
    if tq < b.first_time:
        if b._evicted:
            raise HistoryError(f"consulta t={tq:.6g} anterior al horizonte retenido ({b.first_time:.6g})")
        return b.initial_value.copy()
    last = times[-1]
    if tq >= last:
        if current is None or t <= last or tq == last:
            return b._values[-1].copy()
        lam = (tq - last) / (t - last)
        return (1.0 - lam) * b._values[-1] + lam * np.asarray(current, dtype=float)
    k = bisect.bisect_right(times, tq, lo=b._start) - 1
    t0, t1 = times[k], times[k + 1]
    lam = (tq - t0) / (t1 - t0)
    if lam == 0.0:
        return b._values[k].copy()
    return (1.0 - lam) * b._values[k] + lam * b._values[k + 1]
