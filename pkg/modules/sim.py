"""
sim.py - Integración RK4 de paso fijo, RunRecord y métricas

Una corrida es secuencial: begin_step fija el contexto del paso, las
cuatro etapas evalúan la derivada del diccionario de estado y post_step
renormaliza y registra los historiales de retardo.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import HistoryError, ModelError, SimulationAbort, WiringViolation
from .interfaces import IClosedLoop
from .utils import RunEvent, RunLogger, max_pairwise_distance

logger = logging.getLogger(__name__)

State = Dict[str, np.ndarray]

DIVERGENCE_LIMIT = 1e8

# violaciones de invariantes que cortan la corrida como un aborto
INVARIANT_ABORTS = {HistoryError: "history", ModelError: "model", WiringViolation: "wiring"}


# =============================================================================
# REGISTRO
# =============================================================================

@dataclass
class RunRecord:
    """Trayectoria muestreada de una corrida."""
    name: str
    kind: str
    h: float
    times: np.ndarray
    channels: Dict[str, np.ndarray]
    events: List[RunEvent] = field(default_factory=list)
    status: str = "completed"
    metrics: Dict[str, float] = field(default_factory=dict)
    lyapunov: Optional[np.ndarray] = None
    dense_torque: Dict[int, Tuple[float, np.ndarray]] = field(default_factory=dict)
    switch_times: List[float] = field(default_factory=list)
    meta: Dict[str, object] = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def sample_count(self) -> int:
        return len(self.times)

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def index_at(self, t: Optional[float] = None) -> int:
        if t is None:
            return len(self.times) - 1
        return int(np.argmin(np.abs(self.times - t)))


class _Recorder:
    def __init__(self):
        self.times: List[float] = []
        self.channels: Dict[str, List[np.ndarray]] = {}
        self.lyapunov: List[np.ndarray] = []

    def add(self, loop: IClosedLoop, t: float, x: State) -> None:
        out = loop.outputs(t, x)
        self.times.append(t)
        for key, value in out.items():
            self.channels.setdefault(key, []).append(np.array(value, dtype=float, copy=True))
        V = loop.lyapunov(t, x)
        if V is not None:
            self.lyapunov.append(np.atleast_1d(np.asarray(V, dtype=float)))

    def channel_arrays(self) -> Dict[str, np.ndarray]:
        return {k: np.stack(v) for k, v in self.channels.items()}


# =============================================================================
# INTEGRADOR
# =============================================================================

def _axpy(x: State, k: State, a: float) -> State:
    return {key: x[key] + a * k[key] for key in x}


def step(loop: IClosedLoop, x: State, t: float, h: float) -> State:
    """Un paso de Runge-Kutta clásico de cuarto orden sobre el estado apilado."""
    loop.begin_step(t, x, h)
    k1 = loop.derivative(t, x)
    k2 = loop.derivative(t + 0.5 * h, _axpy(x, k1, 0.5 * h))
    k3 = loop.derivative(t + 0.5 * h, _axpy(x, k2, 0.5 * h))
    k4 = loop.derivative(t + h, _axpy(x, k3, h), stage_end=True)
    new = {key: x[key] + (h / 6.0) * (k1[key] + 2.0 * k2[key] + 2.0 * k3[key] + k4[key]) for key in x}
    return loop.post_step(t + h, new)


def _check_finite(x: State, t: float, limit: float = DIVERGENCE_LIMIT) -> None:
    for key, value in x.items():
        arr = np.asarray(value)
        if not np.all(np.isfinite(arr)):
            raise SimulationAbort("divergence", f"componente no finita en '{key}'", t=t)
        peak = float(np.max(np.abs(arr))) if arr.size else 0.0
        if peak > limit:
            raise SimulationAbort("divergence", f"|{key}| = {peak:.3g} excede {limit:.3g}", t=t, value=peak)


def _control_channel(out: Dict[str, np.ndarray]) -> Optional[np.ndarray]:
    for key in ("tau", "u"):
        if key in out:
            return np.array(out[key], dtype=float, copy=True)
    return None


def run_loop(loop: IClosedLoop, h: float, t_end: float, stride: int = 1, name: str = "",
             run_logger: Optional[RunLogger] = None) -> RunRecord:
    """
    Integra `loop` de 0 a t_end con paso h.

    Muestras: k = 0, stride, 2·stride, ... ≤ N con N = round(t_end / h).
    Alrededor de cada conmutación se guarda el control en k_κ - 1, k_κ, k_κ + 1.
    """
    stride = max(int(stride), 1)
    steps = int(round(t_end / h)) if t_end > 0 else 0
    run_logger = run_logger or getattr(loop, "run_logger", None) or RunLogger(name or loop.kind)
    switches = [s for s in loop.switch_instants() if 0.0 < s <= t_end + 0.5 * h]
    switch_steps = {int(round(s / h)): s for s in switches}
    dense_steps = {k + d for k in switch_steps for d in (-1, 0, 1) if 0 <= k + d <= steps}
    recorder = _Recorder()
    dense: Dict[int, Tuple[float, np.ndarray]] = {}
    status = "completed"
    started = time.perf_counter()

    def _dense(k: int, t: float, x: State) -> None:
        tau = _control_channel(loop.outputs(t, x))
        if tau is not None:
            dense[k] = (t, tau)

    t = 0.0
    x = loop.initial_state()
    logger.info(f"[SIM] {name or loop.kind}: h={h:g}, T_end={t_end:g}, pasos={steps}, stride={stride}")
    try:
        loop.check(0.0, x)
        recorder.add(loop, 0.0, x)
        if 0 in dense_steps:
            _dense(0, 0.0, x)
        for k in range(steps):
            t = k * h
            if k in switch_steps:
                run_logger.log(t, "switch", "cambio de topologia")
            x_new = step(loop, x, t, h)
            t_new = (k + 1) * h
            _check_finite(x_new, t_new)
            loop.check(t_new, x_new)
            x = x_new
            if (k + 1) % stride == 0:
                recorder.add(loop, t_new, x)
            if k + 1 in dense_steps:
                _dense(k + 1, t_new, x)
    except SimulationAbort as e:
        status = f"aborted:{e.kind}"
        run_logger.log(e.t, e.kind, str(e), agent=e.agent, value=e.value, level=logging.ERROR)
    except tuple(INVARIANT_ABORTS) as e:
        kind = next(v for cls, v in INVARIANT_ABORTS.items() if isinstance(e, cls))
        status = f"aborted:{kind}"
        run_logger.log(t, kind, str(e), level=logging.ERROR)

    runtime = time.perf_counter() - started
    record = RunRecord(
        name=name or loop.kind,
        kind=loop.kind,
        h=h,
        times=np.array(recorder.times),
        channels=recorder.channel_arrays(),
        events=run_logger.get_events(),
        status=status,
        lyapunov=np.stack(recorder.lyapunov) if recorder.lyapunov else None,
        dense_torque=dense,
        switch_times=sorted(switches),
        meta={
            "metric_family": getattr(loop, "metric_family", "consensus"),
            "position_channel": getattr(loop, "position_channel", "q"),
            "velocity_channel": getattr(loop, "velocity_channel", "dq"),
            "reference_channels": tuple(getattr(loop, "reference_channels", ("", ""))),
            "dual_pairs": tuple(getattr(loop, "dual_pairs", ())),
        },
        runtime=runtime,
    )
    record.metrics = compute_metrics(record)
    extra = getattr(loop, "extra_metrics", None)
    if extra is not None:
        record.metrics.update(extra())
    logger.info(f"[SIM] {record.name}: {status} en {runtime:.2f} s, muestras={record.sample_count}")
    return record


def run(config, run_logger: Optional[RunLogger] = None) -> RunRecord:
    """Corre un ScenarioConfig resuelto."""
    from .factory import crear_lazo
    integ = config.data["integration"]
    run_logger = run_logger or RunLogger(config.name)
    loop = crear_lazo(config.kind, config.data, run_logger)
    return run_loop(loop, float(integ["h"]), float(integ["t_end"]), int(integ.get("stride", 1)),
                    name=config.name, run_logger=run_logger)


# =============================================================================
# MÉTRICAS
# =============================================================================

def consensus_error(record: RunRecord, t: Optional[float] = None) -> float:
    """max_{i,j} ‖q_i - q_j‖ en la muestra más cercana a t (última si t es None)."""
    pos = record.channels[record.meta.get("position_channel", "q")][record.index_at(t)]
    return max_pairwise_distance(np.atleast_2d(pos))


def consensus_velocity(record: RunRecord, t: Optional[float] = None) -> float:
    """max_i ‖q_i'‖."""
    vel = np.atleast_2d(record.channels[record.meta.get("velocity_channel", "dq")][record.index_at(t)])
    return float(np.max(np.linalg.norm(vel, axis=-1)))


def _reference_gap(record: RunRecord, channel: str, ref: str, t: Optional[float]) -> float:
    k = record.index_at(t)
    value = np.asarray(record.channels[channel][k])
    if ref:
        value = value - np.asarray(record.channels[ref][k])
    value = np.atleast_2d(value)
    return float(np.max(np.linalg.norm(value, axis=-1)))


def tracking_error(record: RunRecord, t: Optional[float] = None) -> float:
    """max_i ‖q_i - q_ref‖; en actitud ‖Δq_v‖."""
    ref = record.meta.get("reference_channels", ("", ""))[0]
    return _reference_gap(record, record.meta.get("position_channel", "q"), ref, t)


def tracking_velocity_error(record: RunRecord, t: Optional[float] = None) -> float:
    """max_i ‖q_i' - q_ref'‖; en actitud ‖ω - ω_d‖."""
    ref = record.meta.get("reference_channels", ("", ""))[1]
    return _reference_gap(record, record.meta.get("velocity_channel", "dq"), ref, t)


def lyapunov_monitor(record: RunRecord) -> Tuple[Optional[np.ndarray], float, float]:
    """
    Serie V_i(t_k), máximo incremento positivo y máximo de
    (V(t_{k+1}) - V(t_k)) / (1 + |V(t_k)|).
    """
    V = record.lyapunov
    if V is None or len(V) < 2:
        return V, 0.0, 0.0
    inc = np.diff(V, axis=0)
    relative = inc / (1.0 + np.abs(V[:-1]))
    return V, max(float(np.max(inc)), 0.0), max(float(np.max(relative)), 0.0)


def torque_jump_stats(record: RunRecord) -> List[Dict[str, float]]:
    """‖τ(t_κ + h) - τ(t_κ - h)‖ en cada conmutación; unilateral en los bordes de la grilla."""
    out = []
    h = record.h
    dense = record.dense_torque
    for s in record.switch_times:
        k = int(round(s / h))
        if k - 1 in dense and k + 1 in dense:
            a, b = dense[k - 1][1], dense[k + 1][1]
        elif k - 1 in dense and k in dense:
            a, b = dense[k - 1][1], dense[k][1]
        elif k in dense and k + 1 in dense:
            a, b = dense[k][1], dense[k + 1][1]
        else:
            continue
        out.append({"t": s, "jump": float(np.linalg.norm(b - a))})
    return out


def scaling_slope(hs: Sequence[float], values: Sequence[float]) -> float:
    """Pendiente log-log de values frente a h (≈ -1 para crecimiento ∝ 1/h)."""
    hs = np.asarray(hs, dtype=float)
    vals = np.asarray(values, dtype=float)
    mask = (hs > 0) & (vals > 0)
    if mask.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(hs[mask]), np.log(vals[mask]), 1)[0])


def compute_metrics(record: RunRecord) -> Dict[str, float]:
    if record.sample_count == 0:
        return {}
    family = record.meta.get("metric_family", "consensus")
    m: Dict[str, float] = {}
    if family == "consensus":
        m["consensus_error"] = consensus_error(record)
        m["velocity_error"] = consensus_velocity(record)
    elif family == "tracking":
        m["tracking_error"] = tracking_error(record)
        m["velocity_error"] = tracking_velocity_error(record)
    else:
        m["attitude_error"] = tracking_error(record)
        m["velocity_error"] = tracking_velocity_error(record)
        if "q_norm" in record.channels:
            m["quat_norm_drift"] = float(np.max(np.abs(record.channels["q_norm"] - 1.0)))
    _, inc, rel = lyapunov_monitor(record)
    if record.lyapunov is not None:
        m["lyapunov_max_increment"] = inc
        m["lyapunov_max_relative"] = rel
    jumps = torque_jump_stats(record)
    if jumps:
        m["torque_jump_max"] = max(j["jump"] for j in jumps)
    for a, b in record.meta.get("dual_pairs", ()):
        if a in record.channels and b in record.channels:
            m[f"dual_{a}"] = float(np.max(np.abs(record.channels[a] - record.channels[b])))
    if "sigma" in record.channels:
        m["sigma_min_observed"] = float(np.min(record.channels["sigma"]))
    if "m_hat" in record.channels:
        m["m_hat_peak"] = float(np.max(np.abs(record.channels["m_hat"])))
    return m
