"""
Escenarios predefinidos de Consenso-Py

Este módulo reúne:
- Los valores por defecto de cada tipo de escenario (base de la resolución)
- Grafos y perfiles de retardo de uso común
- Presets con nombre, uno por comportamiento que se quiere reproducir

Uso:
    from modules.scenarios import ScenarioPresets

    preset = ScenarioPresets.switching_consensus("high-order-position", roots=[1, 2, 3])
    config = config_from_dict(preset.data)
"""

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence


class ScenarioKind(Enum):
    """Tipos de escenario soportados."""
    CONSENSUS_LAGRANGIAN = "consensus-lagrangian"
    BASELINE_COMPARISON = "baseline-comparison"
    CONSENSUS_TPV = "consensus-tpv"
    POINTMASS_TRACKING = "pointmass-tracking"
    TASKSPACE_TRACKING = "taskspace-tracking"
    SPACECRAFT_TRACKING = "spacecraft-tracking"
    DISTRIBUTED_TRACKING = "distributed-tracking"


@dataclass
class ScenarioPreset:
    """Escenario con nombre; `data` es el árbol JSON (parcial) del archivo."""
    name: str
    kind: ScenarioKind
    description: str
    data: Dict[str, Any] = field(default_factory=dict)


# =============================================================================
# GRAFOS Y RETARDOS COMUNES
# =============================================================================

def ring_graph(n: int) -> List[List[float]]:
    """Anillo dirigido: el agente i escucha al agente i-1."""
    w = [[0.0] * n for _ in range(n)]
    for i in range(n):
        w[i][(i - 1) % n] = 1.0
    return w


def _edges(n: int, edges: Sequence[Sequence[int]]) -> List[List[float]]:
    w = [[0.0] * n for _ in range(n)]
    for i, j in edges:
        w[i][j] = 1.0
    return w


def rotation_graphs(n: int) -> List[List[List[float]]]:
    """
    Tres grafos que por separado no tienen árbol de expansión y cuya
    unión de dos consecutivos sí lo tiene (n = 3 o n = 4).
    """
    if n == 3:
        return [_edges(3, [(1, 0)]), _edges(3, [(2, 1)]), _edges(3, [(0, 2)])]
    if n == 4:
        return [_edges(4, [(1, 0), (2, 1)]), _edges(4, [(3, 2), (0, 3)]), _edges(4, [(2, 1), (0, 3)])]
    raise ValueError("rotation_graphs solo esta definido para n = 3 o n = 4")


def leader_chain(n: int) -> List[List[float]]:
    """Cadena con raíz en el líder: 1 <- 0, 2 <- 1, ..., n <- n-1."""
    return _edges(n + 1, [(i, i - 1) for i in range(1, n + 1)])


def standard_delay(jump_at: Optional[float] = 10.0) -> Dict[str, Any]:
    """T(t) = 0.2 + 0.1 sin t más un salto de 0.1 s."""
    return {"kind": "sinusoidal", "base": 0.2, "amplitude": 0.1, "rate": 1.0,
            "jumps": [[jump_at, 0.1]] if jump_at is not None else [], "bound": 0.5}


# =============================================================================
# PRESETS
# =============================================================================

class ScenarioPresets:
    """Valores por defecto y escenarios predefinidos."""

    @staticmethod
    def defaults(kind: str) -> Dict[str, Any]:
        """Árbol completo de valores por defecto de un tipo de escenario."""
        kind = ScenarioKind(kind)
        base = {
            "kind": kind.value,
            "name": kind.value,
            "seed": 0,
            "integration": {"h": 0.001, "t_end": 10.0, "stride": 100},
            "thresholds": {},
        }
        adaptive = {"K": 5.0, "Gamma": 5.0, "theta_hat_scale": 0.7}
        if kind is ScenarioKind.CONSENSUS_LAGRANGIAN:
            base.update({
                "plant": {"type": "two-link-arm"},
                "agents": {"n": 4, "initial": {"layout": "lattice", "spread": 0.4}},
                "graph": {"graphs": [ring_graph(4)]},
                "delay": {"default": standard_delay(), "edges": []},
                "refdyn": {"variant": "second-order-fixed", "roots": [1.0, 2.0], "lambda_m": 0.0},
                "control": dict(adaptive),
            })
        elif kind is ScenarioKind.BASELINE_COMPARISON:
            base.update({
                "plant": {"type": "two-link-arm"},
                "agents": {"n": 4, "initial": {"layout": "lattice", "spread": 0.4}},
                "graph": {"graphs": rotation_graphs(4), "period": 1.0},
                "delay": {"default": standard_delay(), "edges": []},
                "control": dict(adaptive, clamp=1e6),
            })
        elif kind is ScenarioKind.CONSENSUS_TPV:
            base.update({
                "plant": {"mass": 1.0, "gravity": 9.81},
                "agents": {"n": 3, "initial": {"layout": "lattice", "spread": 1.0}},
                "graph": {"graphs": rotation_graphs(3), "period": 1.0},
                "delay": {"default": standard_delay(), "edges": []},
                "refdyn": {"alpha": 1.0, "beta": 2.0, "gamma": 3.0},
                "control": {"controller": "differentiable", "k": 4.0, "alpha_star": 4.0,
                            "gamma_star": 1.0, "mass_hat_scale": 1.0, "sigma_min_ratio": 0.1,
                            "dual_check": False},
            })
        elif kind is ScenarioKind.POINTMASS_TRACKING:
            base["integration"]["stride"] = 50
            base.update({
                "plant": {"mass": 1.0},
                "initial": {"x": 0.2, "v": 0.0},
                "reference": {"amplitude": 1.0, "frequency": 1.0},
                "refdyn": {"roots": [1.0, 2.0, 3.0]},
                "control": {"k": 2.0, "lambda_f": 5.0, "gamma_star": 1.0, "m_hat0": 0.5, "dual_check": True},
            })
        elif kind is ScenarioKind.TASKSPACE_TRACKING:
            base["integration"]["stride"] = 50
            base.update({
                "plant": {"type": "two-link-arm"},
                "initial": {"q": [0.3, 1.2], "dq": [0.0, 0.0]},
                "reference": {"center": [0.45, 0.35], "radius": 0.1, "period": 5.0},
                "refdyn": {"alpha": 5.0},
                "control": {"K": 10.0, "Gamma": 1.0, "Lambda": 1.0, "Kstar": 50.0, "kappa": 1.0,
                            "theta_hat_scale": 0.8, "kin_hat_scale": 0.8, "cond_cap": 1e6},
            })
        elif kind is ScenarioKind.SPACECRAFT_TRACKING:
            base["integration"] = {"h": 0.0005, "t_end": 10.0, "stride": 200}
            base.update({
                "plant": {"inertia": [[1.0, 0.1, 0.0], [0.1, 1.5, 0.0], [0.0, 0.0, 2.0]],
                          "h_I": [0.1, 0.05, 0.2]},
                "initial": {"attitude": [0.2, 0.2, 0.0, 0.96], "omega": [0.05, -0.05, 0.02],
                            "z": [0.0, 0.0, 0.0]},
                "reference": {"axes": [[0.0, 0.0, 1.0]], "amplitudes": [0.5], "periods": [10.0],
                              "phases": [0.0], "base": [0.0, 0.0, 0.0, 1.0]},
                "refdyn": {"alpha1": 2.0, "alpha2": 4.0},
                "control": {"K": 10.0, "Lambda_f": 5.0},
            })
        elif kind is ScenarioKind.DISTRIBUTED_TRACKING:
            base.update({
                "plant": {"type": "two-link-arm"},
                "agents": {"n": 4, "initial": {"layout": "lattice", "spread": 0.4}},
                "graph": {"graphs": [leader_chain(4)]},
                "leader": {"amplitude": 0.5, "frequency": 1.0, "phase": 0.0, "offset": 0.0},
                "refdyn": {"variant": "order2-sign", "alpha": 1.0, "beta": 2.0, "gamma": None,
                           "gamma_factor": 1.5, "z_dot_init": None},
                "control": dict(adaptive),
            })
        return copy.deepcopy(base)

    @staticmethod
    def fixed_topology_consensus(variant: str = "second-order-fixed") -> ScenarioPreset:
        """Anillo fijo, retardos variables con salto, error de parámetros del 30%."""
        return ScenarioPreset(
            name="consensus_fixed_topology",
            kind=ScenarioKind.CONSENSUS_LAGRANGIAN,
            description="Consenso de 4 brazos con topologia fija y retardo variable",
            data={
                "kind": "consensus-lagrangian", "name": "consensus_fixed_topology",
                "integration": {"h": 0.001, "t_end": 80.0, "stride": 100},
                "refdyn": {"variant": variant, "roots": [1.0, 2.0]},
                "thresholds": {"consensus_error": 1e-2, "velocity_error": 1e-2, "lyapunov_max_relative": 1e-6},
            },
        )

    @staticmethod
    def switching_consensus(variant: str = "second-order-switching",
                            roots: Sequence[float] = (1.0, 2.0)) -> ScenarioPreset:
        """Rotación de tres grafos cada 1 s con uniones de 2 s conexas."""
        name = f"consensus_switching_{variant.replace('-', '_')}"
        return ScenarioPreset(
            name=name,
            kind=ScenarioKind.CONSENSUS_LAGRANGIAN,
            description=f"Consenso con topologia conmutada, variante {variant}",
            data={
                "kind": "consensus-lagrangian", "name": name,
                "integration": {"h": 0.001, "t_end": 80.0, "stride": 100},
                "graph": {"graphs": rotation_graphs(4), "period": 1.0},
                "refdyn": {"variant": variant, "roots": list(roots)},
                "thresholds": {"consensus_error": 1e-2, "velocity_error": 1e-2, "lyapunov_max_relative": 1e-6},
            },
        )

    @staticmethod
    def backstepping_baseline(h: float = 0.001) -> ScenarioPreset:
        return ScenarioPreset(
            name="baseline_backstepping",
            kind=ScenarioKind.BASELINE_COMPARISON,
            description="Backstepping con derivada analitica bajo conmutacion",
            data={"kind": "baseline-comparison", "name": "baseline_backstepping",
                  "integration": {"h": h, "t_end": 5.0, "stride": 10}},
        )

    @staticmethod
    def tpv_consensus(controller: str = "differentiable") -> ScenarioPreset:
        control: Dict[str, Any] = {"controller": controller}
        if controller == "adaptive":
            control.update({"mass_hat_scale": 0.8, "dual_check": True})
        return ScenarioPreset(
            name=f"tpv_{controller}",
            kind=ScenarioKind.CONSENSUS_TPV,
            description=f"Consenso de 3 TPVs, controlador {controller}",
            data={
                "kind": "consensus-tpv", "name": f"tpv_{controller}",
                "integration": {"h": 0.001, "t_end": 60.0, "stride": 100},
                "control": control,
                "thresholds": {"consensus_error": 5e-2},
            },
        )

    @staticmethod
    def pointmass_output_feedback() -> ScenarioPreset:
        return ScenarioPreset(
            name="pointmass_output_feedback",
            kind=ScenarioKind.POINTMASS_TRACKING,
            description="Masa puntual sin medir velocidad, m_hat(0) = 0.5 m",
            data={
                "kind": "pointmass-tracking", "name": "pointmass_output_feedback",
                "integration": {"h": 0.001, "t_end": 30.0, "stride": 50},
                "thresholds": {"tracking_error": 1e-3, "dual_y": 1e-6, "dual_m_hat": 1e-6},
            },
        )

    @staticmethod
    def taskspace_tracking() -> ScenarioPreset:
        return ScenarioPreset(
            name="taskspace_tracking",
            kind=ScenarioKind.TASKSPACE_TRACKING,
            description="Circulo de radio 0.1 m con cinematica y dinamica inciertas (20%)",
            data={
                "kind": "taskspace-tracking", "name": "taskspace_tracking",
                "integration": {"h": 0.001, "t_end": 30.0, "stride": 50},
                "thresholds": {"tracking_error": 1e-3, "velocity_error": 1e-2, "lyapunov_max_relative": 1e-6},
            },
        )

    @staticmethod
    def spacecraft_attitude() -> ScenarioPreset:
        return ScenarioPreset(
            name="spacecraft_attitude",
            kind=ScenarioKind.SPACECRAFT_TRACKING,
            description="Actitud senoidal en un eje (0.5 rad, 10 s) con h_I no nulo",
            data={
                "kind": "spacecraft-tracking", "name": "spacecraft_attitude",
                "integration": {"h": 0.0005, "t_end": 40.0, "stride": 200},
                "thresholds": {"attitude_error": 1e-3, "velocity_error": 1e-3, "quat_norm_drift": 1e-8},
            },
        )

    @staticmethod
    def distributed_tracking(variant: str = "order2-sign") -> ScenarioPreset:
        tol = 5e-2 if variant == "order2-sign" else 1e-2
        suffix = {"order2-sign": "signum", "order3-accel-sharing": "smooth",
                  "order3-integral": "no_accel"}.get(variant, variant)
        return ScenarioPreset(
            name=f"distributed_tracking_{suffix}",
            kind=ScenarioKind.DISTRIBUTED_TRACKING,
            description=f"Seguimiento de lider 0.5 sin t, variante {variant}",
            data={
                "kind": "distributed-tracking", "name": f"distributed_tracking_{suffix}",
                "integration": {"h": 0.001, "t_end": 60.0, "stride": 100},
                "refdyn": {"variant": variant},
                "thresholds": {"tracking_error": tol},
            },
        )

    @staticmethod
    def all() -> List[ScenarioPreset]:
        return [
            ScenarioPresets.fixed_topology_consensus(),
            ScenarioPresets.switching_consensus("second-order-switching", (1.0, 2.0)),
            ScenarioPresets.switching_consensus("high-order-position", (1.0, 2.0, 3.0)),
            ScenarioPresets.backstepping_baseline(),
            ScenarioPresets.tpv_consensus("differentiable"),
            ScenarioPresets.tpv_consensus("adaptive"),
            ScenarioPresets.tpv_consensus("continuous"),
            ScenarioPresets.pointmass_output_feedback(),
            ScenarioPresets.taskspace_tracking(),
            ScenarioPresets.spacecraft_attitude(),
            ScenarioPresets.distributed_tracking("order2-sign"),
            ScenarioPresets.distributed_tracking("order3-accel-sharing"),
            ScenarioPresets.distributed_tracking("order3-integral"),
        ]
