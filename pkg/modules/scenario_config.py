"""
scenario_config.py - Carga, resolución y validación de escenarios

Pasos de resolución (idempotentes: el eco resuelto vuelve a cargar igual):
1. parseo JSON (errores con línea y columna)
2. mezcla profunda sobre ScenarioPresets.defaults(kind)
3. overrides `--set clave.ruta=valor` (valor en JSON; claves desconocidas rechazadas)
4. semilla
5. calendario explícito, tiempos alineados a la grilla, retardos completos,
   condiciones iniciales materializadas, γ resuelto para el seguimiento
6. validación: se construye el lazo cerrado y se muestrean los retardos
"""

import copy
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np

from .delay import DelayProfile, validate_profile
from .errors import ConfigurationError
from .factory import KINDS, crear_lazo, normalizar_tipo
from .graph import DirectedGraph, periodic_schedule, union_has_spanning_tree
from .models import quat_normalize
from .refdyn import LeaderProfile, leader_bound
from .scenarios import ScenarioPresets

logger = logging.getLogger(__name__)

# bloques que se reemplazan completos en vez de mezclarse
REPLACE_BLOCKS = {"graph", "reference", "leader", ("agents", "initial"), ("delay", "default")}


@dataclass(frozen=True)
class ScenarioConfig:
    """Escenario resuelto y validado."""
    kind: str
    name: str
    seed: int
    data: Dict[str, Any]

    @property
    def h(self) -> float:
        return float(self.data["integration"]["h"])

    @property
    def t_end(self) -> float:
        return float(self.data["integration"]["t_end"])

    @property
    def thresholds(self) -> Dict[str, float]:
        return dict(self.data.get("thresholds", {}))

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)

    def sha256(self) -> str:
        return hashlib.sha256(json.dumps(self.data, sort_keys=True).encode("utf-8")).hexdigest()


# =============================================================================
# PARSEO Y MEZCLA
# =============================================================================

def parse_config_text(text: str, source: str = "<texto>") -> Dict[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{source}: JSON invalido: {e.msg}", line=e.lineno, column=e.colno)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{source}: la raiz debe ser un objeto")
    return data


def deep_merge(base: Dict[str, Any], over: Dict[str, Any], path: tuple = ()) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in over.items():
        here = path + (key,)
        replace = key in REPLACE_BLOCKS or here in REPLACE_BLOCKS
        if isinstance(value, dict) and isinstance(out.get(key), dict) and not replace:
            out[key] = deep_merge(out[key], value, here)
        else:
            out[key] = copy.deepcopy(value)
    return out


def apply_override(data: Dict[str, Any], assignment: str) -> None:
    """Aplica `a.b.c=valor`; el valor se interpreta como JSON o, si falla, como texto."""
    if "=" not in assignment:
        raise ConfigurationError(f"override invalido '{assignment}', use clave=valor")
    key, raw = assignment.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigurationError(f"override sin clave: '{assignment}'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = data
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigurationError(f"override: clave desconocida '{key}'")
        node = node[p]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigurationError(f"override: clave desconocida '{key}'")
    node[parts[-1]] = value


# =============================================================================
# RESOLUCIÓN
# =============================================================================

def _align(t: float, h: float, label: str) -> float:
    aligned = round(t / h) * h
    if abs(aligned - t) > 1e-12:
        logger.warning(f"[CONFIG] {label}: t={t:g} no cae en la grilla, se usa {aligned:g}")
    return float(aligned)


def _resolve_integration(data: Dict[str, Any]) -> None:
    integ = data["integration"]
    h = float(integ["h"])
    if not h > 0.0:
        raise ConfigurationError("integration.h must be positive")
    if float(integ["t_end"]) < 0.0:
        raise ConfigurationError("integration.t_end no puede ser negativo")
    stride = int(integ.get("stride", 1))
    if stride < 1:
        raise ConfigurationError("integration.stride debe ser >= 1")
    integ.update({"h": h, "t_end": float(integ["t_end"]), "stride": stride})


def _resolve_graph(data: Dict[str, Any]) -> None:
    g = data.get("graph")
    if g is None:
        return
    h = data["integration"]["h"]
    if "weights" in g:
        g = {"graphs": [g["weights"]], **{k: v for k, v in g.items() if k != "weights"}}
    graphs = [np.asarray(w, dtype=float).tolist() for w in g["graphs"]]
    if "period" in g:
        period = float(g["period"])
        sched = periodic_schedule([DirectedGraph(w) for w in graphs], period, data["integration"]["t_end"],
                                  g.get("sequence"))
        times, index, dwell = list(sched.switch_times), list(sched.active_index), period
    else:
        times = [float(t) for t in g.get("switch_times", [0.0])]
        index = [int(k) for k in g.get("active_index", [0] * len(times))]
        dwell = float(g.get("dwell", min(np.diff(times)) if len(times) > 1 else 1.0))
    times = [_align(t, h, "graph.switch_times") for t in times]
    resolved = {"graphs": graphs, "switch_times": times, "active_index": index, "dwell": dwell}
    if "window" in g:
        resolved["window"] = float(g["window"])
    data["graph"] = resolved


def _profile_dict(raw: Dict[str, Any], h: float, label: str) -> Dict[str, Any]:
    p = DelayProfile.from_dict(raw)
    jumps = [[_align(t, h, f"{label}.jumps") if t > 0 else 0.0, v] for t, v in p.jumps]
    return {"kind": p.kind, "base": p.base, "amplitude": p.amplitude, "rate": p.rate,
            "jumps": jumps, "bound": p.bound}


def _resolve_delay(data: Dict[str, Any]) -> None:
    if "delay" not in data:
        return
    h = data["integration"]["h"]
    d = data["delay"]
    default = _profile_dict(d.get("default", {}), h, "delay.default")
    edges = [{"i": int(e["i"]), "j": int(e["j"]), "profile": _profile_dict(e["profile"], h, "delay.edges")}
             for e in d.get("edges", [])]
    data["delay"] = {"default": default, "edges": edges}


def _lattice(n: int, m: int, spread: float) -> np.ndarray:
    weights = np.array([1.0 / (1.0 + k) for k in range(m)])
    return np.array([spread * (i - (n - 1) / 2.0) * weights for i in range(n)])


def _materialize(initial: Dict[str, Any], n: int, m: int, keys: tuple, seed: int) -> Dict[str, Any]:
    layout = initial.get("layout")
    if layout is None:
        return initial
    spread = float(initial.get("spread", 0.5))
    if layout == "lattice":
        pos = _lattice(n, m, spread)
    elif layout == "random":
        pos = np.random.default_rng(seed).uniform(-spread, spread, size=(n, m))
    else:
        raise ConfigurationError(f"agents.initial.layout desconocido '{layout}', use lattice o random")
    vel = np.asarray(initial.get(keys[1], np.zeros((n, m))), dtype=float)
    if vel.ndim == 0:
        vel = np.full((n, m), float(vel))
    return {keys[0]: pos.tolist(), keys[1]: vel.tolist()}


def _agent_dim(data: Dict[str, Any]) -> int:
    if data["kind"] == "consensus-tpv":
        return 3
    plant = data.get("plant", {})
    return int(plant.get("dim", 1)) if plant.get("type") == "point-mass" else 2


def _resolve_agents(data: Dict[str, Any]) -> None:
    agents = data.get("agents")
    if agents is None:
        return
    keys = ("x", "v") if data["kind"] == "consensus-tpv" else ("q", "dq")
    agents["n"] = int(agents["n"])
    agents["initial"] = _materialize(agents.get("initial", {}), agents["n"], _agent_dim(data), keys, data["seed"])


def _resolve_tracking(data: Dict[str, Any]) -> None:
    if data["kind"] != "distributed-tracking":
        return
    ref = data["refdyn"]
    if ref.get("gamma") is None:
        leader = LeaderProfile.from_dict(data.get("leader", {}), _agent_dim(data))
        bound = leader_bound(ref["variant"], leader, float(ref["alpha"]), float(ref["beta"]))
        ref["gamma"] = float(ref.get("gamma_factor", 1.5)) * bound
        logger.info(f"[CONFIG] gamma = {ref['gamma']:.6g} ({ref.get('gamma_factor', 1.5)} x {bound:.6g})")


def _resolve_spacecraft(data: Dict[str, Any]) -> None:
    if data["kind"] != "spacecraft-tracking":
        return
    ic = data.setdefault("initial", {})
    ic["attitude"] = quat_normalize(np.asarray(ic.get("attitude", [0.0, 0.0, 0.0, 1.0]), dtype=float)).tolist()


def resolve(raw: Dict[str, Any], overrides: Iterable[str] = (), seed: Optional[int] = None) -> Dict[str, Any]:
    """Árbol resuelto (sin validar) a partir del JSON crudo."""
    if "kind" not in raw:
        raise ConfigurationError("falta la clave 'kind'")
    kind = normalizar_tipo(raw["kind"])
    if kind not in KINDS:
        raise ConfigurationError(f"kind desconocido '{raw['kind']}', use uno de {list(KINDS)}")
    data = deep_merge(ScenarioPresets.defaults(kind), raw)
    data["kind"] = kind
    for assignment in overrides:
        apply_override(data, assignment)
    if seed is not None:
        data["seed"] = int(seed)
    data["seed"] = int(data.get("seed", 0))
    data["name"] = str(data.get("name", kind))
    _resolve_integration(data)
    _resolve_graph(data)
    _resolve_delay(data)
    _resolve_agents(data)
    _resolve_tracking(data)
    _resolve_spacecraft(data)
    return data


# =============================================================================
# VALIDACIÓN
# =============================================================================

def validate(data: Dict[str, Any]) -> None:
    """Construye el lazo (valida ganancias, variantes, grafos) y muestrea los retardos."""
    h = data["integration"]["h"]
    t_end = data["integration"]["t_end"]
    if "delay" in data:
        n = data["agents"]["n"]
        validate_profile(DelayProfile.from_dict(data["delay"]["default"]), t_end, h, "delay.default")
        for e in data["delay"]["edges"]:
            if not (0 <= e["i"] < n and 0 <= e["j"] < n):
                raise ConfigurationError(f"delay.edges: arista ({e['i']}, {e['j']}) fuera de rango")
            validate_profile(DelayProfile.from_dict(e["profile"]), t_end, h, f"delay ({e['i']},{e['j']})")
    try:
        loop = crear_lazo(data["kind"], data)
    except ValueError as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(str(e))
    window = data.get("graph", {}).get("window")
    if window and t_end > 0 and not union_has_spanning_tree(loop.schedule, window, t_end):
        logger.warning(f"[CONFIG] {data['name']}: alguna ventana de {window:g} s no contiene arbol de expansion")


def config_from_dict(raw: Dict[str, Any], overrides: Iterable[str] = (),
                     seed: Optional[int] = None) -> ScenarioConfig:
    data = resolve(raw, overrides, seed)
    validate(data)
    return ScenarioConfig(kind=data["kind"], name=data["name"], seed=data["seed"], data=data)


def load_config(path: Union[str, Path], overrides: Iterable[str] = (),
                seed: Optional[int] = None) -> ScenarioConfig:
    """Lee, resuelve y valida un archivo de escenario."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"no existe el archivo {path}")
    raw = parse_config_text(path.read_text(encoding="utf-8"), str(path))
    raw.setdefault("name", path.stem)
    config = config_from_dict(raw, overrides, seed)
    logger.info(f"[CONFIG] {path.name}: {config.kind} valido (sha256 {config.sha256()[:12]})")
    return config


def list_scenarios(directory: Union[str, Path]) -> List[Path]:
    return sorted(Path(directory).glob("*.json"))
