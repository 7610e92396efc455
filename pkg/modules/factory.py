"""
Factory para criar o laço fechado apropriado para cada tipo de cenário.

Tipos disponíveis:
- consensus-lagrangian: consenso de sistemas Lagrangianos com atraso
- baseline-comparison:  backstepping de referência (falha ao comutar)
- consensus-tpv:        consenso de veículos propulsados por empuxo
- pointmass-tracking:   massa pontual com realimentação de posição
- taskspace-tracking:   braço com cinemática incerta no espaço de tarefa
- spacecraft-tracking:  atitude de nave sem medir velocidade angular
- distributed-tracking: seguimento distribuído com líder virtual
"""

import logging
from typing import Any, Dict, Optional

from .interfaces import IClosedLoop
from .utils import RunLogger

logger = logging.getLogger(__name__)

KINDS = (
    "consensus-lagrangian",
    "baseline-comparison",
    "consensus-tpv",
    "pointmass-tracking",
    "taskspace-tracking",
    "spacecraft-tracking",
    "distributed-tracking",
)


def normalizar_tipo(kind: str) -> str:
    """'Consensus_Lagrangian' -> 'consensus-lagrangian'."""
    return str(kind).strip().lower().replace("_", "-")


def crear_lazo(kind: str, data: Dict[str, Any], run_logger: Optional[RunLogger] = None) -> IClosedLoop:
    """
    Factory function para criar o laço fechado de um cenário resolvido.

    Args:
        kind: Tipo de cenário
        data: Árvore JSON resolvida do cenário
        run_logger: Fila de eventos da corrida (opcional)

    Returns:
        Instância de IClosedLoop pronta para sim.run

    Raises:
        ValueError: Se o tipo não for reconhecido
    """
    kind = normalizar_tipo(kind)
    creators = {
        "consensus-lagrangian": _create_consensus,
        "baseline-comparison": _create_baseline,
        "consensus-tpv": _create_tpv,
        "pointmass-tracking": _create_pointmass,
        "taskspace-tracking": _create_taskspace,
        "spacecraft-tracking": _create_spacecraft,
        "distributed-tracking": _create_tracking,
    }
    if kind not in creators:
        raise ValueError(f"Tipo de cenário não reconhecido: '{kind}'. Use um de: {', '.join(KINDS)}.")
    loop = creators[kind](data, run_logger)
    logger.info(f"[FACTORY] Laço criado: {type(loop).__name__} ({data.get('name', kind)})")
    return loop


def _create_consensus(data, run_logger):
    from .closed_loops import ConsensusLagrangianLoop
    return ConsensusLagrangianLoop(data, run_logger)


def _create_baseline(data, run_logger):
    from .closed_loops import BaselineComparisonLoop
    return BaselineComparisonLoop(data, run_logger)


def _create_tpv(data, run_logger):
    from .closed_loops import ConsensusTpvLoop
    return ConsensusTpvLoop(data, run_logger)


def _create_pointmass(data, run_logger):
    from .closed_loops import PointMassTrackingLoop
    return PointMassTrackingLoop(data, run_logger)


def _create_taskspace(data, run_logger):
    from .closed_loops import TaskSpaceTrackingLoop
    return TaskSpaceTrackingLoop(data, run_logger)


def _create_spacecraft(data, run_logger):
    from .closed_loops import SpacecraftTrackingLoop
    return SpacecraftTrackingLoop(data, run_logger)


def _create_tracking(data, run_logger):
    from .closed_loops import DistributedTrackingLoop
    return DistributedTrackingLoop(data, run_logger)


def get_available_kinds() -> Dict[str, Dict[str, Any]]:
    """
    Retorna informações sobre os tipos de cenário disponíveis.

    Returns:
        Dicionário com descrição e família de métricas de cada tipo
    """
    return {
        "consensus-lagrangian": {"name": "Consenso Lagrangiano", "metrics": "consensus", "delays": True},
        "baseline-comparison": {"name": "Backstepping (referência)", "metrics": "consensus", "delays": True},
        "consensus-tpv": {"name": "Consenso de TPVs", "metrics": "consensus", "delays": True},
        "pointmass-tracking": {"name": "Massa pontual", "metrics": "tracking", "delays": False},
        "taskspace-tracking": {"name": "Espaço de tarefa", "metrics": "tracking", "delays": False},
        "spacecraft-tracking": {"name": "Atitude de nave", "metrics": "attitude", "delays": False},
        "distributed-tracking": {"name": "Seguimento com líder", "metrics": "tracking", "delays": False},
    }
