"""
report.py - Emisión de resultados y agregación de corridas

Por corrida: trajectory.csv, events.csv, summary.json, config_resolved.json.
Por directorio: report.txt / report.csv a partir de los summary.json.
Para barridos: scaling.csv con la pendiente log-log.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError
from .sim import RunRecord, scaling_slope, torque_jump_stats
from .utils import fmt

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ABORT = 2
EXIT_CONFIG = 3

RUN_FILES = ("trajectory.csv", "events.csv", "summary.json", "config_resolved.json")


# =============================================================================
# UMBRALES
# =============================================================================

def evaluate_thresholds(metrics: Dict[str, float], thresholds: Dict[str, Any]) -> Dict[str, Dict[str, Any]]:
    """
    Un umbral numérico es una cota superior; {"min": a} / {"max": b} fija
    cotas explícitas. Una métrica ausente o NaN cuenta como FAIL.
    """
    checks = {}
    for key, bound in thresholds.items():
        if isinstance(bound, dict):
            lo, hi = bound.get("min"), bound.get("max")
        else:
            lo, hi = None, bound
        value = metrics.get(key)
        ok = value is not None and np.isfinite(value)
        if ok and hi is not None:
            ok = value <= float(hi)
        if ok and lo is not None:
            ok = value >= float(lo)
        checks[key] = {"value": value, "min": lo, "max": hi, "pass": bool(ok)}
    return checks


def exit_status(summary: Dict[str, Any]) -> int:
    if str(summary.get("status", "")).startswith("aborted"):
        return EXIT_ABORT
    return EXIT_OK if summary.get("pass", False) else EXIT_FAIL


# =============================================================================
# SALIDAS POR CORRIDA
# =============================================================================

def _flatten_channels(record: RunRecord) -> Tuple[List[str], np.ndarray]:
    names = ["t"]
    columns = [record.times.reshape(-1, 1)]
    for key in sorted(record.channels):
        arr = np.asarray(record.channels[key], dtype=float)
        flat = arr.reshape(arr.shape[0], -1)
        if flat.shape[1] == 1:
            names.append(key)
        else:
            idx = np.ndindex(*arr.shape[1:])
            names.extend(f"{key}[{','.join(str(i) for i in ix)}]" for ix in idx)
        columns.append(flat)
    if record.lyapunov is not None:
        lyap = np.asarray(record.lyapunov, dtype=float).reshape(record.sample_count, -1)
        names.extend(["V"] if lyap.shape[1] == 1 else [f"V[{i}]" for i in range(lyap.shape[1])])
        columns.append(lyap)
    return names, np.hstack(columns) if record.sample_count else np.empty((0, len(names)))


def write_trajectory(path: Path, record: RunRecord, config) -> None:
    names, table = _flatten_channels(record)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# name={config.name}\n# kind={config.kind}\n# seed={config.seed}\n")
        f.write(f"# h={config.h:.12g}\n# sha256={config.sha256()}\n# status={record.status}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(names)
        for row in table:
            writer.writerow([fmt(v) for v in row])


def write_events(path: Path, record: RunRecord) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["t", "kind", "agent", "value", "message"])
        for e in record.events:
            writer.writerow([fmt(e.t), e.kind, e.agent, fmt(e.value), e.message])


def build_summary(record: RunRecord, config) -> Dict[str, Any]:
    metrics = {k: float(v) for k, v in record.metrics.items()}
    checks = evaluate_thresholds(metrics, config.thresholds)
    completed = record.completed
    return {
        "name": config.name,
        "kind": config.kind,
        "seed": config.seed,
        "h": config.h,
        "t_end": config.t_end,
        "status": record.status,
        "partial": not completed,
        "samples": record.sample_count,
        "runtime": round(record.runtime, 6),
        "metrics": metrics,
        "thresholds": checks,
        "torque_jumps": torque_jump_stats(record),
        "lyapunov_max_increment": metrics.get("lyapunov_max_increment"),
        "pass": completed and all(c["pass"] for c in checks.values()),
        "sha256": config.sha256(),
    }


def write_run(out_dir: Union[str, Path], record: RunRecord, config) -> Dict[str, Any]:
    """Escribe los cuatro archivos de la corrida y devuelve el resumen."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory(out / "trajectory.csv", record, config)
    write_events(out / "events.csv", record)
    summary = build_summary(record, config)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    (out / "config_resolved.json").write_text(config.to_json(), encoding="utf-8")
    verdict = "PASS" if summary["pass"] else ("ABORT" if summary["partial"] else "FAIL")
    logger.info(f"[REPORT] {config.name}: {verdict} -> {out}")
    return summary


# =============================================================================
# AGREGACIÓN
# =============================================================================

def collect_summaries(directory: Union[str, Path]) -> Tuple[List[Dict[str, Any]], List[str]]:
    """Busca summary.json recursivamente; devuelve (resúmenes, archivos faltantes)."""
    root = Path(directory)
    if not root.is_dir():
        raise ConfigurationError(f"no existe el directorio {root}")
    summaries, missing = [], []
    run_dirs = sorted({p.parent for p in root.rglob("*") if p.name in RUN_FILES})
    for run_dir in run_dirs:
        for name in RUN_FILES:
            if not (run_dir / name).exists():
                missing.append(str(run_dir / name))
        path = run_dir / "summary.json"
        if path.exists():
            summaries.append(json.loads(path.read_text(encoding="utf-8")))
    return summaries, missing


def _verdict(s: Dict[str, Any]) -> str:
    if s.get("partial"):
        return "ABORT"
    return "PASS" if s.get("pass") else "FAIL"


def _primary_error(s: Dict[str, Any]) -> Optional[float]:
    m = s.get("metrics", {})
    for key in ("consensus_error", "tracking_error", "attitude_error"):
        if key in m:
            return m[key]
    return None


def aggregate(summaries: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    counts = {"PASS": 0, "FAIL": 0, "ABORT": 0}
    for s in summaries:
        counts[_verdict(s)] += 1
    return {"total": len(summaries), **counts,
            "runtime": float(sum(s.get("runtime", 0.0) for s in summaries))}


def write_report(directory: Union[str, Path]) -> int:
    """Escribe report.txt y report.csv; el código de salida refleja cualquier FAIL o ABORT."""
    root = Path(directory)
    summaries, missing = collect_summaries(root)
    if not summaries:
        raise ConfigurationError(f"no hay summary.json en {root}" +
                                 (f"; faltan: {', '.join(missing)}" if missing else ""))
    summaries = sorted(summaries, key=lambda s: (s.get("name", ""), s.get("h", 0.0)))
    totals = aggregate(summaries)

    with open(root / "report.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["name", "kind", "h", "status", "verdict", "final_error", "velocity_error", "runtime"])
        for s in summaries:
            err = _primary_error(s)
            vel = s.get("metrics", {}).get("velocity_error")
            writer.writerow([s["name"], s["kind"], fmt(s["h"]), s["status"], _verdict(s), fmt(err), fmt(vel),
                             f"{s.get('runtime', 0.0):.6g}"])

    lines = ["=" * 60, "  REPORTE DE ESCENARIOS", "=" * 60]
    for s in summaries:
        err = _primary_error(s)
        err_txt = "-" if err is None else f"{err:.3e}"
        lines.append(f"{_verdict(s):5s}  {s['name']:40s}  h={s['h']:<8.3g} err={err_txt:10s} "
                     f"t={s.get('runtime', 0.0):.2f}s")
        for key, c in s.get("thresholds", {}).items():
            if not c["pass"]:
                lines.append(f"       x {key} = {c['value']} (min={c['min']}, max={c['max']})")
    lines.append("-" * 60)
    lines.append(f"Total: {totals['total']}  PASS: {totals['PASS']}  FAIL: {totals['FAIL']}  "
                 f"ABORT: {totals['ABORT']}  tiempo: {totals['runtime']:.2f} s")
    if missing:
        lines.append("Archivos faltantes:")
        lines.extend(f"  - {m}" for m in missing)
    (root / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"[REPORT] {root}: {totals['PASS']}/{totals['total']} PASS")

    if totals["ABORT"]:
        return EXIT_ABORT
    return EXIT_FAIL if totals["FAIL"] else EXIT_OK


def write_scaling(path: Union[str, Path], rows: Sequence[Dict[str, Any]]) -> Dict[str, float]:
    """
    rows: {"name", "h", "torque_jump_max", "baseline_qddr_peak"} por corrida.
    Devuelve la pendiente log-log por escenario y métrica.
    """
    slopes: Dict[str, float] = {}
    by_name: Dict[str, List[Dict[str, Any]]] = {}
    for r in rows:
        by_name.setdefault(r["name"], []).append(r)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["name", "h", "torque_jump_max", "baseline_qddr_peak"])
        for name in sorted(by_name):
            group = sorted(by_name[name], key=lambda r: r["h"], reverse=True)
            for r in group:
                writer.writerow([name, fmt(r["h"]), fmt(r.get("torque_jump_max")),
                                 fmt(r.get("baseline_qddr_peak"))])
            hs = [r["h"] for r in group]
            for key in ("torque_jump_max", "baseline_qddr_peak"):
                vals = [r.get(key) for r in group]
                if all(v is not None for v in vals) and len(vals) >= 2:
                    slopes[f"{name}:{key}"] = scaling_slope(hs, vals)
        f.write("".join(f"# slope {k} = {v:.6g}\n" for k, v in sorted(slopes.items())))
    return slopes
