"""
Consenso-Py - Simulação de consenso e seguimento com atrasos
Ponto de entrada principal (linha de comando).

Subcomandos:
- run      --config <arquivo> [--out <dir>] [--set chave=valor]... [--seed n] [--png canal...]
- suite    --dir <cenarios> [--out <dir>] [--sweep chave=v1,v2] [--escalamento]
- validate --config <arquivo> [--echo]
- report   --dir <resultados> [--png]

Arquitetura do suite: Producer-Consumer com threads
- Thread Principal: enfileira os trabalhos e agrega os resumos
- Threads Worker: carregam, simulam e escrevem cada corrida no seu diretório

Códigos de saída: 0 ok, 1 algum FAIL, 2 corrida abortada, 3 erro de configuração.
"""

import argparse
import json
import logging
import os
import queue
import sys
import threading
from typing import Dict, List, Optional, Sequence, Tuple

# Garantir que os modulos podem ser importados
current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.append(current_dir)

from config import (APP_TITLE, LOG_LEVEL, OUTPUT_DIR, OUTPUT_ENV_VAR, SCALING_STEPS,
                    SCENARIOS_DIR, SUITE_WORKERS)
from modules import report, sim, snapshot
from modules.errors import ConfigurationError, ConsensoError
from modules.factory import get_available_kinds
from modules.scenario_config import list_scenarios, load_config
from modules.utils import configurar_logging

logger = logging.getLogger("consenso")

# Variaveis globais de configuracao (podem ser sobrescritas por settings.json)
ACTIVE_OUTPUT = OUTPUT_DIR
ACTIVE_LOG_LEVEL = LOG_LEVEL
ACTIVE_WORKERS = SUITE_WORKERS


def load_custom_settings():
    """Carrega configuracao de settings.json se existir."""
    global ACTIVE_OUTPUT, ACTIVE_LOG_LEVEL, ACTIVE_WORKERS

    settings_path = os.path.join(current_dir, "settings.json")
    if os.path.exists(settings_path):
        try:
            with open(settings_path, 'r', encoding='utf-8') as f:
                settings = json.load(f)

            if "output_dir" in settings:
                out = settings["output_dir"]
                ACTIVE_OUTPUT = out if os.path.isabs(out) else os.path.join(current_dir, out)
            ACTIVE_LOG_LEVEL = settings.get("log_level", ACTIVE_LOG_LEVEL)
            ACTIVE_WORKERS = max(int(settings.get("suite_workers", ACTIVE_WORKERS)), 1)

        except Exception as e:
            print(f"[ERRO] Erro carregando settings.json: {e}")


def resolve_output_root(cli_value: Optional[str]) -> str:
    """--out > variável de ambiente > settings.json > config.py."""
    return cli_value or os.environ.get(OUTPUT_ENV_VAR) or ACTIVE_OUTPUT


def show_startup_info(command: str):
    """Mostra informacoes de inicializacao."""
    print("=" * 60)
    print(f"  {APP_TITLE}")
    print("=" * 60)
    print(f"  Comando: {command}")
    print(f"  Tipos de cenario: {len(get_available_kinds())}")
    print("=" * 60)


# =============================================================================
# SUBCOMANDOS
# =============================================================================

def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config, args.set, args.seed)
    except ConfigurationError as e:
        print(f"[ERRO] {e}")
        return report.EXIT_CONFIG
    print(f"[INFO] {cfg.name}: {cfg.kind} valido (h={cfg.h:g}, T_end={cfg.t_end:g})")
    if args.echo:
        print(cfg.to_json())
    return report.EXIT_OK


def _run_one(path: str, overrides: Sequence[str], seed: Optional[int], out_dir: str) -> Dict:
    cfg = load_config(path, overrides, seed)
    record = sim.run(cfg)
    summary = report.write_run(out_dir, record, cfg)
    summary["baseline_qddr_peak"] = record.metrics.get("baseline_qddr_peak")
    return summary


def cmd_run(args) -> int:
    out_root = resolve_output_root(args.out)
    try:
        name = os.path.splitext(os.path.basename(args.config))[0]
        summary = _run_one(args.config, args.set, args.seed, os.path.join(out_root, name))
    except ConfigurationError as e:
        print(f"[ERRO] {e}")
        return report.EXIT_CONFIG
    except ConsensoError as e:
        print(f"[ERRO] corrida interrumpida: {e}")
        return report.EXIT_ABORT
    status = report.exit_status(summary)
    if args.png:
        try:
            snapshot.render_trajectory_png(os.path.join(out_root, name), args.png)
        except ConfigurationError as e:
            print(f"[ERRO] {e}")
    print(f"[INFO] {summary['name']}: {summary['status']} -> {'PASS' if summary['pass'] else 'FAIL'}")
    for key, c in summary["thresholds"].items():
        print(f"       {'✓' if c['pass'] else '✗'} {key} = {c['value']}")
    return status


def _parse_sweep(spec: str) -> Tuple[str, List]:
    if "=" not in spec:
        raise ConfigurationError(f"--sweep invalido '{spec}', use chave=v1,v2,...")
    key, raw = spec.split("=", 1)
    values = []
    for item in raw.split(","):
        try:
            values.append(json.loads(item))
        except json.JSONDecodeError:
            values.append(item)
    return key.strip(), values


def build_jobs(paths: Sequence[str], sweeps: Sequence[str], out_root: str,
               overrides: Sequence[str] = ()) -> List[Tuple[str, List[str], str]]:
    """(arquivo, overrides, diretorio) para cada combinação de cenário e varredura."""
    jobs = [(str(p), list(overrides), os.path.join(out_root, os.path.splitext(os.path.basename(p))[0]))
            for p in paths]
    for spec in sweeps:
        key, values = _parse_sweep(spec)
        leaf = key.split(".")[-1]
        jobs = [(p, ov + [f"{key}={json.dumps(v)}"], f"{d}__{leaf}={v}")
                for p, ov, d in jobs for v in values]
    return jobs


def worker_suite(job_queue, result_queue, seed):
    """Thread worker: consome trabalhos até encontrar None."""
    while True:
        job = job_queue.get()
        if job is None:
            job_queue.task_done()
            break
        path, overrides, out_dir = job
        try:
            result_queue.put(("ok", path, _run_one(path, overrides, seed, out_dir)))
        except ConsensoError as e:
            result_queue.put(("config", path, str(e)))
        except Exception as e:
            logger.exception(f"[SUITE] falha inesperada em {path}")
            result_queue.put(("error", path, str(e)))
        finally:
            job_queue.task_done()


def cmd_suite(args) -> int:
    out_root = resolve_output_root(args.out)
    paths = list_scenarios(args.dir)
    if not paths:
        print(f"[ERRO] Nenhum cenario em {args.dir}")
        return report.EXIT_CONFIG
    sweeps = list(args.sweep)
    if args.escalamento:
        sweeps.append("integration.h=" + ",".join(f"{h:g}" for h in SCALING_STEPS))
    try:
        jobs = build_jobs(paths, sweeps, out_root, args.set)
    except ConfigurationError as e:
        print(f"[ERRO] {e}")
        return report.EXIT_CONFIG

    # Filas de comunicacao thread-safe
    job_queue = queue.Queue()
    result_queue = queue.Queue()
    workers = [threading.Thread(target=worker_suite, args=(job_queue, result_queue, args.seed), daemon=True)
               for _ in range(min(args.workers or ACTIVE_WORKERS, len(jobs)))]
    for w in workers:
        w.start()
    for job in jobs:
        job_queue.put(job)
    for _ in workers:
        job_queue.put(None)

    print(f"[INFO] Suite: {len(jobs)} corridas em {len(workers)} threads -> {out_root}")
    summaries, config_errors = [], 0
    for _ in jobs:
        kind, path, payload = result_queue.get()
        if kind == "ok":
            summaries.append(payload)
            print(f"[INFO] {payload['name']} (h={payload['h']:g}): {payload['status']}")
        else:
            config_errors += 1
            print(f"[ERRO] {os.path.basename(path)}: {payload}")
    for w in workers:
        w.join()

    if any(s.startswith("integration.h=") for s in sweeps) and summaries:
        rows = [{"name": s["name"], "h": s["h"],
                 "torque_jump_max": s["metrics"].get("torque_jump_max"),
                 "baseline_qddr_peak": s.get("baseline_qddr_peak")} for s in summaries]
        slopes = report.write_scaling(os.path.join(out_root, "scaling.csv"), rows)
        for key, slope in sorted(slopes.items()):
            print(f"[INFO] pendente log-log {key}: {slope:.3f}")

    status = report.write_report(out_root) if summaries else report.EXIT_OK
    if config_errors:
        return report.EXIT_CONFIG
    return status


def cmd_report(args) -> int:
    try:
        status = report.write_report(args.dir)
        if args.png:
            snapshot.render_report_png(args.dir)
    except ConfigurationError as e:
        print(f"[ERRO] {e}")
        return report.EXIT_CONFIG
    with open(os.path.join(args.dir, "report.txt"), encoding="utf-8") as f:
        print(f.read(), end="")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="consenso", description=APP_TITLE)
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING...")
    sub = parser.add_subparsers(dest="command", required=True)

    def overrides(p):
        p.add_argument("--set", action="append", default=[], metavar="CHAVE=VALOR",
                       help="sobrescreve uma chave do cenario (valor em JSON)")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("run", help="simula um cenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--png", nargs="+", default=None, metavar="CANAL",
                   help="desenha os canais indicados em trajectory_<canal>.png")
    overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suite", help="simula todos os cenarios de um diretorio")
    p.add_argument("--dir", default=SCENARIOS_DIR)
    p.add_argument("--out", default=None)
    p.add_argument("--sweep", action="append", default=[], metavar="CHAVE=V1,V2")
    p.add_argument("--escalamento", action="store_true", help=f"varre integration.h em {SCALING_STEPS}")
    p.add_argument("--workers", type=int, default=None)
    overrides(p)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("validate", help="valida um cenario sem simular")
    p.add_argument("--config", required=True)
    p.add_argument("--echo", action="store_true", help="imprime o cenario resolvido")
    overrides(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="agrega summary.json de um diretorio")
    p.add_argument("--dir", required=True)
    p.add_argument("--png", action="store_true", help="gera report.png a partir de report.txt")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Funcao principal da aplicacao."""
    load_custom_settings()
    args = build_parser().parse_args(argv)
    configurar_logging(args.log_level or ACTIVE_LOG_LEVEL)
    show_startup_info(args.command)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
