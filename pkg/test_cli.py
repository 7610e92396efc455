"""
Pruebas de la carga de escenarios, de la línea de comandos y del reporte.

Ejecutar con: pytest test_cli.py
"""

import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import main
from config import SCENARIOS_DIR
from modules import report
from modules.errors import ConfigurationError, ModelError
from modules.scenario_config import config_from_dict, list_scenarios, load_config
from modules.scenarios import rotation_graphs

def _scenario(name):
    return os.path.join(SCENARIOS_DIR, f"{name}.json")


def _write(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _read_rows(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return [line for line in lines if not line.startswith("#")]


# =============================================================================
# CARGA Y VALIDACIÓN
# =============================================================================

@pytest.mark.parametrize("path", list_scenarios(SCENARIOS_DIR), ids=lambda p: p.stem)
def test_escenarios_incluidos_validan(path):
    config = load_config(path)
    assert config.name == path.stem
    assert config.h > 0 and config.t_end > 0


def test_gamma_por_debajo_de_la_cota():
    with pytest.raises(ConfigurationError, match="gamma must exceed"):
        load_config(_scenario("distributed_tracking_signum"), ["refdyn.gamma=0.1"])


def test_variante_fija_con_conmutacion():
    raw = {"kind": "consensus-lagrangian", "graph": {"graphs": rotation_graphs(4), "period": 1.0},
           "refdyn": {"variant": "second-order-fixed", "roots": [1.0, 2.0]}}
    with pytest.raises(ConfigurationError, match="fixed topology"):
        config_from_dict(raw)


def test_raices_no_positivas():
    with pytest.raises(ConfigurationError, match="strictly positive"):
        load_config(_scenario("consensus_fixed_topology"), ["refdyn.roots=[1.0, -2.0]"])


def test_json_invalido_indica_la_linea(tmp_path):
    bad = tmp_path / "roto.json"
    bad.write_text('{\n  "kind": "consensus-lagrangian",\n  "name": ,\n}\n', encoding="utf-8")
    with pytest.raises(ConfigurationError) as info:
        load_config(bad)
    assert info.value.line == 3


def test_override_desconocido():
    with pytest.raises(ConfigurationError, match="clave desconocida"):
        load_config(_scenario("consensus_fixed_topology"), ["integration.paso=0.1"])
    config = load_config(_scenario("consensus_fixed_topology"), ["integration.t_end=2.5"])
    assert config.t_end == 2.5


def test_archivo_inexistente(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "nada.json")


@pytest.mark.parametrize("name", ["consensus_switching_second_order", "distributed_tracking_signum",
                                  "tpv_adaptive"])
def test_eco_resuelto_vuelve_a_cargar_igual(name):
    config = load_config(_scenario(name), seed=5)
    again = config_from_dict(json.loads(config.to_json()))
    assert again.to_json() == config.to_json()
    assert again.sha256() == config.sha256()


# =============================================================================
# LÍNEA DE COMANDOS
# =============================================================================

def test_run_con_horizonte_cero(tmp_path):
    code = main.main(["run", "--config", _scenario("consensus_fixed_topology"), "--out", str(tmp_path),
                      "--set", "integration.t_end=0"])
    out = tmp_path / "consensus_fixed_topology"
    for name in report.RUN_FILES:
        assert (out / name).exists()
    rows = _read_rows(out / "trajectory.csv")
    assert len(rows) == 2
    assert rows[0].startswith("t,")
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["samples"] == 1
    # la condición inicial no está en consenso
    assert code == report.EXIT_FAIL
    assert not summary["thresholds"]["consensus_error"]["pass"]


def test_run_es_determinista(tmp_path):
    args = ["--config", _scenario("consensus_switching_second_order"), "--set", "integration.t_end=0.2"]
    main.main(["run", "--out", str(tmp_path / "a"), *args])
    main.main(["run", "--out", str(tmp_path / "b"), *args])
    a = (tmp_path / "a" / "consensus_switching_second_order" / "trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "consensus_switching_second_order" / "trajectory.csv").read_bytes()
    assert a == b


def test_run_con_error_de_configuracion(tmp_path):
    code = main.main(["run", "--config", str(tmp_path / "nada.json"), "--out", str(tmp_path)])
    assert code == report.EXIT_CONFIG


def test_run_con_invariante_rota(tmp_path, monkeypatch):
    def _falla(cfg, run_logger=None):
        raise ModelError("matriz de inercia singular")
    monkeypatch.setattr(main.sim, "run", _falla)
    code = main.main(["run", "--config", _scenario("consensus_fixed_topology"), "--out", str(tmp_path)])
    assert code == report.EXIT_ABORT


def test_validate_con_eco(capsys):
    code = main.main(["validate", "--config", _scenario("pointmass_output_feedback"), "--echo"])
    assert code == report.EXIT_OK
    assert '"kind": "pointmass-tracking"' in capsys.readouterr().out


def test_suite_con_barrido_de_paso(tmp_path):
    scen = tmp_path / "escenarios"
    scen.mkdir()
    _write(scen / "anillo.json", {"kind": "consensus-lagrangian", "integration": {"t_end": 0.1, "stride": 5}})
    _write(scen / "masa.json", {"kind": "pointmass-tracking", "integration": {"t_end": 0.1, "stride": 5}})
    out = tmp_path / "salida"
    code = main.main(["suite", "--dir", str(scen), "--out", str(out), "--workers", "2",
                      "--sweep", "integration.h=0.01,0.005"])
    assert code == report.EXIT_OK
    assert (out / "anillo__h=0.01" / "summary.json").exists()
    assert (out / "masa__h=0.005" / "summary.json").exists()
    assert (out / "scaling.csv").exists()
    text = (out / "report.txt").read_text(encoding="utf-8")
    assert "PASS: 4" in text


def test_build_jobs_combina_barridos():
    jobs = main.build_jobs(["a.json"], ["integration.h=0.01,0.001", "refdyn.lambda_m=0,1"], "out")
    assert len(jobs) == 4
    assert jobs[0][1] == ["integration.h=0.01", "refdyn.lambda_m=0"]
    assert jobs[-1][2] == os.path.join("out", "a") + "__h=0.001__lambda_m=1"
    with pytest.raises(ConfigurationError):
        main.build_jobs(["a.json"], ["sin_igual"], "out")


# =============================================================================
# REPORTE
# =============================================================================

def _fake_run(root, name, status="completed", ok=True):
    run = root / name
    run.mkdir(parents=True)
    for f in report.RUN_FILES:
        (run / f).write_text("", encoding="utf-8")
    summary = {"name": name, "kind": "consensus-lagrangian", "h": 0.001, "status": status,
               "partial": status != "completed", "pass": ok, "runtime": 0.5,
               "metrics": {"consensus_error": 1e-3 if ok else 0.5},
               "thresholds": {"consensus_error": {"value": 1e-3 if ok else 0.5, "min": None, "max": 0.01,
                                                  "pass": ok}}}
    (run / "summary.json").write_text(json.dumps(summary), encoding="utf-8")


def test_codigos_de_salida_del_reporte(tmp_path):
    _fake_run(tmp_path, "uno")
    assert report.write_report(tmp_path) == report.EXIT_OK
    _fake_run(tmp_path, "dos", ok=False)
    assert report.write_report(tmp_path) == report.EXIT_FAIL
    _fake_run(tmp_path, "tres", status="aborted:divergence", ok=False)
    assert report.write_report(tmp_path) == report.EXIT_ABORT
    rows = (tmp_path / "report.csv").read_text(encoding="utf-8").splitlines()
    assert len(rows) == 4
    assert main.main(["report", "--dir", str(tmp_path)]) == report.EXIT_ABORT


def test_reporte_sin_resumenes(tmp_path):
    (tmp_path / "run").mkdir()
    (tmp_path / "run" / "trajectory.csv").write_text("", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="summary.json"):
        report.write_report(tmp_path)
    assert main.main(["report", "--dir", str(tmp_path)]) == report.EXIT_CONFIG


def test_umbrales_con_cotas_explicitas():
    checks = report.evaluate_thresholds({"a": 0.5, "b": float("nan")},
                                        {"a": {"min": 0.1, "max": 1.0}, "b": 1.0, "c": 1.0})
    assert checks["a"]["pass"]
    assert not checks["b"]["pass"]
    assert not checks["c"]["pass"] and checks["c"]["value"] is None
    assert not report.evaluate_thresholds({"a": 0.05}, {"a": {"min": 0.1}})["a"]["pass"]


# =============================================================================
# IMÁGENES
# =============================================================================

def test_imagenes_de_trayectoria_y_reporte(tmp_path):
    from PIL import Image
    main.main(["run", "--config", _scenario("pointmass_output_feedback"), "--out", str(tmp_path),
               "--set", "integration.t_end=0.5", "--png", "x", "x_d"])
    png = tmp_path / "pointmass_output_feedback" / "trajectory_x_x_d.png"
    assert png.exists()
    with Image.open(png) as img:
        assert img.size == (800, 400)
    assert main.main(["report", "--dir", str(tmp_path), "--png"]) in (report.EXIT_OK, report.EXIT_FAIL)
    with Image.open(tmp_path / "report.png") as img:
        assert img.size[0] > 0 and img.size[1] > 0


def test_canal_inexistente_en_la_imagen(tmp_path):
    from modules.snapshot import render_trajectory_png
    main.main(["run", "--config", _scenario("consensus_fixed_topology"), "--out", str(tmp_path),
               "--set", "integration.t_end=0"])
    with pytest.raises(ConfigurationError, match="no existe"):
        render_trajectory_png(tmp_path / "consensus_fixed_topology", ["omega"])
