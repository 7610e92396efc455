"""
Script de Pruebas Interactivas para Consenso-Py

Ejecutar: python run_tests.py            (consola)
          python run_tests.py --auto     (verificación automatizada)
          python run_tests.py --rapido   (solo corridas cortas de los presets)

Permite correr los escenarios predefinidos con horizontes cortos y ver
sus métricas sin escribir archivos de resultados.
"""

import sys
import os

import numpy as np

# Agregar el directorio raíz al path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import SCENARIOS_DIR
from modules import sim
from modules.control import tpv_fbl_assemble, tpv_fbl_extract
from modules.errors import ConsensoError
from modules.models import TwoLinkArm
from modules.refdyn import hurwitz_from_roots
from modules.scenario_config import config_from_dict, list_scenarios, load_config
from modules.scenarios import ScenarioPresets

QUICK_T_END = 0.5


class TestConsole:
    """Consola interactiva para correr presets y escenarios."""

    def __init__(self):
        self.presets = ScenarioPresets.all()
        self.files = list_scenarios(SCENARIOS_DIR)

    def show_menu(self):
        """Muestra menú de comandos."""
        print("\n" + "=" * 60)
        print("  COMANDOS DISPONIBLES")
        print("=" * 60)
        print("""
  PRESETS:
    1. presets               - Listar presets
    2. run <n> [t_end]       - Correr preset n (ej: run 3 2.0)

  ARCHIVOS:
    3. files                 - Listar escenarios de scenarios/
    4. file <n> [t_end]      - Correr el archivo n
    5. validate <n>          - Validar el archivo n

    q. Salir
""")

    def _print_metrics(self, record):
        print(f"  Estado: {record.status}  muestras: {record.sample_count}  tiempo: {record.runtime:.2f} s")
        for key, value in sorted(record.metrics.items()):
            print(f"    {key:28s} {value:.6g}")
        for e in record.events[:10]:
            print(f"    t={e.t:<10.4g} {e.kind:12s} {e.message}")

    def run_preset(self, index: int, t_end: float):
        preset = self.presets[index]
        print(f"\n[RUN] {preset.name}: {preset.description}")
        config = config_from_dict(preset.data, [f"integration.t_end={t_end}"])
        self._print_metrics(sim.run(config))

    def run_file(self, index: int, t_end=None):
        path = self.files[index]
        overrides = [f"integration.t_end={t_end}"] if t_end is not None else []
        config = load_config(path, overrides)
        print(f"\n[RUN] {config.name} ({config.kind}), T_end={config.t_end:g}")
        self._print_metrics(sim.run(config))

    def process_command(self, cmd: str) -> bool:
        """Procesa un comando. Retorna False para salir."""
        parts = cmd.strip().lower().split()
        if not parts:
            return True

        command = parts[0]
        args = parts[1:]

        try:
            if command in ('q', 'quit'):
                return False

            elif command in ('1', 'presets'):
                for i, p in enumerate(self.presets, 1):
                    print(f"  {i:2d}. {p.name:40s} {p.kind.value}")

            elif command in ('2', 'run'):
                index = int(args[0]) - 1 if args else 0
                t_end = float(args[1]) if len(args) > 1 else QUICK_T_END
                self.run_preset(index, t_end)

            elif command in ('3', 'files'):
                for i, p in enumerate(self.files, 1):
                    print(f"  {i:2d}. {p.name}")

            elif command in ('4', 'file'):
                index = int(args[0]) - 1 if args else 0
                self.run_file(index, float(args[1]) if len(args) > 1 else QUICK_T_END)

            elif command in ('5', 'validate'):
                index = int(args[0]) - 1 if args else 0
                config = load_config(self.files[index])
                print(f"✓ {config.name} valido (sha256 {config.sha256()[:12]})")

            else:
                print(f"Comando no reconocido: {command}")
                self.show_menu()

        except ConsensoError as e:
            print(f"Error: {e}")
        except (IndexError, ValueError) as e:
            print(f"Argumento invalido: {e}")

        return True

    def run(self):
        """Ejecuta la consola interactiva."""
        print("\n" + "=" * 60)
        print("  CONSENSO-PY - Consola de Pruebas")
        print("=" * 60)
        self.show_menu()
        print("\nEscribe un comando (o 'q' para salir):")

        running = True
        while running:
            try:
                cmd = input("\n> ").strip()
                running = self.process_command(cmd)
            except KeyboardInterrupt:
                print("\n[Ctrl+C] Saliendo...")
                break
            except EOFError:
                break
        print("\n¡Hasta luego!")


def run_automated_test(quick_only: bool = False) -> bool:
    """
    Ejecuta una secuencia de pruebas automatizada.
    Útil para validar que todo funciona.
    """
    print("\n" + "=" * 60)
    print("  TEST AUTOMATIZADO")
    print("=" * 60)

    tests_passed = 0
    tests_failed = 0

    def check(name, condition):
        nonlocal tests_passed, tests_failed
        if condition:
            print(f"  ✓ {name}")
            tests_passed += 1
        else:
            print(f"  ✗ {name}")
            tests_failed += 1

    if not quick_only:
        # Test 1: Oráculos estructurales
        print("\n[TEST 1] Oraculos estructurales")
        rng = np.random.default_rng(0)
        arm = TwoLinkArm()
        worst = 0.0
        for _ in range(1000):
            q, dq, z, dz = rng.uniform(-3, 3, size=(4, 2))
            lhs = arm.regressor(q, dq, z, dz) @ arm.params
            rhs = arm.inertia(q) @ dz + arm.coriolis(q, dq) @ z + arm.gravity(q)
            worst = max(worst, np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs)))
        check(f"Regresor del brazo ({worst:.1e})", worst <= 1e-9)
        poly = hurwitz_from_roots([1.0, 2.0, 3.0])
        check("Coeficientes de Hurwitz (6, 11, 6)", np.allclose(poly.coeffs, (6.0, 11.0, 6.0)))
        R = np.eye(3)
        ds, w = tpv_fbl_extract(tpv_fbl_assemble(R, 9.81, 0.3, [0.1, -0.2, 0.0], 2.0), R, 9.81, 2.0)
        check("Linealizacion TPV ida y vuelta", abs(ds - 0.3) <= 1e-12 and np.allclose(w, [0.1, -0.2, 0.0]))

        # Test 2: Archivos de escenario
        print("\n[TEST 2] Validacion de scenarios/")
        for path in list_scenarios(SCENARIOS_DIR):
            try:
                load_config(path)
                check(f"{path.stem} valido", True)
            except ConsensoError as e:
                print(f"    {e}")
                check(f"{path.stem} valido", False)

    # Test 3: Corridas cortas
    print(f"\n[TEST 3] Corridas cortas de presets (T_end = {QUICK_T_END:g} s)")
    for preset in ScenarioPresets.all():
        try:
            config = config_from_dict(preset.data, [f"integration.t_end={QUICK_T_END}"])
            record = sim.run(config)
            finite = all(np.isfinite(v) for v in record.metrics.values())
            check(f"{preset.name} ({record.runtime:.2f} s)", record.completed and finite)
        except ConsensoError as e:
            print(f"    {e}")
            check(preset.name, False)

    print("\n" + "=" * 60)
    print(f"  RESULTADO: {tests_passed} pasaron, {tests_failed} fallaron")
    print("=" * 60)
    return tests_failed == 0


if __name__ == "__main__":
    if "--auto" in sys.argv or "--rapido" in sys.argv:
        success = run_automated_test(quick_only="--rapido" in sys.argv)
        sys.exit(0 if success else 1)
    else:
        console = TestConsole()
        console.run()
