# Configuração do Simulador de Consenso
import os

# Diretório base do projeto
BASE_DIR = os.path.dirname(os.path.abspath(__file__))

# Cenários incluídos no repositório (um arquivo JSON por critério de aceitação)
SCENARIOS_DIR = os.path.join(BASE_DIR, "scenarios")

# Diretório de saída padrão:
#   1. --out na linha de comando
#   2. variável de ambiente CONSENSO_OUT
#   3. "output_dir" em settings.json
#   4. OUTPUT_DIR abaixo
OUTPUT_ENV_VAR = "CONSENSO_OUT"
OUTPUT_DIR = os.path.join(BASE_DIR, "resultados")

# Varredura de passo (suite --escalamento)
SCALING_STEPS = (1e-2, 1e-3, 1e-4)  # varredura de h para o relatório de escalamento

# Tolerâncias dos oráculos
DUAL_TOLERANCE = 1e-6
QUAT_NORM_TOLERANCE = 1e-8

# Execução do suite
SUITE_WORKERS = 2

# Logging
LOG_LEVEL = "INFO"

# Testes longos de aceitação (pytest) só rodam com esta variável definida
ACCEPTANCE_ENV_VAR = "CONSENSO_ACEPTACION"

APP_TITLE = "Consenso-Py - Simulação de consenso e seguimento com atrasos"
