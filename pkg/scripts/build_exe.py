import PyInstaller.__main__
import os

# Nombre del script principal
script_name = "main.py"

# Carpetas a incluir
# Formato: (origen, destino)
add_data = [
    ('scenarios', 'scenarios'),  # escenarios de ejemplo junto al ejecutable
    ('settings.json', '.'),
]

# PyInstaller usa ';' en Windows y ':' en el resto
sep = ';' if os.name == 'nt' else ':'
add_data_args = [f'--add-data={src}{sep}{dest}' for src, dest in add_data]

# Argumentos para PyInstaller
args = [
    script_name,
    '--name=consenso',
    '--onefile',        # Crear un solo archivo ejecutable
    '--console',        # Herramienta de línea de comandos
    '--clean',          # Limpiar caché antes de construir
    '--noconfirm',      # No preguntar para sobrescribir
] + add_data_args

# Imports ocultos que a veces PyInstaller no detecta
hidden_imports = [
    'modules.closed_loops',   # se importa desde la factory en tiempo de ejecución
    'scipy.linalg',
    'networkx',
    'PIL',
    'PIL.Image',
    'PIL.ImageDraw',
]

for imp in hidden_imports:
    args.append(f'--hidden-import={imp}')

print("Iniciando compilación con los siguientes argumentos:")
print(args)

# Ejecutar PyInstaller
PyInstaller.__main__.run(args)

print("\nCompilación finalizada.")
print("El ejecutable se encuentra en la carpeta 'dist'.")
