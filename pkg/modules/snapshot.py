"""
snapshot.py - Imágenes PNG de reportes y trayectorias (Pillow)

- render_report_png: report.txt como imagen, para adjuntar a un informe
- render_trajectory_png: curvas de las columnas de trajectory.csv
"""

import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

BACKGROUND = (255, 255, 255)
FOREGROUND = (20, 20, 20)
GRID = (220, 220, 220)
PALETTE = [(31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
           (148, 103, 189), (140, 86, 75), (227, 119, 194), (127, 127, 127)]
LINE_HEIGHT = 14
CHAR_WIDTH = 7
MARGIN = 10


def _font():
    return ImageFont.load_default()


def render_report_png(directory: Union[str, Path], width: Optional[int] = None) -> Path:
    """Dibuja report.txt en report.png; `width` reescala manteniendo la proporción."""
    root = Path(directory)
    src = root / "report.txt"
    if not src.exists():
        raise ConfigurationError(f"no existe {src}; ejecute primero el reporte")
    lines = src.read_text(encoding="utf-8").splitlines()
    cols = max((len(line) for line in lines), default=1)
    size = (2 * MARGIN + CHAR_WIDTH * cols, 2 * MARGIN + LINE_HEIGHT * max(len(lines), 1))
    img = Image.new("RGB", size, BACKGROUND)
    draw = ImageDraw.Draw(img)
    font = _font()
    for k, line in enumerate(lines):
        color = PALETTE[3] if line.startswith(("FAIL", "ABORT", "       x")) else FOREGROUND
        draw.text((MARGIN, MARGIN + k * LINE_HEIGHT), line, fill=color, font=font)
    if width:
        resample_method = getattr(Image, 'Resampling', Image).LANCZOS
        img = img.resize((width, max(int(size[1] * width / size[0]), 1)), resample_method)
    out = root / "report.png"
    img.save(out)
    logger.info(f"[REPORT] imagen {out} ({img.size[0]}x{img.size[1]})")
    return out


def _read_trajectory(path: Path):
    with open(path, encoding="utf-8") as f:
        rows = [r for r in csv.reader(line for line in f if not line.startswith("#"))]
    if not rows:
        raise ConfigurationError(f"{path}: trayectoria vacia")
    header, body = rows[0], rows[1:]
    table = np.array([[float(v) if v else np.nan for v in r] for r in body], dtype=float).reshape(len(body), -1)
    return header, table


def _select(header: List[str], channels: Sequence[str]) -> List[int]:
    picked = []
    for ch in channels:
        idx = [k for k, name in enumerate(header) if name == ch or name.startswith(f"{ch}[")]
        if not idx:
            raise ConfigurationError(f"canal '{ch}' no existe; disponibles: {', '.join(header[1:])}")
        picked.extend(idx)
    return picked


def render_trajectory_png(run_dir: Union[str, Path], channels: Sequence[str] = ("q",),
                          size=(800, 400)) -> Path:
    """Curvas t -> canal para cada columna de los canales pedidos."""
    root = Path(run_dir)
    header, table = _read_trajectory(root / "trajectory.csv")
    cols = _select(header, channels)
    t = table[:, 0]
    values = table[:, cols]
    img = Image.new("RGB", size, BACKGROUND)
    draw = ImageDraw.Draw(img)
    w, h = size
    box = (4 * MARGIN, MARGIN, w - MARGIN, h - 3 * MARGIN)
    draw.rectangle(box, outline=FOREGROUND)
    finite = values[np.isfinite(values)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    t0, t1 = float(t[0]), float(t[-1]) if len(t) > 1 else float(t[0]) + 1.0

    def px(tk, v):
        x = box[0] + (tk - t0) / (t1 - t0) * (box[2] - box[0])
        y = box[3] - (v - lo) / (hi - lo) * (box[3] - box[1])
        return x, y

    if lo < 0.0 < hi:
        draw.line([px(t0, 0.0), px(t1, 0.0)], fill=GRID)
    for k in range(values.shape[1]):
        pts = [px(tk, v) for tk, v in zip(t, values[:, k]) if np.isfinite(v)]
        color = PALETTE[k % len(PALETTE)]
        if len(pts) > 1:
            draw.line(pts, fill=color, width=1)
        elif pts:
            draw.point(pts, fill=color)
    font = _font()
    draw.text((MARGIN, box[1]), f"{hi:.3g}", fill=FOREGROUND, font=font)
    draw.text((MARGIN, box[3] - LINE_HEIGHT), f"{lo:.3g}", fill=FOREGROUND, font=font)
    draw.text((box[0], h - 2 * MARGIN), f"t = {t0:g} .. {t1:g} s   {', '.join(channels)}",
              fill=FOREGROUND, font=font)
    out = root / f"trajectory_{'_'.join(channels)}.png"
    img.save(out)
    logger.info(f"[REPORT] imagen {out}")
    return out
