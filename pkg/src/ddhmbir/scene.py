"""Ground-truth reflectance maps."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .formats import read_raster
from .grid import check_grid

R_MIN = 1e-4
SCALE_STEP = 2 ** 0.5


def _paint(canvas, row, col, height, width):
    canvas[max(row, 0):row + height, max(col, 0):col + width] = True


def _three_bars(canvas, row, col, w, length, vertical):
    for k in range(3):
        if vertical:
            _paint(canvas, row, col + 2 * k * w, length, w)
        else:
            _paint(canvas, row + 2 * k * w, col, w, length)


def _bar_pattern(canvas, row, col, size):
    # one USAF-style group per call, recursing into the lower-right quadrant
    w = int(round(size / 8))
    if w < 2:
        return
    w_h = max(2, int(round(w / SCALE_STEP)))
    length = 2 * w
    _three_bars(canvas, row, col, w, length, vertical=True)
    top = row + length + w // 2
    _three_bars(canvas, top, col, w_h, length, vertical=False)
    _paint(canvas, top, col + length + w, 2 * w, w)  # numeral-like tag
    half = size // 2
    _bar_pattern(canvas, row + half, col + half, half)


def bar_target(n: int, levels: tuple[float, float] = (R_MIN, 1.0),
               extent: float = 1.0) -> np.ndarray:
    """Two-level bar chart loosely modelled on the 1951 USAF target.

    The chart fills a centred square of side ``extent * n``; the rest of the
    grid is background. Each group holds three vertical bars of width ``w``
    and three horizontal bars of width ``w / sqrt(2)``; groups halve in size
    toward the lower-right corner until the bars would be thinner than 2 px.
    """
    n = check_grid(n)
    background, foreground = levels
    if not 0 < background < foreground <= 1:
        raise ValueError("levels must satisfy 0 < background < foreground <= 1")
    if not 0 < extent <= 1:
        raise ValueError("extent must lie in (0, 1]")
    size = int(round(extent * n))
    lo = (n - size) // 2
    canvas = np.zeros((n, n), dtype=bool)
    _bar_pattern(canvas[lo:lo + size, lo:lo + size], 0, 0, size)
    return np.where(canvas, foreground, background).astype(float)


def load_reflectance(path, n: int, r_min: float = R_MIN) -> np.ndarray:
    """Read an 8-bit graymap, resample bilinearly to ``n x n``, map to ``[r_min, 1]``."""
    n = check_grid(n)
    img = read_raster(path).astype(float) / 255.0
    if img.shape != (n, n):
        img = ndimage.zoom(img, (n / img.shape[0], n / img.shape[1]), order=1,
                           mode="nearest", grid_mode=True)
        img = np.clip(img, 0.0, 1.0)
    return r_min * (1.0 - img) + img
