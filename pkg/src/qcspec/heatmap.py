"""Heatmap rasterization of spectrum grids.

Images put frequency on the horizontal axis (as omega / 2pi in (0, 0.5),
ascending left to right) and quantile level on the vertical axis (ascending
bottom to top). Colors come from a fixed 11-stop viridis-like ramp with
linear interpolation, and the value range is the data min/max, so renders
are deterministic functions of the grid.
"""

import numpy as np
from PIL import Image

__all__ = ["colormap", "render_heatmap", "save_heatmap"]

# 11 anchor colors, dark blue-violet to yellow, evenly spaced in [0, 1]
_RAMP = np.array(
    [
        (0.267, 0.005, 0.329),
        (0.283, 0.141, 0.458),
        (0.254, 0.265, 0.530),
        (0.207, 0.372, 0.553),
        (0.164, 0.471, 0.558),
        (0.128, 0.567, 0.551),
        (0.135, 0.659, 0.518),
        (0.267, 0.749, 0.441),
        (0.478, 0.821, 0.318),
        (0.741, 0.873, 0.150),
        (0.993, 0.906, 0.144),
    ]
)


def colormap(v):
    """Map values in [0, 1] to uint8 RGB via the fixed ramp."""
    v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
    pos = v * (len(_RAMP) - 1)
    low = np.floor(pos).astype(int)
    high = np.minimum(low + 1, len(_RAMP) - 1)
    frac = (pos - low)[..., None]
    rgb = (1.0 - frac) * _RAMP[low] + frac * _RAMP[high]
    return np.round(rgb * 255.0).astype(np.uint8)


def render_heatmap(grid, scale=4):
    """Rasterize a grid to an RGB array of shape (L*scale, F*scale, 3).

    One block of scale x scale pixels per cell; a constant grid maps to the
    low end of the ramp.
    """
    if scale < 1:
        raise ValueError("scale must be at least 1")
    s = np.asarray(grid.s, dtype=float)
    lo, hi = float(s.min()), float(s.max())
    norm = np.zeros_like(s) if hi <= lo else (s - lo) / (hi - lo)
    # rows top-down = levels descending; columns = frequencies ascending
    cells = colormap(norm.T[::-1])
    return np.repeat(np.repeat(cells, scale, axis=0), scale, axis=1)


def save_heatmap(path, grid, scale=4):
    """Render a grid and write it as a PNG; returns (width, height)."""
    img = render_heatmap(grid, scale)
    Image.fromarray(img, mode="RGB").save(path, format="PNG")
    return img.shape[1], img.shape[0]
