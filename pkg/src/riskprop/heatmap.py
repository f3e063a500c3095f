"""Pixel heatmaps of object risk scores.

Object scores are painted into their masks (or boxes), blurred with a
truncated Gaussian and rescaled to [0, 1].  Colour output maps 0 to pure
blue and 1 to pure red through a fixed 256-entry table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal, Mapping

import numpy as np

from riskprop import pnm
from riskprop.errors import InputError
from riskprop.propagation import PropagationResult
from riskprop.scene import Scene

DEFAULT_SIGMA = 3.0

Stage = Literal["initial", "propagated"]
STAGES: tuple[str, ...] = ("initial", "propagated")

# Entry i is (i, 0, 255 - i): linear blue -> red ramp with no green.
COLORMAP = np.stack(
    [np.arange(256), np.zeros(256, dtype=int), 255 - np.arange(256)], axis=1
).astype(np.uint8)


@dataclass(frozen=True)
class RiskMap:
    scene_id: str
    accident_type: str
    values: np.ndarray  # (height, width) float64
    stage: str = "propagated"
    sigma: float | None = None

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def map_filename(scene_id: str, accident_type: str, stage: str, ext: str) -> str:
    return f"{scene_id}.{accident_type}.{stage}.{ext}"


def rasterize(
    scene: Scene,
    scores: Mapping[int, float] | PropagationResult,
    accident_type: str,
    stage: str = "propagated",
) -> RiskMap:
    """Paint each object's score over its region; overlaps keep the maximum.

    Background pixels are 0.

    Raises:
        InputError: if ``scores`` does not cover every object in ``scene``.
    """
    if isinstance(scores, PropagationResult):
        scores = scores.scores()
    missing = sorted(o.id for o in scene.objects if o.id not in scores)
    if missing:
        raise InputError(f"scene {scene.scene_id!r}: no score for object id(s) {missing}")
    values = np.zeros((scene.height, scene.width), dtype=np.float64)
    for obj in scene.objects:
        r = float(scores[obj.id])
        if not 0.0 <= r <= 1.0:
            raise InputError(f"object {obj.id}: score {r} outside [0, 1]")
        x0, y0, x1, y1 = obj.bbox_2d
        window = values[y0:y1, x0:x1]
        region = obj.region()
        window[region] = np.maximum(window[region], r)
    return RiskMap(scene.scene_id, accident_type, values, stage)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1D Gaussian of radius ``ceil(3 * sigma)`` normalized to sum 1."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _convolve_axis(values: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(values, pad, mode="edge")
    n = values.shape[axis]
    out = np.zeros_like(values)
    for t, w in enumerate(kernel):
        out += w * (padded[t : t + n, :] if axis == 0 else padded[:, t : t + n])
    return out


def gaussian_blur(values: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with replicated edges."""
    kernel = gaussian_kernel(sigma)
    return _convolve_axis(_convolve_axis(np.asarray(values, dtype=np.float64), kernel, 0), kernel, 1)


def normalize(values: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1].

    All-zero input stays zero; a positive constant (up to rounding noise)
    maps to all ones.
    """
    hi = float(values.max()) if values.size else 0.0
    if hi <= 0.0:
        return np.zeros_like(values)
    lo = float(values.min())
    if hi - lo <= 1e-12 * hi:
        return np.ones_like(values)
    return np.clip((values - lo) / (hi - lo), 0.0, 1.0)


def smooth(
    risk_map: RiskMap,
    sigma: float = DEFAULT_SIGMA,
    order: Literal["blur_first", "normalize_first"] = "blur_first",
) -> RiskMap:
    """Gaussian-smooth a map and bring it to [0, 1].

    With ``order="normalize_first"`` the raw raster is rescaled before
    blurring and the blurred result is not rescaled again.
    """
    if order == "blur_first":
        values = normalize(gaussian_blur(risk_map.values, sigma))
    elif order == "normalize_first":
        values = np.clip(gaussian_blur(normalize(risk_map.values), sigma), 0.0, 1.0)
    else:
        raise ValueError(f"unknown smoothing order {order!r}")
    return replace(risk_map, values=values, sigma=sigma)


def colorize(risk_map: RiskMap | np.ndarray) -> np.ndarray:
    """Map values to RGB via :data:`COLORMAP`; index is ``round(255 * v)``."""
    values = risk_map.values if isinstance(risk_map, RiskMap) else np.asarray(risk_map)
    idx = np.floor(np.clip(values, 0.0, 1.0) * 255 + 0.5).astype(np.intp)
    return COLORMAP[idx]


def blend(rgb: np.ndarray, color: np.ndarray) -> np.ndarray:
    """Equal-weight blend, rounding halves up."""
    if rgb.shape != color.shape:
        raise InputError(f"RGB image shape {rgb.shape} does not match heatmap {color.shape}")
    return ((rgb.astype(np.uint16) + color.astype(np.uint16) + 1) // 2).astype(np.uint8)


def write_maps(
    risk_map: RiskMap,
    gray_path: str | Path,
    color_path: str | Path,
    overlay_path: str | Path | None = None,
    rgb_image: np.ndarray | None = None,
) -> None:
    """Write the 16-bit graymap, the colour pixmap and optionally an overlay."""
    if overlay_path is not None and rgb_image is None:
        raise ValueError("an RGB image is required to write an overlay")
    color = colorize(risk_map)
    pnm.write_pgm16(gray_path, risk_map.values)
    pnm.write_ppm(color_path, color)
    if overlay_path is not None:
        pnm.write_ppm(overlay_path, blend(np.asarray(rgb_image, dtype=np.uint8), color))


def read_map(path: str | Path, scene_id: str = "", accident_type: str = "", stage: str = "propagated") -> RiskMap:
    return RiskMap(scene_id, accident_type, pnm.read_pgm(path), stage)
