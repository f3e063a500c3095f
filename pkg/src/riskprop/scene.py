"""Scene descriptions and the spatial-semantic scene graph.

A scene file is JSON::

    {
      "scene_id": "kitchen_01",
      "image": {"width": 640, "height": 480},
      "objects": [
        {"id": 0, "label": "towel", "centroid_3d": [0.4, 0.1, 1.9],
         "bbox_2d": [120, 200, 180, 260],
         "mask": {"counts": [12, 30, 8, ...]}}
      ]
    }

``bbox_2d`` is ``[x_min, y_min, x_max, y_max]`` in pixels with exclusive
maxima, so the box is ``x_max - x_min`` pixels wide.  ``mask`` is optional:
run lengths over the box in row-major order, starting with a background
run (which may be 0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from riskprop.accident_db import RiskTable, accrel, normalize_label, risk_score
from riskprop.errors import InputError

DEFAULT_RHO = 2.0


def decode_mask(counts: Sequence[int], width: int, height: int) -> np.ndarray:
    """Expand row-major run lengths into a ``(height, width)`` boolean array."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1 or np.any(counts < 0):
        raise InputError("mask counts must be a flat list of non-negative integers")
    if int(counts.sum()) != width * height:
        raise InputError(
            f"corrupt mask: run lengths sum to {int(counts.sum())}, "
            f"expected {width}x{height}={width * height}"
        )
    values = np.arange(len(counts)) % 2 == 1
    return np.repeat(values, counts).reshape(height, width)


def encode_mask(mask: np.ndarray) -> list[int]:
    """Inverse of :func:`decode_mask`."""
    flat = np.asarray(mask, dtype=bool).ravel()
    counts: list[int] = []
    current, run = False, 0
    for v in flat:
        if v == current:
            run += 1
        else:
            counts.append(run)
            current, run = bool(v), 1
    counts.append(run)
    return counts


@dataclass(frozen=True)
class SceneObject:
    id: int
    label: str
    centroid_3d: tuple[float, float, float]
    bbox_2d: tuple[int, int, int, int]
    mask: tuple[int, ...] | None = None
    initial_risk: Mapping[str, float] = field(default_factory=dict)

    @property
    def box_size(self) -> tuple[int, int]:
        x0, y0, x1, y1 = self.bbox_2d
        return x1 - x0, y1 - y0

    def region(self) -> np.ndarray:
        """Boolean mask over the bbox; the filled box when no mask is given."""
        w, h = self.box_size
        if self.mask is None:
            return np.ones((h, w), dtype=bool)
        return decode_mask(self.mask, w, h)


@dataclass(frozen=True)
class Scene:
    scene_id: str
    image_size: tuple[int, int]
    objects: tuple[SceneObject, ...] = ()

    @property
    def width(self) -> int:
        return self.image_size[0]

    @property
    def height(self) -> int:
        return self.image_size[1]

    def get(self, object_id: int) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def to_dict(self) -> dict[str, Any]:
        objs = []
        for o in self.objects:
            d: dict[str, Any] = {
                "id": o.id,
                "label": o.label,
                "centroid_3d": list(o.centroid_3d),
                "bbox_2d": list(o.bbox_2d),
            }
            if o.mask is not None:
                d["mask"] = {"counts": list(o.mask)}
            objs.append(d)
        return {
            "scene_id": self.scene_id,
            "image": {"width": self.width, "height": self.height},
            "objects": objs,
        }


def _int(value: Any, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
        raise InputError(f"{what} must be an integer, got {value!r}")
    return int(value)


def _parse_object(raw: Any, width: int, height: int, aliases: Mapping[str, str] | None) -> SceneObject:
    if not isinstance(raw, dict):
        raise InputError("each object must be a JSON object")
    for key in ("id", "label", "centroid_3d", "bbox_2d"):
        if key not in raw:
            raise InputError(f"object missing field {key!r}: {raw!r}")
    oid = _int(raw["id"], "object id")
    where = f"object {oid}"
    if not isinstance(raw["label"], str) or not normalize_label(raw["label"]):
        raise InputError(f"{where}: label must be a non-empty string")
    label = normalize_label(raw["label"], aliases)

    c = raw["centroid_3d"]
    if not isinstance(c, list) or len(c) != 3:
        raise InputError(f"{where}: centroid_3d must be [x, y, z]")
    try:
        centroid = tuple(float(v) for v in c)
    except (TypeError, ValueError):
        raise InputError(f"{where}: centroid_3d must be numeric") from None
    if not all(math.isfinite(v) for v in centroid):
        raise InputError(f"{where}: centroid_3d must be finite")

    b = raw["bbox_2d"]
    if not isinstance(b, list) or len(b) != 4:
        raise InputError(f"{where}: bbox_2d must be [x_min, y_min, x_max, y_max]")
    x0, y0, x1, y1 = (_int(v, f"{where} bbox coordinate") for v in b)
    if not (0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height):
        raise InputError(f"{where}: bbox {[x0, y0, x1, y1]} out of bounds for image {width}x{height}")

    mask = None
    if raw.get("mask") is not None:
        m = raw["mask"]
        if not isinstance(m, dict) or not isinstance(m.get("counts"), list):
            raise InputError(f"{where}: mask must be {{'counts': [...]}}")
        mask = tuple(_int(v, f"{where} mask run length") for v in m["counts"])
        try:
            decode_mask(mask, x1 - x0, y1 - y0)
        except InputError as exc:
            raise InputError(f"{where}: {exc}") from None
    return SceneObject(oid, label, centroid, (x0, y0, x1, y1), mask)  # type: ignore[arg-type]


def scene_from_dict(data: Any, aliases: Mapping[str, str] | None = None) -> Scene:
    if not isinstance(data, dict):
        raise InputError("scene must be a JSON object")
    try:
        scene_id = data["scene_id"]
        width = _int(data["image"]["width"], "image width")
        height = _int(data["image"]["height"], "image height")
        raw_objects = data.get("objects", [])
    except (KeyError, TypeError):
        raise InputError("scene requires 'scene_id' and 'image': {'width', 'height'}") from None
    if not isinstance(scene_id, str) or not scene_id:
        raise InputError("scene_id must be a non-empty string")
    if width <= 0 or height <= 0:
        raise InputError(f"image dimensions must be positive, got {width}x{height}")
    if not isinstance(raw_objects, list):
        raise InputError("objects must be an array")
    objects = [_parse_object(o, width, height, aliases) for o in raw_objects]
    ids = [o.id for o in objects]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise InputError(f"scene {scene_id!r}: duplicate object ids {dupes}")
    return Scene(scene_id, (width, height), tuple(objects))


def load_scene(path: str | Path, aliases: Mapping[str, str] | None = None) -> Scene:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg})") from None
    try:
        return scene_from_dict(data, aliases)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene.to_dict(), indent=2) + "\n", encoding="utf-8")


def assign_initial_risk(scene: Scene, table: RiskTable, accident_type: str) -> Scene:
    """Return a copy of ``scene`` with each object's prior for ``accident_type`` set."""
    objects = tuple(
        replace(o, initial_risk={**o.initial_risk, accident_type: risk_score(table, o.label, accident_type)})
        for o in scene.objects
    )
    return replace(scene, objects=objects)


@dataclass(frozen=True)
class Edge:
    distance: float
    phi_distance: float
    phi_accrel: float


@dataclass
class SceneGraph:
    """Objects as nodes (ordered by ascending id) with proximity edges.

    ``risk`` is the only mutable part; it is indexed like ``node_ids``.
    ``share`` holds each node's fraction of all accident reports (None when
    the table is empty) for the share filter.  Edge keys are index pairs
    ``(i, j)`` with ``i < j``.
    """

    scene_id: str
    accident_type: str
    rho: float
    node_ids: tuple[int, ...]
    labels: tuple[str, ...]
    risk: list[float]
    share: tuple[float | None, ...]
    edges: dict[tuple[int, int], Edge]

    def __post_init__(self) -> None:
        adj: list[list[int]] = [[] for _ in self.node_ids]
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-edges are not allowed")
            adj[i].append(j)
            adj[j].append(i)
        self._adj = [sorted(a) for a in adj]

    def __len__(self) -> int:
        return len(self.node_ids)

    def neighbors(self, i: int) -> list[int]:
        return self._adj[i]

    def edge(self, i: int, j: int) -> Edge:
        return self.edges[(i, j) if i < j else (j, i)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "scene_id": self.scene_id,
            "accident_type": self.accident_type,
            "rho": self.rho,
            "nodes": [
                {"id": nid, "label": lab, "risk": r, "share": s}
                for nid, lab, r, s in zip(self.node_ids, self.labels, self.risk, self.share)
            ],
            "edges": [
                {
                    "source": self.node_ids[i],
                    "target": self.node_ids[j],
                    "distance": e.distance,
                    "phi_distance": e.phi_distance,
                    "phi_accrel": e.phi_accrel,
                }
                for (i, j), e in sorted(self.edges.items())
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def build_graph(scene: Scene, table: RiskTable, accident_type: str, rho: float = DEFAULT_RHO) -> SceneGraph:
    """Link every pair of objects whose 3D centroids are at most ``rho`` apart.

    Edge weights: ``phi_distance = d / rho`` and ``phi_accrel`` from the pair
    statistics.  Node risk starts at the object's prior for ``accident_type``
    (computed from ``table`` if :func:`assign_initial_risk` was not run).
    """
    if not rho > 0:
        raise ValueError(f"influence radius must be positive, got {rho}")
    objs = sorted(scene.objects, key=lambda o: o.id)
    risk = [
        float(o.initial_risk[accident_type])
        if accident_type in o.initial_risk
        else risk_score(table, o.label, accident_type)
        for o in objs
    ]
    edges: dict[tuple[int, int], Edge] = {}
    for i, oi in enumerate(objs):
        for j in range(i + 1, len(objs)):
            oj = objs[j]
            d = math.dist(oi.centroid_3d, oj.centroid_3d)
            if d <= rho:
                edges[(i, j)] = Edge(d, d / rho, accrel(table, oi.label, oj.label, accident_type))
    return SceneGraph(
        scene_id=scene.scene_id,
        accident_type=accident_type,
        rho=rho,
        node_ids=tuple(o.id for o in objs),
        labels=tuple(o.label for o in objs),
        risk=risk,
        share=tuple(table.share(o.label) for o in objs),
        edges=edges,
    )
