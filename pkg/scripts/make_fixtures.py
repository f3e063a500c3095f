"""Regenerate the bundled fixture corpus under src/riskprop/fixtures/.

Run from the repository root:  python scripts/make_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from riskprop import pnm
from riskprop.scene import encode_mask

OUT = Path(__file__).resolve().parents[1] / "src" / "riskprop" / "fixtures"

# (objects, accident_type, number of reports)
REPORTS = [
    (["knife"], "cut", 90),
    (["knife"], "fire", 4),
    (["knife"], "trip_fall", 6),
    (["knife", "cutting board"], "cut", 15),
    (["cutting board"], "cut", 5),
    (["cutting board"], "trip_fall", 2),
    (["stove"], "fire", 70),
    (["stove"], "cut", 5),
    (["stove"], "trip_fall", 5),
    (["towel", "stove"], "fire", 6),
    (["towel", "stove"], "trip_fall", 3),
    (["towel", "stove"], "cut", 1),
    (["towel"], "trip_fall", 30),
    (["towel"], "fire", 4),
    (["towel"], "cut", 2),
    (["stuffed toy", "stove"], "fire", 4),
    (["stuffed toy"], "trip_fall", 6),
    (["chair"], "trip_fall", 60),
    (["chair"], "cut", 2),
    (["chair"], "fire", 1),
    (["radiator"], "fire", 60),
    (["radiator"], "trip_fall", 10),
    (["radiator"], "cut", 2),
    (["box", "radiator"], "fire", 18),
    (["box", "radiator"], "trip_fall", 2),
    (["box"], "trip_fall", 40),
    (["box"], "cut", 8),
    (["box"], "fire", 2),
    (["cabinet"], "fire", 25),
    (["cabinet"], "trip_fall", 30),
    (["cabinet"], "cut", 5),
    (["rug"], "trip_fall", 80),
    (["rug"], "fire", 3),
    (["rug"], "cut", 1),
    (["blanket"], "cut", 7),
    (["blanket"], "trip_fall", 10),
    (["blanket"], "fire", 5),
    (["needle", "blanket"], "cut", 2),
]

ALIASES = {"oven": "stove", "range": "stove", "kitchen knife": "knife", "carpet": "rug"}

W, H = 80, 60


def towel_mask(w: int, h: int) -> list[int]:
    m = np.zeros((h, w), dtype=bool)
    m[1:, 1 : w - 1] = True  # hanging towel: ragged top edge
    return encode_mask(m)


SCENES = {
    "kitchen_towel_oven": [
        dict(id=0, label="Oven", centroid_3d=[0.0, 0.0, 2.0], bbox_2d=[10, 20, 34, 50]),
        dict(id=1, label="towel", centroid_3d=[0.4, 0.1, 2.0], bbox_2d=[36, 28, 44, 44],
             mask={"counts": towel_mask(8, 16)}),
        dict(id=2, label="kitchen knife", centroid_3d=[2.6, -0.1, 2.2], bbox_2d=[60, 24, 70, 28]),
        dict(id=3, label="cutting board", centroid_3d=[2.7, -0.15, 2.2], bbox_2d=[58, 26, 76, 34]),
        dict(id=4, label="chair", centroid_3d=[1.2, 0.5, 4.0], bbox_2d=[44, 36, 58, 58]),
    ],
    "living_radiator_box": [
        dict(id=0, label="radiator", centroid_3d=[-1.0, 0.3, 3.0], bbox_2d=[4, 18, 22, 40]),
        dict(id=1, label="box", centroid_3d=[-0.7, 0.4, 3.0], bbox_2d=[20, 30, 32, 42]),
        dict(id=2, label="cabinet", centroid_3d=[1.8, 0.2, 1.6], bbox_2d=[46, 14, 74, 52]),
        dict(id=3, label="carpet", centroid_3d=[0.2, 1.2, 5.5], bbox_2d=[24, 50, 56, 60]),
    ],
    "bare_room": [],
    "corridor_missed_cable": [],
}

GROUND_TRUTH = {
    "kitchen_towel_oven": dict(risk_present=True, risk_type="fire", blob=(30, 36, 8.0)),
    "living_radiator_box": dict(risk_present=True, risk_type="fire", blob=(20, 32, 7.0)),
    "bare_room": dict(risk_present=False, risk_type=None, blob=None),
    "corridor_missed_cable": dict(risk_present=True, risk_type="trip_fall", blob=(40, 55, 6.0)),
}


def blob(cx: float, cy: float, s: float) -> np.ndarray:
    ys, xs = np.indices((H, W))
    return np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * s * s))


def main() -> None:
    (OUT / "scenes").mkdir(parents=True, exist_ok=True)
    (OUT / "ground_truth").mkdir(parents=True, exist_ok=True)

    lines = []
    n = 0
    for objects, atype, count in REPORTS:
        for _ in range(count):
            lines.append(json.dumps({"report_id": f"r{n:04d}", "objects": objects, "accident_type": atype}))
            n += 1
    (OUT / "accidents.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (OUT / "aliases.tsv").write_text(
        "".join(f"{a}\t{c}\n" for a, c in sorted(ALIASES.items())), encoding="utf-8"
    )

    for sid, objects in SCENES.items():
        doc = {"scene_id": sid, "image": {"width": W, "height": H}, "objects": objects}
        (OUT / "scenes" / f"{sid}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    for sid, gt in GROUND_TRUTH.items():
        doc = {"scene_id": sid, "risk_present": gt["risk_present"], "risk_type": gt["risk_type"]}
        if gt["blob"] is not None:
            pnm.write_pgm16(OUT / "ground_truth" / f"{sid}.pgm", blob(*gt["blob"]))
            doc["heatmap_path"] = f"{sid}.pgm"
        (OUT / "ground_truth" / f"{sid}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    (OUT / "config.yaml").write_text(
        "# Fixture run configuration; unspecified keys take their defaults.\n"
        "types: [cut, fire, trip_fall]\n"
        "k: 1\n"
        "theta_share: 0.005\n"
        "rho: 2.0\n"
        "sigma: 3.0\n"
        "tau_detect: 0.5\n"
        "aliases: aliases.tsv\n",
        encoding="utf-8",
    )
    print(f"wrote {n} reports and {len(SCENES)} scenes to {OUT}")


if __name__ == "__main__":
    main()
