"""Command-line entry point: ``riskprop build-db | run | evaluate``.

Exit codes: 0 success, 1 runtime failure, 2 input or parse error.
The log level comes from ``RISKPROP_LOG_LEVEL`` (default WARNING).
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from riskprop import pnm
from riskprop.accident_db import RiskTable, build_table, load_aliases, load_records
from riskprop.config import Config, load_config, parse_override
from riskprop.errors import InputError
from riskprop.evaluation import GroundTruth, evaluate_corpus, load_ground_truth
from riskprop.heatmap import STAGES, map_filename, rasterize, read_map, smooth, write_maps
from riskprop.propagation import PropagationResult, propagate, results_to_dict
from riskprop.scene import Scene, assign_initial_risk, build_graph, load_scene

logger = logging.getLogger("riskprop")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2


def _load_config(args: argparse.Namespace) -> Config:
    config = load_config(args.config)
    overrides = dict(parse_override(s) for s in args.set or [])
    return config.with_overrides(overrides) if overrides else config


def cmd_build_db(args: argparse.Namespace) -> int:
    config = _load_config(args)
    alias_path = args.aliases or (str(config.resolve(config.aliases)) if config.aliases else None)
    aliases = load_aliases(alias_path) if alias_path else None
    records = load_records(args.db, config.types, aliases)
    if not records and not args.allow_empty:
        raise InputError(f"{args.db}: no accident records (use --allow-empty to accept)")
    table = build_table(records, config.k, config.types, aliases)
    pnm.atomic_write_text(args.out, table.dumps())
    logger.info("wrote %s: %d reports, %d objects", args.out, table.grand_total, len(table.objects))
    return EXIT_OK


def _scene_paths(inputs: Sequence[str]) -> list[Path]:
    paths: list[Path] = []
    for raw in inputs:
        p = Path(raw)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.json")))
        else:
            paths.append(p)
    return paths


def run_scene(
    scene: Scene,
    table: RiskTable,
    config: Config,
    out_dir: Path,
    stages: Sequence[str],
    rgb=None,
    trace: bool = False,
) -> list[Path]:
    """Score, propagate and render one scene; returns the written paths."""
    written: list[Path] = []
    priors: dict[str, dict[str, float]] = {}
    propagated: dict[str, PropagationResult] = {}
    for a in table.types:
        graph = build_graph(assign_initial_risk(scene, table, a), table, a, config.rho)
        priors[a] = {str(nid): r for nid, r in zip(graph.node_ids, graph.risk)}
        result = propagate(graph, config.propagation()) if "propagated" in stages else None
        for stage in stages:
            if stage == "initial":
                scores = dict(zip(graph.node_ids, graph.risk))
            else:
                assert result is not None
                scores = result.scores()
                propagated[a] = result
            risk_map = smooth(rasterize(scene, scores, a, stage), config.sigma, config.smooth_order)  # type: ignore[arg-type]
            gray = out_dir / map_filename(scene.scene_id, a, stage, "pgm")
            color = out_dir / map_filename(scene.scene_id, a, stage, "ppm")
            overlay = out_dir / map_filename(scene.scene_id, a, stage, "overlay.ppm") if rgb is not None else None
            write_maps(risk_map, gray, color, overlay, rgb)
            written += [gray, color] + ([overlay] if overlay else [])
        if trace and result is not None:
            buf = io.StringIO()
            result.write_trace(buf)
            path = out_dir / f"{scene.scene_id}.{a}.trace.jsonl"
            pnm.atomic_write_text(path, buf.getvalue())
            written.append(path)

    doc = results_to_dict(scene.scene_id, {"propagated": propagated} if propagated else {})
    doc["initial"] = priors
    scores_path = out_dir / f"{scene.scene_id}.scores.json"
    pnm.atomic_write_text(scores_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    written.append(scores_path)
    return written


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    table = RiskTable.load(args.table)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stages = list(STAGES) if args.stage == "both" else [args.stage]
    paths = _scene_paths(args.scenes)
    if not paths:
        raise InputError("no scene files given")

    def work(path: Path) -> int:
        try:
            scene = load_scene(path, table.aliases)
            rgb = None
            if args.rgb_dir:
                rgb_path = Path(args.rgb_dir) / f"{scene.scene_id}.ppm"
                if rgb_path.exists():
                    rgb = pnm.read_ppm(rgb_path)
            run_scene(scene, table, config, out_dir, stages, rgb, args.trace)
            return EXIT_OK
        except InputError as exc:
            logger.error("%s: %s", path, exc)
            return EXIT_INPUT
        except Exception as exc:  # noqa: BLE001 - one bad scene must not stop the batch
            logger.error("%s: %s", path, exc, exc_info=logger.isEnabledFor(logging.DEBUG))
            return EXIT_RUNTIME

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        codes = list(pool.map(work, paths))
    failed = [c for c in codes if c != EXIT_OK]
    if failed:
        logger.error("%d of %d scene(s) failed", len(failed), len(paths))
        return EXIT_RUNTIME if EXIT_RUNTIME in failed else EXIT_INPUT
    return EXIT_OK


def _collect_predictions(pred_dir: Path, types: Sequence[str]) -> dict[str, dict[str, dict]]:
    preds: dict[str, dict[str, dict]] = {}
    for path in sorted(pred_dir.glob("*.pgm")):
        parts = path.name[: -len(".pgm")].rsplit(".", 2)
        if len(parts) != 3 or parts[1] not in types or parts[2] not in STAGES:
            continue
        sid, a, stage = parts
        preds.setdefault(sid, {}).setdefault(stage, {})[a] = read_map(path, sid, a, stage)
    return preds


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    pred_dir, gt_dir = Path(args.pred_dir), Path(args.gt_dir)
    if not pred_dir.is_dir() or not gt_dir.is_dir():
        raise InputError("prediction and ground-truth paths must be directories")
    preds = _collect_predictions(pred_dir, config.types)
    gts: dict[str, GroundTruth] = {}
    for path in sorted(gt_dir.glob("*.json")):
        gt = load_ground_truth(path, config.types)
        gts[gt.scene_id] = gt

    no_gt = sorted(set(preds) - set(gts))
    no_pred = sorted(set(gts) - set(preds))
    if no_gt:
        logger.warning("no ground truth for scene(s): %s", ", ".join(no_gt))
    if no_pred:
        logger.warning("no predictions for scene(s): %s", ", ".join(no_pred))

    thresholds = config.sweep_thresholds if args.sweep_threshold else (config.tau_detect,)
    report = evaluate_corpus(
        set(preds) | set(gts), preds, gts, thresholds, config.tau_iou, config.eps_d, config.types
    )
    report_path = Path(args.report)
    csv_path = Path(args.csv) if args.csv else report_path.with_suffix(".csv")
    report.write(report_path, csv_path)
    for s in report.summaries:
        acc = s.binary.accuracy
        print(
            f"{s.stage:<10} tau={s.tau:<4} accuracy={'undefined' if acc is None else f'{acc:.4f}'} "
            f"TP={s.binary.tp} FP={s.binary.fp} TN={s.binary.tn} FN={s.binary.fn}"
        )
    if report.skipped:
        print(f"skipped (no ground truth): {len(report.skipped)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")

    parser = argparse.ArgumentParser(prog="riskprop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-db", parents=[common], help="tally an accident database into a risk table")
    p.add_argument("db", help="line-delimited JSON accident reports")
    p.add_argument("out", help="output risk table (JSON)")
    p.add_argument("--aliases", help="alias<TAB>canonical label file")
    p.add_argument("--allow-empty", action="store_true", help="accept a database with no records")
    p.set_defaults(func=cmd_build_db)

    p = sub.add_parser("run", parents=[common], help="score, propagate and render scenes")
    p.add_argument("scenes", nargs="+", help="scene files or directories of *.json")
    p.add_argument("--table", required=True, help="risk table written by build-db")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--stage", choices=["initial", "propagated", "both"], default="both")
    p.add_argument("--jobs", type=int, default=1, help="scenes processed in parallel")
    p.add_argument("--rgb-dir", help="directory of {scene_id}.ppm images for overlays")
    p.add_argument("--trace", action="store_true", help="write per-update propagation traces")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", parents=[common], help="score maps against annotations")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--report", required=True, help="output JSON report")
    p.add_argument("--csv", help="flat metrics table (default: report path with .csv)")
    p.add_argument("--sweep-threshold", action="store_true", help="evaluate every sweep_thresholds value")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("RISKPROP_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        logger.error("%s: %s", exc.filename, exc.strerror)
        return EXIT_INPUT
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
