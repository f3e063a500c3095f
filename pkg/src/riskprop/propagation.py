"""Asymmetric iterative risk propagation over a scene graph.

Risk only flows from a higher-risk neighbour ``j`` to a lower-risk node
``i``.  Each sweep visits nodes in ascending id order and writes the new
value back immediately, so later nodes in the same sweep already see it
(Gauss-Seidel order).  After every sweep all scores are min-max rescaled
to span [0, 1]; the loop stops once the largest single update of a sweep
falls below ``tolerance``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Literal, Mapping

from riskprop.accident_db import DEFAULT_SHARE_THRESHOLD, RiskTable
from riskprop.scene import DEFAULT_RHO, Scene, SceneGraph, assign_initial_risk, build_graph


@dataclass(frozen=True)
class PropagationConfig:
    """Tunables for :func:`propagate`.

    ``share_filter`` selects how low-share nodes are treated: ``"source"``
    stops them from influencing neighbours, ``"full"`` also freezes them as
    receivers.  ``weight_form="equation"`` folds the risk gap into the edge
    weight (so the normaliser is the sum of gap-scaled weights) instead of
    the default where the gap only enters the numerator.  Renormalization
    is skipped when the score spread is at most ``degenerate_span``.
    """

    max_iterations: int = 50
    tolerance: float = 1e-4
    epsilon: float = 1e-9
    theta_share: float = DEFAULT_SHARE_THRESHOLD
    share_filter: Literal["source", "full"] = "source"
    weight_form: Literal["algorithm", "equation"] = "algorithm"
    degenerate_span: float = 1e-6

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not 0.0 <= self.theta_share <= 1.0:
            raise ValueError("theta_share must lie in [0, 1]")
        if self.share_filter not in ("source", "full"):
            raise ValueError(f"share_filter must be 'source' or 'full', got {self.share_filter!r}")
        if self.weight_form not in ("algorithm", "equation"):
            raise ValueError(f"weight_form must be 'algorithm' or 'equation', got {self.weight_form!r}")
        if self.degenerate_span < 0:
            raise ValueError("degenerate_span must be >= 0")


@dataclass(frozen=True)
class Step:
    """One node update: ``risk`` is the clipped value before renormalization."""

    iteration: int
    node_id: int
    delta: float
    risk: float


@dataclass
class PropagationResult:
    scene_id: str
    accident_type: str
    node_ids: tuple[int, ...]
    initial: tuple[float, ...]
    risk: tuple[float, ...]
    iterations_run: int
    converged: bool
    max_diff: list[float] = field(default_factory=list)
    history: list[tuple[float, ...]] = field(default_factory=list)
    steps: list[Step] = field(default_factory=list)

    def scores(self) -> dict[int, float]:
        return dict(zip(self.node_ids, self.risk))

    def initial_scores(self) -> dict[int, float]:
        return dict(zip(self.node_ids, self.initial))

    def write_trace(self, fh: IO[str]) -> None:
        """Write one JSON line per node update."""
        for s in self.steps:
            fh.write(
                json.dumps(
                    {"iteration": s.iteration, "node_id": s.node_id, "delta": s.delta, "risk": s.risk},
                    sort_keys=True,
                )
                + "\n"
            )


def minmax(values: list[float], degenerate_span: float = 0.0) -> list[float]:
    """Rescale to [0, 1]; returned unchanged when the spread is degenerate."""
    lo, hi = min(values), max(values)
    span = hi - lo
    if span <= degenerate_span:
        return list(values)
    return [(v - lo) / span for v in values]


def _prenormalize(values: list[float]) -> list[float]:
    if all(0.0 <= v <= 1.0 for v in values):
        return list(values)
    lo, hi = min(values), max(values)
    if hi == lo:
        return [min(max(v, 0.0), 1.0) for v in values]
    return [(v - lo) / (hi - lo) for v in values]


def _is_source(share: float | None, theta: float) -> bool:
    return share is None or share >= theta


def propagate(graph: SceneGraph, config: PropagationConfig | None = None) -> PropagationResult:
    """Run asymmetric propagation on ``graph`` and return the final scores.

    ``graph.risk`` is left untouched; the result carries the per-sweep
    ``max_diff`` trace, the post-renormalization ``history`` and every
    individual node update.
    """
    config = config or PropagationConfig()
    n = len(graph)
    if n == 0:
        return PropagationResult(graph.scene_id, graph.accident_type, (), (), (), 0, True)

    r = _prenormalize(graph.risk)
    initial = tuple(r)
    source = [_is_source(s, config.theta_share) for s in graph.share]
    receiver = source if config.share_filter == "full" else [True] * n
    eq_form = config.weight_form == "equation"

    max_diffs: list[float] = []
    history: list[tuple[float, ...]] = []
    steps: list[Step] = []
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        max_diff = 0.0
        for i in range(n):
            if not receiver[i]:
                continue
            influence = 0.0
            total_weight = 0.0
            for j in graph.neighbors(i):
                if not source[j] or r[j] <= r[i]:
                    continue
                e = graph.edge(i, j)
                w = e.phi_accrel * (1.0 - e.phi_distance)
                if eq_form:
                    w *= r[j] - r[i]
                influence += w * (r[j] - r[i])
                total_weight += abs(w)
            delta = influence / (total_weight + config.epsilon)
            r[i] = min(max(r[i] + delta, 0.0), 1.0)
            steps.append(Step(it, graph.node_ids[i], delta, r[i]))
            max_diff = max(max_diff, abs(delta))
        r = minmax(r, config.degenerate_span)
        max_diffs.append(max_diff)
        history.append(tuple(r))
        if max_diff < config.tolerance:
            converged = True
            break

    return PropagationResult(
        scene_id=graph.scene_id,
        accident_type=graph.accident_type,
        node_ids=graph.node_ids,
        initial=initial,
        risk=tuple(r),
        iterations_run=it,
        converged=converged,
        max_diff=max_diffs,
        history=history,
        steps=steps,
    )


def propagate_all_types(
    scene: Scene,
    table: RiskTable,
    config: PropagationConfig | None = None,
    rho: float = DEFAULT_RHO,
) -> dict[str, PropagationResult]:
    """Independent propagation for every accident type of ``table``."""
    results = {}
    for a in table.types:
        graph = build_graph(assign_initial_risk(scene, table, a), table, a, rho)
        results[a] = propagate(graph, config)
    return results


def results_to_dict(scene_id: str, stages: Mapping[str, Mapping[str, PropagationResult]]) -> dict:
    """Canonical score document keyed by stage, accident type and object id."""
    out: dict = {"scene_id": scene_id, "stages": {}}
    for stage in sorted(stages):
        out["stages"][stage] = {
            a: {
                "iterations_run": res.iterations_run,
                "converged": res.converged,
                "scores": {str(nid): v for nid, v in zip(res.node_ids, res.risk)},
            }
            for a, res in sorted(stages[stage].items())
        }
    return out
