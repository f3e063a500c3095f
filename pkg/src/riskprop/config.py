"""Run configuration: every tunable of the pipeline in one YAML file.

Unknown keys are rejected.  Relative paths inside the file are resolved
against the directory containing it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from riskprop.accident_db import DEFAULT_K, DEFAULT_SHARE_THRESHOLD, DEFAULT_TYPES, validate_types
from riskprop.errors import InputError
from riskprop.evaluation import DEFAULT_EPS_D, DEFAULT_TAU_DETECT, DEFAULT_TAU_IOU, SWEEP_THRESHOLDS
from riskprop.heatmap import DEFAULT_SIGMA
from riskprop.propagation import PropagationConfig
from riskprop.scene import DEFAULT_RHO


@dataclass(frozen=True)
class Config:
    types: tuple[str, ...] = DEFAULT_TYPES
    k: float = DEFAULT_K
    theta_share: float = DEFAULT_SHARE_THRESHOLD
    rho: float = DEFAULT_RHO
    max_iterations: int = 50
    tolerance: float = 1e-4
    epsilon: float = 1e-9
    share_filter: str = "source"
    weight_form: str = "algorithm"
    degenerate_span: float = 1e-6
    sigma: float = DEFAULT_SIGMA
    smooth_order: str = "blur_first"
    tau_detect: float = DEFAULT_TAU_DETECT
    tau_iou: float = DEFAULT_TAU_IOU
    eps_d: float = DEFAULT_EPS_D
    sweep_thresholds: tuple[float, ...] = SWEEP_THRESHOLDS
    aliases: str | None = None
    base_dir: Path | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        try:
            validate_types(self.types)
        except InputError as exc:
            raise InputError(f"config: {exc}") from None
        checks = [
            (self.k >= 0, "k must be >= 0"),
            (0.0 <= self.theta_share <= 1.0, "theta_share must lie in [0, 1]"),
            (self.rho > 0, "rho must be > 0"),
            (self.max_iterations >= 1, "max_iterations must be >= 1"),
            (self.tolerance >= 0, "tolerance must be >= 0"),
            (self.epsilon > 0, "epsilon must be > 0"),
            (self.share_filter in ("source", "full"), "share_filter must be 'source' or 'full'"),
            (self.weight_form in ("algorithm", "equation"), "weight_form must be 'algorithm' or 'equation'"),
            (self.degenerate_span >= 0, "degenerate_span must be >= 0"),
            (self.sigma > 0, "sigma must be > 0"),
            (self.smooth_order in ("blur_first", "normalize_first"), "smooth_order must be 'blur_first' or 'normalize_first'"),
            (0.0 < self.tau_detect < 1.0, "tau_detect must lie in (0, 1)"),
            (0.0 < self.tau_iou <= 1.0, "tau_iou must lie in (0, 1]"),
            (self.eps_d > 0, "eps_d must be > 0"),
            (len(self.sweep_thresholds) > 0 and all(0.0 < t < 1.0 for t in self.sweep_thresholds),
             "sweep_thresholds must be non-empty values in (0, 1)"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InputError(f"config: {msg}")

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls) if f.name != "base_dir"]

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None, base_dir: Path | None = None) -> "Config":
        data = dict(data or {})
        unknown = sorted(set(data) - set(cls.keys()))
        if unknown:
            raise InputError(f"config: unknown key(s) {unknown}")
        defaults = cls()
        kwargs: dict[str, Any] = {}
        for name, value in data.items():
            kwargs[name] = _coerce(name, value, getattr(defaults, name))
        return cls(base_dir=base_dir, **kwargs)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for name in self.keys():
            v = getattr(self, name)
            out[name] = list(v) if isinstance(v, tuple) else v
        return out

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "Config":
        merged = {**self.to_dict(), **overrides}
        return Config.from_dict(merged, self.base_dir)

    def propagation(self) -> PropagationConfig:
        return PropagationConfig(
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            epsilon=self.epsilon,
            theta_share=self.theta_share,
            share_filter=self.share_filter,  # type: ignore[arg-type]
            weight_form=self.weight_form,  # type: ignore[arg-type]
            degenerate_span=self.degenerate_span,
        )

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if not p.is_absolute() and self.base_dir is not None:
            p = self.base_dir / p
        return p


def _coerce(name: str, value: Any, default: Any) -> Any:
    if name == "aliases":
        if value is not None and not isinstance(value, str):
            raise InputError("config: aliases must be a path string or null")
        return value
    try:
        if isinstance(default, tuple):
            if not isinstance(value, (list, tuple)):
                raise TypeError
            conv = float if default and isinstance(default[0], float) else str
            return tuple(conv(v) for v in value)
        if isinstance(value, bool):
            raise TypeError
        if isinstance(default, int) and not isinstance(default, bool) and name == "max_iterations":
            if isinstance(value, float) and not value.is_integer():
                raise TypeError
            return int(value)
        if isinstance(default, (int, float)):
            # YAML 1.1 reads exponents without a dot (1e-4) as strings
            return float(value) if not isinstance(value, int) else value
        if isinstance(default, str):
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise InputError(f"config: invalid value for {name!r}: {value!r}") from None
    return value


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: invalid YAML ({exc})") from None
    if data is not None and not isinstance(data, dict):
        raise InputError(f"{path}: config must be a mapping")
    return Config.from_dict(data, base_dir=path.parent)


def parse_override(text: str) -> tuple[str, Any]:
    """Parse ``key=value`` with a YAML-typed value."""
    if "=" not in text:
        raise InputError(f"override {text!r} must look like key=value")
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        value = raw
    return key.strip(), value
