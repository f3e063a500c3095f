"""Accident report ingestion and smoothed risk statistics.

Reports are tallied into per-object and per-pair counts by accident type.
Scores use additive (Laplace) smoothing::

    score = (count + k) / (total + k * N)

where ``N`` is the number of accident types.  Objects or pairs that never
appear in the reports therefore score ``1 / N``.
"""

from __future__ import annotations

import itertools
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from riskprop.errors import InputError, UndefinedScoreError

logger = logging.getLogger(__name__)

DEFAULT_TYPES: tuple[str, ...] = ("cut", "fire", "trip_fall")
DEFAULT_K = 1
DEFAULT_SHARE_THRESHOLD = 0.005

_WS = re.compile(r"\s+")


def normalize_label(label: str, aliases: Mapping[str, str] | None = None) -> str:
    """Trim, lowercase and collapse internal whitespace, then apply aliases."""
    norm = _WS.sub(" ", label.strip().lower())
    if aliases:
        norm = aliases.get(norm, norm)
    return norm


def validate_types(types: Iterable[str]) -> tuple[str, ...]:
    out = tuple(types)
    if not out:
        raise InputError("accident type set must be non-empty")
    if len(set(out)) != len(out):
        raise InputError(f"accident types must be unique, got {list(out)}")
    for t in out:
        if not isinstance(t, str) or not t or t != t.strip().lower():
            raise InputError(f"accident type {t!r} must be a non-empty lowercase string")
    return out


@dataclass(frozen=True)
class AccidentRecord:
    report_id: str
    objects: tuple[str, ...]
    accident_type: str

    @classmethod
    def create(
        cls,
        report_id: str,
        objects: Iterable[str],
        accident_type: str,
        aliases: Mapping[str, str] | None = None,
    ) -> "AccidentRecord":
        """Build a record with normalized, order-preserving deduplicated labels."""
        seen: dict[str, None] = {}
        for raw in objects:
            label = normalize_label(raw, aliases)
            if not label:
                raise InputError(f"report {report_id!r}: empty object label")
            seen.setdefault(label, None)
        if not seen:
            raise InputError(f"report {report_id!r}: no objects listed")
        return cls(str(report_id), tuple(seen), accident_type)


def load_aliases(path: str | Path) -> dict[str, str]:
    """Read a two-column ``alias<TAB>canonical`` file.

    Blank lines and lines starting with ``#`` are ignored.
    """
    aliases: dict[str, str] = {}
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise InputError(f"{path}:{lineno}: expected 'alias<TAB>canonical'")
            alias, canonical = normalize_label(parts[0]), normalize_label(parts[1])
            if not alias or not canonical:
                raise InputError(f"{path}:{lineno}: empty alias or canonical label")
            aliases[alias] = canonical
    return aliases


def load_records(
    path: str | Path,
    types: Sequence[str] = DEFAULT_TYPES,
    aliases: Mapping[str, str] | None = None,
) -> list[AccidentRecord]:
    """Parse a line-delimited JSON accident database.

    Each non-blank line must be an object with ``report_id`` (string),
    ``objects`` (array of strings) and ``accident_type`` (string).

    Raises:
        InputError: on a malformed line (the message names the line number)
            or an accident type outside ``types``.
    """
    types = validate_types(types)
    path = Path(path)
    records: list[AccidentRecord] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}: line {lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{where}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise InputError(f"{where}: expected a JSON object")
            missing = {"report_id", "objects", "accident_type"} - obj.keys()
            if missing:
                raise InputError(f"{where}: missing field(s) {sorted(missing)}")
            rid, objects, atype = obj["report_id"], obj["objects"], obj["accident_type"]
            if not isinstance(rid, str):
                raise InputError(f"{where}: report_id must be a string")
            if not isinstance(objects, list) or not all(isinstance(o, str) for o in objects):
                raise InputError(f"{where}: objects must be an array of strings")
            if not isinstance(atype, str):
                raise InputError(f"{where}: accident_type must be a string")
            atype = normalize_label(atype)
            if atype not in types:
                raise InputError(f"{where}: unknown accident_type {obj['accident_type']!r}")
            try:
                records.append(AccidentRecord.create(rid, objects, atype, aliases))
            except InputError as exc:
                raise InputError(f"{where}: {exc}") from None
    return records


def pair_key(o1: str, o2: str) -> tuple[str, str]:
    return (o1, o2) if o1 <= o2 else (o2, o1)


class RiskTable:
    """Immutable tallies of accident reports with smoothed score queries.

    ``counts[o][a]`` is the number of reports of type ``a`` involving ``o``;
    ``pair_counts[(o1, o2)][a]`` the same for reports involving both.  Pair
    keys are stored sorted so lookups are order-insensitive.
    """

    def __init__(
        self,
        types: Sequence[str],
        k: float,
        counts: Mapping[str, Mapping[str, int]],
        pair_counts: Mapping[tuple[str, str], Mapping[str, int]],
        grand_total: int,
        aliases: Mapping[str, str] | None = None,
    ):
        self.types = validate_types(types)
        if k < 0:
            raise InputError(f"smoothing pseudo-count k must be >= 0, got {k}")
        self.k = k
        self._counts = {o: {a: int(c.get(a, 0)) for a in self.types} for o, c in counts.items()}
        self._pair_counts = {
            pair_key(*p): {a: int(c.get(a, 0)) for a in self.types} for p, c in pair_counts.items()
        }
        self._totals = {o: sum(c.values()) for o, c in self._counts.items()}
        self._pair_totals = {p: sum(c.values()) for p, c in self._pair_counts.items()}
        self.grand_total = int(grand_total)
        self.aliases = dict(aliases or {})
        self._share_warned = False

    @property
    def n_types(self) -> int:
        return len(self.types)

    @property
    def objects(self) -> list[str]:
        return sorted(self._counts)

    def canonical(self, label: str) -> str:
        return normalize_label(label, self.aliases)

    def count(self, o: str, a: str) -> int:
        self._check_type(a)
        return self._counts.get(self.canonical(o), {}).get(a, 0)

    def total(self, o: str) -> int:
        return self._totals.get(self.canonical(o), 0)

    def pair_count(self, o1: str, o2: str, a: str) -> int:
        self._check_type(a)
        key = pair_key(self.canonical(o1), self.canonical(o2))
        return self._pair_counts.get(key, {}).get(a, 0)

    def pair_total(self, o1: str, o2: str) -> int:
        return self._pair_totals.get(pair_key(self.canonical(o1), self.canonical(o2)), 0)

    def share(self, o: str) -> float | None:
        """Fraction of all reports that involve ``o``; None for an empty table."""
        if self.grand_total == 0:
            return None
        return self.total(o) / self.grand_total

    def _check_type(self, a: str) -> None:
        if a not in self.types:
            raise KeyError(f"unknown accident type {a!r}; table has {list(self.types)}")

    def _smoothed(self, count: int, total: int, what: str) -> float:
        denom = total + self.k * self.n_types
        if denom == 0:
            raise UndefinedScoreError(f"score for {what} undefined: k = 0 and no reports")
        return (count + self.k) / denom

    def to_dict(self) -> dict:
        """Canonical JSON-compatible form; key order is deterministic."""
        return {
            "types": list(self.types),
            "k": self.k,
            "grand_total": self.grand_total,
            "aliases": dict(sorted(self.aliases.items())),
            "objects": {
                o: {"total": self._totals[o], "counts": dict(self._counts[o])}
                for o in sorted(self._counts)
            },
            "pairs": [
                {
                    "objects": list(p),
                    "total": self._pair_totals[p],
                    "counts": dict(self._pair_counts[p]),
                }
                for p in sorted(self._pair_counts)
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RiskTable":
        try:
            types = data["types"]
            counts = {o: v["counts"] for o, v in data["objects"].items()}
            pairs = {tuple(p["objects"]): p["counts"] for p in data["pairs"]}
            table = cls(types, data["k"], counts, pairs, data["grand_total"], data.get("aliases"))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed risk table: {exc!r}") from None
        for o, v in data["objects"].items():
            if v.get("total", table._totals[o]) != table._totals[o]:
                raise InputError(f"risk table total for {o!r} disagrees with its counts")
        return table

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RiskTable":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid risk table JSON ({exc.msg})") from None
        return cls.from_dict(data)


def build_table(
    records: Iterable[AccidentRecord],
    k: float = DEFAULT_K,
    types: Sequence[str] = DEFAULT_TYPES,
    aliases: Mapping[str, str] | None = None,
) -> RiskTable:
    """Tally records into a :class:`RiskTable`.

    Every unordered pair of distinct objects within one record is counted
    once for that record.
    """
    types = validate_types(types)
    if k < 0:
        raise InputError(f"smoothing pseudo-count k must be >= 0, got {k}")
    counts: dict[str, Counter] = {}
    pair_counts: dict[tuple[str, str], Counter] = {}
    n = 0
    for rec in records:
        if rec.accident_type not in types:
            raise InputError(
                f"report {rec.report_id!r}: accident type {rec.accident_type!r} not in {list(types)}"
            )
        objs = sorted(set(rec.objects))
        for o in objs:
            counts.setdefault(o, Counter())[rec.accident_type] += 1
        for o1, o2 in itertools.combinations(objs, 2):
            pair_counts.setdefault((o1, o2), Counter())[rec.accident_type] += 1
        n += 1
    return RiskTable(types, k, counts, pair_counts, n, aliases)


def raw_ratio(table: RiskTable, o: str, a: str) -> float:
    """Unsmoothed ``count(o, a) / total(o)``; unstable for rare objects."""
    total = table.total(o)
    if total == 0:
        raise UndefinedScoreError(f"raw ratio for {o!r} undefined: no reports")
    return table.count(o, a) / total


def risk_score(table: RiskTable, o: str, a: str) -> float:
    """Smoothed probability that object ``o`` is involved in accident type ``a``.

    >>> t = build_table([AccidentRecord.create("r1", ["knife"], "cut")])
    >>> round(risk_score(t, "knife", "cut"), 4)
    0.5
    """
    return table._smoothed(table.count(o, a), table.total(o), f"({o!r}, {a!r})")


def accrel(table: RiskTable, o1: str, o2: str, a: str) -> float:
    """Smoothed accident correlation of a co-occurring pair for type ``a``.

    Symmetric in ``o1`` and ``o2``.
    """
    return table._smoothed(
        table.pair_count(o1, o2, a), table.pair_total(o1, o2), f"({o1!r}, {o2!r}, {a!r})"
    )


def passes_share_filter(table: RiskTable, o: str, theta_share: float) -> bool:
    """True iff ``o`` accounts for at least ``theta_share`` of all reports.

    An empty table disables the filter (always True); this is logged once
    per table.
    """
    if not 0.0 <= theta_share <= 1.0:
        raise ValueError(f"theta_share must lie in [0, 1], got {theta_share}")
    share = table.share(o)
    if share is None:
        if not table._share_warned:
            logger.warning("risk table has no reports; share filter disabled")
            table._share_warned = True
        return True
    return share >= theta_share
