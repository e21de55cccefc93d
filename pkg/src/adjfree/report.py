"""Post-run analysis of attack artifacts.

Everything here is a pure function of its inputs: loading a front file
and re-running an analysis never changes a verdict. The functions
operate on :class:`RunSummary` records, which the CLI's ``front.json``
files load into directly.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .objectives import OBJECTIVE_NAMES

__all__ = [
    "EntryRecord",
    "RunSummary",
    "AblationRow",
    "AblationComparison",
    "AdjustFreeTally",
    "load_front",
    "project_front",
    "knee_index",
    "compare_ablation",
    "tally_adjust_free",
    "write_comparison_csv",
    "write_tally_json",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntryRecord:
    """One archive entry as it appears in a front file.

    ``dense_max`` is the maximum correct-class confidence over a dense
    lag grid, when a sweep has been run for the entry; ``adjust_free``
    is the explicit verdict when one was recorded.
    """

    objectives: dict
    wav: str | None = None
    dense_max: float | None = None
    adjust_free: bool | None = None

    def __post_init__(self):
        missing = [n for n in OBJECTIVE_NAMES if n not in self.objectives]
        if missing:
            raise ValueError(f"entry is missing objectives {missing}")

    def passes(self, threshold: float) -> bool:
        """Adjust-free verdict, derived from dense_max when not explicit."""
        if self.adjust_free is not None:
            return self.adjust_free
        if self.dense_max is not None:
            return self.dense_max < threshold
        return False


@dataclass(frozen=True)
class RunSummary:
    run_id: str
    entries: tuple
    queries: int
    history: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "history", tuple(self.history))
        if self.queries < 0:
            raise ValueError("queries must be >= 0")


def load_front(path, run_id: str | None = None) -> RunSummary:
    """Read a front.json written by the attack command.

    WAV references are resolved against the front file's directory and
    must exist on disk.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    base = path.parent
    entries = []
    for raw in doc["entries"]:
        wav = raw.get("wav")
        if wav is not None:
            resolved = base / wav
            if not resolved.is_file():
                raise FileNotFoundError(f"front references missing wav {resolved}")
            wav = str(resolved)
        entries.append(
            EntryRecord(
                objectives=dict(raw["objectives"]),
                wav=wav,
                dense_max=raw.get("dense_max"),
                adjust_free=raw.get("adjust_free"),
            )
        )
    return RunSummary(run_id or path.parent.name or path.stem, tuple(entries), int(doc["queries"]))


def _entry_objectives(entry) -> dict:
    """Objective mapping of a front entry, archive entry, or raw dict."""
    objs = entry["objectives"] if isinstance(entry, dict) else entry.objectives
    return objs if isinstance(objs, dict) else objs.as_dict()


def project_front(entries, axes) -> list:
    """Project front entries onto two objective axes, preserving order."""
    ax, ay = axes
    for name in (ax, ay):
        if name not in OBJECTIVE_NAMES:
            raise ValueError(f"unknown objective axis {name!r}")
    points = []
    for entry in entries:
        objs = _entry_objectives(entry)
        points.append((float(objs[ax]), float(objs[ay])))
    return points


def knee_index(points) -> int:
    """Index of the knee of a 2-D front: the interior point farthest
    from the chord through the two extreme points (after sorting by the
    first coordinate). Fronts with fewer than 3 points return the
    low-end extreme. Collinear fronts fall back to the first interior
    point, the one adjacent to the low end.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected a list of 2-D points")
    if len(pts) == 0:
        raise ValueError("empty front has no knee")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    if len(pts) <= 2:
        return int(order[0])
    first = pts[order[0]]
    last = pts[order[-1]]
    chord = last - first
    norm = math.hypot(chord[0], chord[1])
    interior = order[1:-1]
    rel = pts[interior] - first
    dist = np.abs(chord[0] * rel[:, 1] - chord[1] * rel[:, 0]) / (norm if norm > 0 else 1.0)
    return int(interior[int(np.argmax(dist))])


@dataclass(frozen=True)
class AblationRow:
    """One f1 bin pairing a 3-objective entry with a 2-objective one."""

    f1_bin_low: float
    f1_3obj: float
    f2_3obj: float
    dense_max_3obj: float | None
    adjust_free_3obj: bool | None
    f1_2obj: float
    f2_2obj: float
    dense_max_2obj: float | None
    adjust_free_2obj: bool | None
    finding: bool


@dataclass(frozen=True)
class AblationComparison:
    rows: tuple
    budget_mismatch: bool
    bin_width: float


def _bin_representatives(entries, bin_width: float) -> dict:
    """Per f1 bin, the entry with the smallest f2 (the steadiest one)."""
    reps: dict[int, EntryRecord] = {}
    for entry in entries:
        objs = _entry_objectives(entry)
        # snap near-integer quotients so 0.30/0.05 bins as 6, not 5.999...
        key = int(math.floor(round(objs["f1"] / bin_width, 9)))
        best = reps.get(key)
        if best is None or objs["f2"] < _entry_objectives(best)["f2"]:
            reps[key] = entry
    return reps


def _verdict(entry, threshold: float):
    """Three-valued adjust-free verdict: True/False, or None if unknown."""
    if not isinstance(entry, EntryRecord):
        return None
    if entry.adjust_free is not None:
        return entry.adjust_free
    if entry.dense_max is not None:
        return entry.dense_max < threshold
    return None


def compare_ablation(
    run_3obj: RunSummary,
    run_2obj: RunSummary,
    bin_width: float = 0.05,
    threshold: float = 0.49,
) -> AblationComparison:
    """Pair entries of similar f1 across a 3-objective and a 2-objective run.

    Entries land in the same row when their f1 values share a bin of
    ``bin_width``; each run contributes its lowest-f2 entry per bin. A
    row is flagged as a finding when its lower-f2 member verifies as
    adjust-free while the higher-f2 member does not, the directional
    effect the third objective exists to produce. A query-budget
    mismatch between the runs does not block the comparison but is
    flagged on the result.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    budget_mismatch = run_3obj.queries != run_2obj.queries
    if budget_mismatch:
        logger.warning(
            "comparing runs with different query budgets (%d vs %d)",
            run_3obj.queries,
            run_2obj.queries,
        )
    reps_a = _bin_representatives(run_3obj.entries, bin_width)
    reps_b = _bin_representatives(run_2obj.entries, bin_width)
    rows = []
    for key in sorted(set(reps_a) & set(reps_b)):
        a, b = reps_a[key], reps_b[key]
        oa, ob = _entry_objectives(a), _entry_objectives(b)
        low, high = (a, b) if oa["f2"] <= ob["f2"] else (b, a)
        finding = _verdict(low, threshold) is True and _verdict(high, threshold) is False
        rows.append(
            AblationRow(
                f1_bin_low=key * bin_width,
                f1_3obj=float(oa["f1"]),
                f2_3obj=float(oa["f2"]),
                dense_max_3obj=getattr(a, "dense_max", None),
                adjust_free_3obj=getattr(a, "adjust_free", None),
                f1_2obj=float(ob["f1"]),
                f2_2obj=float(ob["f2"]),
                dense_max_2obj=getattr(b, "dense_max", None),
                adjust_free_2obj=getattr(b, "adjust_free", None),
                finding=finding,
            )
        )
    return AblationComparison(tuple(rows), budget_mismatch, bin_width)


@dataclass(frozen=True)
class AdjustFreeTally:
    passes: int
    total: int
    fraction: float
    threshold: float
    verdicts: tuple  # (run_id, passed) pairs in input order


def tally_adjust_free(runs, threshold: float = 0.49) -> AdjustFreeTally:
    """Fraction of targets with at least one adjust-free entry.

    A run passes when any of its entries verifies below the threshold
    on the dense grid (explicit verdicts win over derived ones); a run
    with no entries, or none verified, counts as a fail.
    """
    runs = list(runs)
    if not runs:
        raise ValueError("need at least one run to tally")
    verdicts = []
    for summary in runs:
        passed = any(entry.passes(threshold) for entry in summary.entries)
        verdicts.append((summary.run_id, passed))
    passes = sum(1 for _, ok in verdicts if ok)
    return AdjustFreeTally(passes, len(runs), passes / len(runs), threshold, tuple(verdicts))


def write_comparison_csv(comparison: AblationComparison, path) -> None:
    fields = [
        "f1_bin_low",
        "f1_3obj",
        "f2_3obj",
        "dense_max_3obj",
        "adjust_free_3obj",
        "f1_2obj",
        "f2_2obj",
        "dense_max_2obj",
        "adjust_free_2obj",
        "finding",
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in comparison.rows:
            writer.writerow([getattr(row, name) for name in fields])


def write_tally_json(tally: AdjustFreeTally, path) -> None:
    doc = {
        "passes": tally.passes,
        "total": tally.total,
        "fraction": tally.fraction,
        "threshold": tally.threshold,
        "verdicts": [{"run_id": rid, "adjust_free": ok} for rid, ok in tally.verdicts],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
