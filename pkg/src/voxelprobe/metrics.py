"""Leaderboard aggregation: group-wise min-max scores, average rank, correlation.

The overall score normalizes each metric column to [0, 1] inside a group of
methods (always including the designated baseline row), averages across the
M columns, and scales by 100. Average rank works on sparse tables: each
metric ranks its non-missing values (rank 1 best, fractional ties) and a
method is averaged over the metrics it actually reports.
"""

from __future__ import annotations

import configparser
import csv
import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MetricTable:
    """Methods x metrics values with a missing mask and group labels.

    ``groups`` assigns regular methods to normalization groups; the
    ``baseline`` method belongs to every group (it anchors each group's
    minimum) and receives one normalized score per group.
    """

    methods: tuple[str, ...]
    metrics: tuple[str, ...]
    values: np.ndarray  # (n_methods, M) float64
    missing: np.ndarray  # (n_methods, M) bool
    groups: dict[str, str] = field(default_factory=dict)
    baseline: str | None = None
    higher_is_better: tuple[bool, ...] | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        miss = np.asarray(self.missing, dtype=bool)
        n, m = len(self.methods), len(self.metrics)
        if vals.shape != (n, m) or miss.shape != (n, m):
            raise ValueError(f"values/missing must be {n} x {m}")
        if len(set(self.methods)) != n:
            raise ValueError("method names must be unique")
        hib = self.higher_is_better
        hib = tuple([True] * m) if hib is None else tuple(hib)
        if len(hib) != m:
            raise ValueError("higher_is_better must have one flag per metric")
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "missing", miss)
        object.__setattr__(self, "higher_is_better", hib)

    def row(self, method: str) -> int:
        try:
            return self.methods.index(method)
        except ValueError:
            raise KeyError(f"unknown method {method!r}") from None


@dataclass(frozen=True)
class NosResult:
    """Per-method overall scores plus the per-group normalization extrema."""

    scores: dict[str, float]  # regular method -> score in [0, 100]
    baseline_scores: dict[str, float]  # group -> baseline score
    group_extrema: dict[str, tuple[np.ndarray, np.ndarray]]  # group -> (mins, maxs)
    degenerate: tuple[tuple[str, str], ...]  # (group, metric) with max == min


def nos(table: MetricTable) -> NosResult:
    """Group-wise min-max normalized overall score, 100/M * sum of columns.

    Every participant (group member or baseline) must have a complete row;
    a missing cell is an error naming the method and metric. A column whose
    group max equals its min normalizes to 0 for everyone and is flagged.
    """
    if table.baseline is None:
        raise ValueError("a baseline method is required; every group includes it")
    base_row = table.row(table.baseline)
    labels = sorted(set(table.groups.values()))
    if not labels:
        raise ValueError("no groups defined")

    m = len(table.metrics)
    scores: dict[str, float] = {}
    baseline_scores: dict[str, float] = {}
    extrema: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    degenerate: list[tuple[str, str]] = []

    for label in labels:
        members = [name for name in table.methods if table.groups.get(name) == label]
        rows = [table.row(name) for name in members] + [base_row]
        names = members + [table.baseline]
        for name, row in zip(names, rows):
            gaps = np.flatnonzero(table.missing[row])
            if gaps.size:
                raise ValueError(
                    f"missing value for method {name!r}, metric "
                    f"{table.metrics[int(gaps[0])]!r}"
                )
        block = table.values[rows]  # (participants, M)
        mins = block.min(axis=0)
        maxs = block.max(axis=0)
        extrema[label] = (mins, maxs)

        normalized = np.zeros_like(block)
        for j in range(m):
            span = maxs[j] - mins[j]
            if span == 0:
                degenerate.append((label, table.metrics[j]))
                warnings.warn(
                    f"metric {table.metrics[j]!r} is constant in group {label!r}; "
                    "normalized to 0",
                    stacklevel=2,
                )
                continue
            col = (block[:, j] - mins[j]) / span
            normalized[:, j] = col if table.higher_is_better[j] else 1.0 - col
        totals = 100.0 * normalized.sum(axis=1) / m
        for name, value in zip(members, totals[:-1]):
            scores[name] = float(value)
        baseline_scores[label] = float(totals[-1])

    return NosResult(scores, baseline_scores, extrema, tuple(degenerate))


def avg_rank(table: MetricTable) -> dict[str, float]:
    """Average fractional rank per method over its non-missing metrics.

    Rank 1 is best; ties share the mean of the positions they occupy.
    Methods reporting no metric at all are excluded with a warning.
    """
    if len(table.methods) < 2:
        raise ValueError("ranking needs at least two methods")
    sums = np.zeros(len(table.methods))
    counts = np.zeros(len(table.methods), dtype=np.int64)
    for j in range(len(table.metrics)):
        rows = np.flatnonzero(~table.missing[:, j])
        if rows.size == 0:
            continue
        vals = table.values[rows, j]
        order = np.argsort(-vals if table.higher_is_better[j] else vals, kind="stable")
        sorted_rows = rows[order]
        sorted_vals = vals[order]
        i = 0
        while i < sorted_rows.size:
            k = i
            while k + 1 < sorted_rows.size and sorted_vals[k + 1] == sorted_vals[i]:
                k += 1
            rank = (i + 1 + k + 1) / 2.0
            for pos in range(i, k + 1):
                sums[sorted_rows[pos]] += rank
                counts[sorted_rows[pos]] += 1
            i = k + 1

    ranks: dict[str, float] = {}
    skipped = []
    for idx, name in enumerate(table.methods):
        if counts[idx] == 0:
            skipped.append(name)
            continue
        ranks[name] = float(sums[idx] / counts[idx])
    if skipped:
        warnings.warn(f"methods with no available metrics excluded: {skipped}", stacklevel=2)
    return ranks


def pearson(pairs) -> float:
    """Sample Pearson correlation of (x, y) pairs; needs variance in both."""
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValueError("need at least two (x, y) pairs")
    x = arr[:, 0] - arr[:, 0].mean()
    y = arr[:, 1] - arr[:, 1].mean()
    vx = float(x @ x)
    vy = float(y @ y)
    if vx <= 0.0 or vy <= 0.0:
        raise ValueError("pearson undefined for zero-variance coordinates")
    return float((x @ y) / np.sqrt(vx * vy))


# ---------------------------------------------------------------------------
# table / config file formats


def read_metric_table(
    table_path, groups_path=None, higher_is_better=None
) -> MetricTable:
    """Load the CSV layout: header of metric names, method per row, '-' missing."""
    with open(table_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or len(header) < 2:
            raise ValueError(f"{table_path}: expected a header with metric names")
        metrics = tuple(h.strip() for h in header[1:])
        methods = []
        values = []
        missing = []
        for line_no, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != len(metrics) + 1:
                raise ValueError(f"{table_path}:{line_no}: expected {len(metrics) + 1} cells")
            methods.append(row[0].strip())
            vals = []
            miss = []
            for cell in row[1:]:
                cell = cell.strip()
                if cell in ("-", "--", ""):
                    vals.append(np.nan)
                    miss.append(True)
                else:
                    vals.append(float(cell))
                    miss.append(False)
            values.append(vals)
            missing.append(miss)
    groups: dict[str, str] = {}
    baseline = None
    if groups_path is not None:
        groups, baseline = read_groups_config(groups_path)
    return MetricTable(
        tuple(methods),
        metrics,
        np.asarray(values, dtype=np.float64),
        np.asarray(missing, dtype=bool),
        groups,
        baseline,
        higher_is_better,
    )


def read_groups_config(path) -> tuple[dict[str, str], str | None]:
    """Sidecar group map: a [groups] section of method = label pairs and an
    optional [baseline] section with name = method."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep method-name case
    with open(path) as fh:
        parser.read_file(fh)
    if "groups" not in parser:
        raise ValueError(f"{path}: missing [groups] section")
    groups = dict(parser["groups"])
    baseline = parser.get("baseline", "name", fallback=None)
    return groups, baseline


def write_nos_csv(path, result: NosResult, baseline_name: str = "baseline") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "nos"])
        for name in sorted(result.scores):
            writer.writerow([name, f"{result.scores[name]:.2f}"])
        for label in sorted(result.baseline_scores):
            writer.writerow(
                [f"{baseline_name}@{label}", f"{result.baseline_scores[label]:.2f}"]
            )


def write_rank_csv(path, ranks: dict[str, float]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "avg_rank"])
        for name, value in ranks.items():
            writer.writerow([name, f"{value:.3f}"])
