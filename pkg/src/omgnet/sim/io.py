"""CSV output for rollouts and summaries, with matching readers.

A rollout is written as three files sharing a prefix:

``<prefix>_trajectory.csv``
    ``t, bus, s, u, r, theta, grid_power, s_next``
``<prefix>_flows.csv``
    ``t, edge, f``
``<prefix>_cost.csv``
    ``t, stage_cost``

Floats are written with ``repr`` so a reload is exact.
"""
import csv
import os

import numpy as np

from ..errors import ScenarioError
from .metrics import Summary, SummaryRow
from .rollout import RunResult

__all__ = [
    "TRAJECTORY_COLUMNS", "FLOW_COLUMNS", "COST_COLUMNS", "SUMMARY_COLUMNS",
    "trajectory_paths", "write_trajectory", "read_trajectory", "write_summary", "read_summary",
]

TRAJECTORY_COLUMNS = ("t", "bus", "s", "u", "r", "theta", "grid_power", "s_next")
FLOW_COLUMNS = ("t", "edge", "f")
COST_COLUMNS = ("t", "stage_cost")
SUMMARY_COLUMNS = ("policy", "total_cost", "avg_cost", "savings_pct", "bound", "lower_bound")


def _f(x):
    return repr(float(x))


def trajectory_paths(prefix):
    return {k: f"{prefix}_{k}.csv" for k in ("trajectory", "flows", "cost")}


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_trajectory(result, prefix):
    """Write ``result`` to the three files named by :func:`trajectory_paths`."""
    paths = trajectory_paths(prefix)
    T, n = result.u.shape
    m = result.f.shape[1]
    fh, w = _writer(paths["trajectory"])
    with fh:
        w.writerow(TRAJECTORY_COLUMNS)
        for t in range(T):
            for i in range(n):
                w.writerow((t, i, _f(result.s[t, i]), _f(result.u[t, i]), _f(result.r[t, i]),
                            _f(result.theta[t, i]), _f(result.grid_power[t, i]),
                            _f(result.s[t + 1, i])))
    fh, w = _writer(paths["flows"])
    with fh:
        w.writerow(FLOW_COLUMNS)
        for t in range(T):
            for e in range(m):
                w.writerow((t, e, _f(result.f[t, e])))
    fh, w = _writer(paths["cost"])
    with fh:
        w.writerow(COST_COLUMNS)
        for t in range(T):
            w.writerow((t, _f(result.stage_cost[t])))
    return paths


def _read_table(path, columns):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != columns:
            raise ScenarioError(f"{path}: expected header {','.join(columns)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(columns):
                raise ScenarioError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(rec)}")
            try:
                rows.append([int(rec[0])] + [float(x) for x in rec[1:]])
            except ValueError as exc:
                raise ScenarioError(f"{path}:{lineno}: malformed row ({exc})") from None
    return rows


def _grid_fill(rows, shape, cols, path):
    out = [np.full(shape, np.nan) for _ in cols]
    seen = np.zeros(shape, dtype=bool)
    for rec in rows:
        t, k = rec[0], int(rec[1])
        if not (0 <= t < shape[0] and 0 <= k < shape[1]):
            raise ScenarioError(f"{path}: index ({t}, {k}) outside {shape}")
        if seen[t, k]:
            raise ScenarioError(f"{path}: duplicate row for ({t}, {k})")
        seen[t, k] = True
        for arr, c in zip(out, cols):
            arr[t, k] = rec[c]
    if not seen.all():
        raise ScenarioError(f"{path}: {int((~seen).sum())} rows missing")
    return out


def read_trajectory(prefix, policy=None):
    """Inverse of :func:`write_trajectory`; returns a :class:`RunResult`."""
    paths = trajectory_paths(prefix)
    traj = _read_table(paths["trajectory"], TRAJECTORY_COLUMNS)
    flows = _read_table(paths["flows"], FLOW_COLUMNS)
    cost = _read_table(paths["cost"], COST_COLUMNS)
    T = len(cost)
    n = 1 + max((int(r[1]) for r in traj), default=-1)
    m = 1 + max((int(r[1]) for r in flows), default=-1)
    s, u, r, th, v, s_next = _grid_fill(traj, (T, n), range(2, 8), paths["trajectory"])
    (f,) = _grid_fill(flows, (T, m), (2,), paths["flows"]) if m else (np.zeros((T, 0)),)
    stage = np.full(T, np.nan)
    for rec in cost:
        if not 0 <= rec[0] < T or not np.isnan(stage[rec[0]]):
            raise ScenarioError(f"{paths['cost']}: bad or duplicate period {rec[0]}")
        stage[rec[0]] = rec[1]
    levels = np.vstack([s, s_next[-1:]]) if T else s
    if T > 1 and not np.array_equal(s[1:], s_next[:-1]):
        raise ScenarioError(f"{paths['trajectory']}: s_next does not match the next period's s")
    if policy is None:
        policy = os.path.basename(prefix)
    return RunResult(policy, levels, u, r, th, f, v, stage)


def write_summary(summary, path):
    fh, w = _writer(path)
    with fh:
        w.writerow(SUMMARY_COLUMNS)
        for row in summary.rows:
            w.writerow((row.policy,) + tuple(_f(x) for x in row[1:]))


def read_summary(path):
    """Read a summary CSV back into a :class:`Summary` (upper bound left NaN)."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != SUMMARY_COLUMNS:
            raise ScenarioError(f"{path}: expected header {','.join(SUMMARY_COLUMNS)}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(SUMMARY_COLUMNS):
                raise ScenarioError(f"{path}:{lineno}: expected {len(SUMMARY_COLUMNS)} fields")
            try:
                rows.append(SummaryRow(rec[0], *(float(x) for x in rec[1:])))
            except ValueError as exc:
                raise ScenarioError(f"{path}:{lineno}: malformed row ({exc})") from None
    bound = rows[0].bound if rows else float("nan")
    lower = rows[0].lower_bound if rows else float("nan")
    return Summary(rows, bound, lower, float("nan"))
