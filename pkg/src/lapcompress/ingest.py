"""Field snapshot data: loading, cleaning, writing, and a synthetic stand-in."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .compress import Snapshot, stack
from .graph import NetworkGraph, build_laplacian, read_edge_list, symmetrized

MISSING = {"", "nan", "na", "n/a", "null", "none"}


class DataParseError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FieldDataset:
    graph: NetworkGraph
    snapshots: tuple[Snapshot, ...]
    label: str = ""

    def __post_init__(self):
        times = [s.time_index for s in self.snapshots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DataParseError("snapshot time indices must be strictly increasing")
        for s in self.snapshots:
            if s.n != self.graph.n:
                raise DataParseError(f"day {s.time_index} has {s.n} values for a {self.graph.n}-node graph")

    @property
    def values(self) -> np.ndarray:
        return stack(self.snapshots)

    @property
    def days(self) -> tuple[int, ...]:
        return tuple(s.time_index for s in self.snapshots)


def data_path(name: str) -> Path:
    return Path(str(resources.files("lapcompress") / "data" / name))


def bundled_graph() -> NetworkGraph:
    """Contiguity graph of the 48 contiguous states plus DC (lon/lat coords)."""
    return read_edge_list(
        data_path("us_states.edges"), data_path("us_states.labels"), data_path("us_states.coords")
    )


def clean(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward-fill NaNs per node; leading gaps take the first observed value.

    Rows that are entirely missing are dropped; returns ``(values, kept_rows)``.
    """
    values = np.array(values, dtype=float)
    kept = ~np.all(np.isnan(values), axis=1)
    values = values[kept]
    if values.size and np.any(np.all(np.isnan(values), axis=0)):
        col = int(np.flatnonzero(np.all(np.isnan(values), axis=0))[0])
        raise DataParseError(f"node {col} has no observed value on any day")
    for j in range(values.shape[1]):
        col = values[:, j]
        obs = np.flatnonzero(~np.isnan(col))
        if obs.size == col.size:
            continue
        # index of the most recent observation at or before each row
        last = np.maximum.accumulate(np.where(~np.isnan(col), np.arange(col.size), -1))
        last[last < 0] = obs[0]
        values[:, j] = col[last]
    return values, kept


def _parse_cell(text: str, where: str) -> float:
    t = text.strip()
    if t.lower() in MISSING:
        return math.nan
    try:
        v = float(t)
    except ValueError:
        raise DataParseError(f"{where}: cannot parse {text!r} as a number") from None
    if not math.isfinite(v):
        raise DataParseError(f"{where}: non-finite value {text!r}")
    return v


def read_snapshot_csv(path, labels=None):
    """Parse a ``time_index,<node columns>`` CSV into ``(times, values)``.

    Node columns are either ``node_0..node_{n-1}`` or the node labels (in any
    order); values are returned in node order with NaN for missing cells.
    """
    path = Path(path)
    with open(path, encoding="utf-8-sig", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "time_index":
        raise DataParseError(f"{path}:1: first column must be 'time_index'")
    cols = header[1:]
    if cols == [f"node_{i}" for i in range(len(cols))]:
        perm = list(range(len(cols)))
    elif labels is not None:
        pos = {lab: i for i, lab in enumerate(labels)}
        missing = [c for c in cols if c not in pos]
        if missing or len(cols) != len(labels):
            raise DataParseError(f"{path}:1: header does not match the node labels (e.g. {missing[:3]})")
        perm = [pos[c] for c in cols]
    else:
        raise DataParseError(f"{path}:1: labeled header but no node labels to match it against")
    n = len(cols)
    times = []
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != n + 1:
            raise DataParseError(f"{path}:{lineno}: expected {n + 1} columns, found {len(row)}")
        try:
            times.append(int(row[0]))
        except ValueError:
            raise DataParseError(f"{path}:{lineno}: bad time_index {row[0]!r}") from None
        vals = np.empty(n)
        for c, text in enumerate(row[1:]):
            vals[perm[c]] = _parse_cell(text, f"{path}:{lineno}")
        values.append(vals)
    return np.array(times, dtype=int), np.array(values, dtype=float).reshape(len(values), n)


def load_dataset(edge_file, snapshot_file, labels_file=None, coords_file=None, label=None) -> FieldDataset:
    graph = symmetrized(read_edge_list(edge_file, labels_file, coords_file))
    if graph.n < 2:
        raise DataParseError("field data needs at least 2 nodes")
    times, values = read_snapshot_csv(snapshot_file, graph.node_labels)
    if values.shape[1] != graph.n:
        raise DataParseError(
            f"snapshot file has {values.shape[1]} node columns but the graph has {graph.n} nodes"
        )
    cleaned, kept = clean(values)
    if not kept.all():
        dropped = times[~kept].tolist()
        warnings.warn(f"dropped days with no observations: {dropped}", stacklevel=2)
    times = times[kept]
    snaps = tuple(Snapshot(v, time_index=int(t)) for t, v in zip(times, cleaned))
    return FieldDataset(graph, snaps, label or Path(snapshot_file).stem)


def snapshot_csv(times, values, labels=None) -> str:
    values = np.asarray(values, dtype=float)
    n = values.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_index", *(labels if labels is not None else [f"node_{i}" for i in range(n)])])
    for t, row in zip(times, values.tolist()):
        w.writerow([int(t), *(repr(float(v)) for v in row)])
    return buf.getvalue()


def dataset_csv(ds: FieldDataset) -> str:
    return snapshot_csv(ds.days, ds.values, ds.graph.node_labels)


# --- synthetic positivity-rate data -----------------------------------------

SYNTH_DEFAULTS = dict(
    base=0.08,
    base_swing=0.03,
    gradient=0.05,
    hotspots=3,
    hotspot_amplitude=0.06,
    hotspot_width=0.18,
    weekend_offset=0.02,
    local=0.07,
    noise=0.03,
)


def _unit_coords(graph: NetworkGraph) -> np.ndarray:
    if graph.coords is not None:
        xy = np.array(graph.coords, dtype=float)
    else:
        # spectral layout from the two smoothest nonconstant eigenvectors
        lap = build_laplacian(symmetrized(graph))
        _, vecs = np.linalg.eigh(0.5 * (lap + lap.T))
        xy = vecs[:, 1:3]
    span = np.ptp(xy, axis=0)
    span[span == 0] = 1.0
    return (xy - xy.min(axis=0)) / span


def synthesize_field_data(graph: NetworkGraph, days: int = 250, seed: int = 0, **params) -> np.ndarray:
    """Daily rates in [0, 1]: smooth regional structure, weekend offsets, noise.

    The signal is a slowly swinging national level, a linear east-west /
    north-south gradient whose direction drifts, a few Gaussian hotspots that
    wander and wax and wane, and a weekend bump (days ``t % 7`` in {0, 6})
    that is stronger in the west, plus slowly drifting state-specific offsets
    and daily noise. Returns an array of shape ``(days, n)``.
    """
    p = {**SYNTH_DEFAULTS, **params}
    unknown = set(params) - set(SYNTH_DEFAULTS)
    if unknown:
        raise TypeError(f"unknown synthesis parameters: {sorted(unknown)}")
    rng = np.random.default_rng(seed)
    xy = _unit_coords(graph)
    t = np.arange(days, dtype=float)
    c = xy - xy.mean(axis=0)

    level = p["base"] + p["base_swing"] * np.sin(2 * np.pi * t / 120.0 + rng.uniform(0, 2 * np.pi))
    angle = rng.uniform(0, 2 * np.pi) + 2 * np.pi * t / 250.0
    grad = p["gradient"] * (np.cos(angle)[:, None] * c[:, 0] + np.sin(angle)[:, None] * c[:, 1])

    bumps = np.zeros((days, graph.n))
    for _ in range(int(p["hotspots"])):
        start = rng.uniform(0.1, 0.9, size=2)
        velocity = rng.normal(0, 0.6 / max(days, 1), size=2)
        centre = np.clip(start + velocity * t[:, None], 0, 1)
        phase = rng.uniform(0, 2 * np.pi)
        period = rng.uniform(60, 180)
        amp = p["hotspot_amplitude"] * (0.6 + 0.4 * np.sin(2 * np.pi * t / period + phase))
        d2 = ((xy[None, :, :] - centre[:, None, :]) ** 2).sum(axis=-1)
        bumps += amp[:, None] * np.exp(-d2 / (2 * p["hotspot_width"] ** 2))

    # state-specific offsets: rough in space, drifting slowly in time
    offsets = rng.standard_normal(graph.n) + np.cumsum(rng.normal(0, 0.08, size=(days, graph.n)), axis=0)
    local = p["local"] * offsets

    weekend = np.isin(t.astype(int) % 7, (0, 6)).astype(float)
    wk = p["weekend_offset"] * weekend[:, None] * (1.0 + (1.0 - xy[:, 0]))[None, :]

    noise = p["noise"] * rng.standard_normal((days, graph.n))
    return np.clip(level[:, None] + grad + bumps + local + wk + noise, 0.0, 1.0)


# --- simulation snapshot files ----------------------------------------------


def simulation_csv(snapshots, binary: bool = False) -> str:
    """``instance_id,time_index,node_0,...`` rows; binary data written as 0/1."""
    snapshots = list(snapshots)
    n = snapshots[0].n
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance_id", "time_index", *(f"node_{i}" for i in range(n))])
    for s in snapshots:
        vals = (str(int(v)) for v in s.values) if binary else (repr(float(v)) for v in s.values)
        w.writerow([s.instance_id, s.time_index, *vals])
    return buf.getvalue()


def read_snapshots(path, labels=None) -> tuple[list[Snapshot], str]:
    """Read either snapshot CSV flavour; returns ``(snapshots, kind)``.

    ``kind`` is ``"simulation"`` for ``instance_id,time_index,...`` files and
    ``"field"`` for ``time_index,...`` files (which are cleaned on load).
    """
    path = Path(path)
    with open(path, encoding="utf-8-sig", newline="") as fh:
        first = next(csv.reader(fh), None)
    if not first:
        raise DataParseError(f"{path}: empty file")
    if first[0].strip() != "instance_id":
        times, values = read_snapshot_csv(path, labels)
        values, kept = clean(values)
        return [Snapshot(v, time_index=int(t)) for t, v in zip(times[kept], values)], "field"
    with open(path, encoding="utf-8-sig", newline="") as fh:
        rows = list(csv.reader(fh))
    n = len(rows[0]) - 2
    if rows[0][1].strip() != "time_index" or rows[0][2:] != [f"node_{i}" for i in range(n)]:
        raise DataParseError(f"{path}:1: expected header instance_id,time_index,node_0,...")
    snaps = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != n + 2:
            raise DataParseError(f"{path}:{lineno}: expected {n + 2} columns, found {len(row)}")
        try:
            inst, t = int(row[0]), int(row[1])
            vals = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise DataParseError(f"{path}:{lineno}: {exc}") from None
        snaps.append(Snapshot(np.array(vals), time_index=t, instance_id=inst))
    return snaps, "simulation"
