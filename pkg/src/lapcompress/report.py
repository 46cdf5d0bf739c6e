"""Machine-readable reports and plot-ready tables."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .compress import EnergyCurve, dominant_csv, energy_curve
from .graph import NetworkGraph
from .spectral import LaplacianBasis

SCHEMA_VERSION = 1


def write_atomic(path, text: str) -> Path:
    """Write ``text`` via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _num(x: float) -> float:
    return float(x)


def _key(key) -> str:
    return ":".join(str(k) for k in key) if isinstance(key, tuple) else str(key)


@dataclass
class CompressReport:
    label: str
    basis: LaplacianBasis
    curve: EnergyCurve
    dominant: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.curve.F > 1 + 1e-12):
            raise ValueError("energy fraction above 1 in report")
        for table in self.dominant.values():
            for i, _, _ in table:
                if not 0 <= i < self.basis.n:
                    raise ValueError(f"basis index {i} out of range")

    def to_dict(self) -> dict:
        b = self.basis
        doc = {
            "schema_version": SCHEMA_VERSION,
            "label": self.label,
            "basis": {
                "n": b.n,
                "orthonormal": b.orthonormal,
                "eigenvalues": [_num(v) for v in b.eigenvalues],
                "eigenvalues_imag": [_num(v) for v in b.eigenvalues_imag],
            },
            "K_values": list(self.curve.K_values),
            "mean_energy_fraction": [_num(v) for v in self.curve.mean],
            "energy_curves": [
                {
                    "instance_id": inst,
                    "time_index": t,
                    "energy_fraction": [_num(v) for v in self.curve.F[i]],
                }
                for i, (inst, t) in enumerate(zip(self.curve.instance_ids, self.curve.time_indices))
            ],
            "dominant_basis": {
                _key(key): [
                    {"rank": r, "basis_index": i, "eigenvalue": _num(lam), "component": _num(c)}
                    for r, (i, lam, c) in enumerate(table, start=1)
                ]
                for key, table in self.dominant.items()
            },
            "provenance": {"tool_version": __version__, **self.provenance},
        }
        if self.curve.match is not None:
            doc["mean_match_fraction"] = [_num(v) for v in self.curve.match.mean(axis=0)]
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def figure2_data(snapshots, basis: LaplacianBasis, K_grid) -> tuple[EnergyCurve, str, str]:
    """Per-instance and ensemble-mean energy-fraction tables."""
    curve = energy_curve(basis, snapshots, K_grid)
    return curve, curve.to_csv(include_mean=False), curve.mean_csv()


def figure5_data(dataset, basis: LaplacianBasis, K_grid) -> tuple[EnergyCurve, str]:
    """Energy fraction against K for every day of a field dataset."""
    curve = energy_curve(basis, dataset.snapshots, K_grid)
    return curve, curve.to_csv(key="day", include_mean=False)


def eigenvector_overlay(basis: LaplacianBasis, index: int, graph: NetworkGraph) -> str:
    """CSV ``node,x,y,value,class`` for drawing one basis vector on the graph.

    ``class`` is ``positive`` / ``negative`` beyond half the largest magnitude.
    """
    if graph.coords is None:
        raise ValueError("graph has no node coordinates to overlay on")
    if not 0 <= index < basis.n:
        raise ValueError(f"basis index {index} out of range [0, {basis.n})")
    v = basis.V[:, index]
    cut = 0.5 * np.abs(v).max()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "x", "y", "value", "class"])
    for i, ((x, y), val) in enumerate(zip(graph.coords.tolist(), v.tolist())):
        cls = "positive" if val >= cut else "negative" if val <= -cut else ""
        node = graph.node_labels[i] if graph.node_labels else i
        w.writerow([node, repr(x), repr(y), repr(val), cls])
    return buf.getvalue()


def dominant_tables_csv(tables: dict) -> str:
    """Concatenate dominant-basis tables keyed by ``(instance_id, time_index)``."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["instance_id", "time_index", "rank", "basis_index", "eigenvalue", "component"])
    for (inst, t), table in tables.items():
        for line in dominant_csv(table).splitlines()[1:]:
            w.writerow([inst, t, *line.split(",")])
    return out.getvalue()
