"""Weighted digraphs, their Laplacians, and the random geometric generator.

Edge ``(i, j, w)`` means node ``i`` directly influences node ``j`` with
strength ``w``; it lands in the Laplacian at row ``j``, column ``i``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ROW_SUM_TOL = 1e-10
MAX_RETRIES = 50


class GraphValidationError(ValueError):
    """Raised when a graph violates one of its structural invariants."""


class ConnectivityError(RuntimeError):
    pass


@dataclass(frozen=True)
class NetworkGraph:
    """Immutable weighted digraph over ``n`` nodes.

    ``edges`` holds ``(src, dst, weight)`` triples sorted by ``(src, dst)``.
    ``coords`` is an optional ``(n, 2)`` array of plotting positions.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...] = ()
    node_labels: tuple[str, ...] | None = None
    coords: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise GraphValidationError(f"node count must be a positive integer, got {self.n!r}")
        edges = tuple(sorted((int(s), int(d), float(w)) for s, d, w in self.edges))
        seen = set()
        for s, d, w in edges:
            if not (0 <= s < self.n and 0 <= d < self.n):
                raise GraphValidationError(f"edge ({s}->{d}, w={w}) has a node index outside [0, {self.n})")
            if s == d:
                raise GraphValidationError(f"edge ({s}->{d}, w={w}) is a self-loop")
            if not (w > 0 and math.isfinite(w)):
                raise GraphValidationError(f"edge ({s}->{d}, w={w}) must have a finite positive weight")
            if (s, d) in seen:
                raise GraphValidationError(f"edge ({s}->{d}) appears more than once")
            seen.add((s, d))
        object.__setattr__(self, "edges", edges)
        if self.node_labels is not None:
            labels = tuple(str(x) for x in self.node_labels)
            if len(labels) != self.n:
                raise GraphValidationError(f"{len(labels)} node labels given for {self.n} nodes")
            object.__setattr__(self, "node_labels", labels)
        if self.coords is not None:
            xy = np.array(self.coords, dtype=float)
            if xy.shape != (self.n, 2):
                raise GraphValidationError(f"coords must have shape ({self.n}, 2), got {xy.shape}")
            xy.setflags(write=False)
            object.__setattr__(self, "coords", xy)

    def weight_matrix(self) -> np.ndarray:
        """Dense matrix ``M`` with ``M[dst, src] = weight``."""
        m = np.zeros((self.n, self.n))
        for s, d, w in self.edges:
            m[d, s] = w
        return m

    def in_weight_sums(self) -> np.ndarray:
        return self.weight_matrix().sum(axis=1)

    def mean_degree(self) -> float:
        """Mean number of incoming edges per node."""
        return len(self.edges) / self.n

    def is_symmetric(self) -> bool:
        m = self.weight_matrix()
        return bool(np.array_equal(m, m.T))


def build_laplacian(g: NetworkGraph) -> np.ndarray:
    """Laplacian with ``L[j, i] = -w_ij`` and rows summing to zero."""
    wm = g.weight_matrix()
    lap = -wm
    lap[np.diag_indices(g.n)] = wm.sum(axis=1)
    check_laplacian(lap)
    return lap


def check_laplacian(lap: np.ndarray, tol: float = ROW_SUM_TOL) -> None:
    lap = np.asarray(lap, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise GraphValidationError(f"Laplacian must be square, got shape {lap.shape}")
    scale = max(np.abs(lap).sum(axis=1).max(initial=0.0), 1.0)
    bad = np.flatnonzero(np.abs(lap.sum(axis=1)) > tol * scale)
    if bad.size:
        raise GraphValidationError(f"Laplacian row {bad[0]} does not sum to zero")


def is_strongly_connected(g: NetworkGraph) -> bool:
    if g.n == 1:
        return True
    fwd = [[] for _ in range(g.n)]
    back = [[] for _ in range(g.n)]
    for s, d, _ in g.edges:
        fwd[s].append(d)
        back[d].append(s)
    return _reaches_all(fwd) and _reaches_all(back)


def _reaches_all(adj: list[list[int]]) -> bool:
    seen = [False] * len(adj)
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == len(adj)


def consensus_matrix(g: NetworkGraph) -> np.ndarray:
    """Row-stochastic ``A = I - L``; every node's incoming weight must be <= 1."""
    sums = g.in_weight_sums()
    over = np.flatnonzero(sums > 1.0 + 1e-12)
    if over.size:
        i = over[0]
        raise GraphValidationError(f"node {i} has incoming weight sum {sums[i]:.6g} > 1")
    a = np.eye(g.n) - build_laplacian(g)
    a[(a < 0) & (a >= -1e-12)] = 0.0
    return a


def radius_for_mean_degree(n: int, mean_degree: float) -> float:
    """Connection radius giving the requested expected degree in the unit square.

    Uses the boundary-corrected pair probability ``pi r^2 - 8 r^3 / 3``.
    """
    target = mean_degree / (n - 1)
    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if math.pi * mid**2 - 8.0 * mid**3 / 3.0 < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_geometric_graph(
    n: int,
    radius: float,
    row_sum: float = 0.8,
    seed=None,
    weighting: str = "in-normalized",
    max_retries: int = MAX_RETRIES,
) -> NetworkGraph:
    """Random geometric digraph in the unit square with bidirectional edges.

    With ``weighting="in-normalized"`` every node's incoming weights sum to
    ``row_sum`` (each incoming edge gets ``row_sum / in_degree``).
    ``weighting="symmetric"`` gives every edge ``row_sum / max_degree`` so the
    Laplacian is symmetric and in-sums stay <= ``row_sum``.

    Placements that are not strongly connected are redrawn up to
    ``max_retries`` times.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not radius > 0:
        raise ValueError("radius must be positive")
    if not 0 < row_sum < 1:
        raise ValueError("row_sum must lie in (0, 1)")
    if weighting not in ("in-normalized", "symmetric"):
        raise ValueError(f"unknown weighting {weighting!r}")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        pts = rng.random((n, 2))
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        adj = (dist <= radius) & ~np.eye(n, dtype=bool)
        deg = adj.sum(axis=0)
        if deg.min() == 0:
            continue
        src, dst = np.nonzero(adj)
        if weighting == "in-normalized":
            w = row_sum / deg[dst]
        else:
            w = np.full(src.shape, row_sum / deg.max())
        g = NetworkGraph(n, tuple(zip(src.tolist(), dst.tolist(), w.tolist())), coords=pts)
        if is_strongly_connected(g):
            return g
    raise ConnectivityError(
        f"no strongly connected placement of {n} nodes at radius {radius} "
        f"after {max_retries} attempts; try a larger radius"
    )


# --- text formats -----------------------------------------------------------


def _content_lines(path: Path):
    with open(path, encoding="utf-8", newline=None) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def read_edge_list(path, labels_path=None, coords_path=None) -> NetworkGraph:
    """Parse ``src dst weight`` lines with an optional ``nodes N`` header."""
    path = Path(path)
    n = None
    edges = []
    for lineno, line in _content_lines(path):
        parts = line.split()
        if parts[0] == "nodes":
            if len(parts) != 2 or n is not None or edges:
                raise GraphValidationError(f"{path}:{lineno}: malformed or misplaced 'nodes' header")
            n = int(parts[1])
            continue
        if len(parts) != 3:
            raise GraphValidationError(f"{path}:{lineno}: expected 'src dst weight', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise GraphValidationError(f"{path}:{lineno}: {exc}") from None
    labels = read_node_labels(labels_path) if labels_path else None
    coords = read_coords(coords_path) if coords_path else None
    if n is None:
        n = len(labels) if labels else 1 + max((max(s, d) for s, d, _ in edges), default=-1)
    return NetworkGraph(n, tuple(edges), node_labels=labels, coords=coords)


def format_edge_list(g: NetworkGraph) -> str:
    lines = [f"nodes {g.n}"]
    lines += [f"{s} {d} {w!r}" for s, d, w in g.edges]
    return "\n".join(lines) + "\n"


def read_node_labels(path) -> tuple[str, ...]:
    with open(path, encoding="utf-8", newline=None) as fh:
        return tuple(line.rstrip("\n") for line in fh if line.strip())


def read_coords(path) -> np.ndarray:
    """One ``x y`` pair per line; line order is node order."""
    rows = []
    for lineno, line in _content_lines(Path(path)):
        parts = line.split()
        if len(parts) != 2:
            raise GraphValidationError(f"{path}:{lineno}: expected 'x y', got {line!r}")
        rows.append((float(parts[0]), float(parts[1])))
    return np.array(rows, dtype=float).reshape(-1, 2)


def format_coords(coords: np.ndarray) -> str:
    return "".join(f"{x!r} {y!r}\n" for x, y in np.asarray(coords).tolist())


def symmetrized(g: NetworkGraph) -> NetworkGraph:
    """Add any missing reverse edge with the same weight."""
    have = {(s, d): w for s, d, w in g.edges}
    extra = [(d, s, w) for (s, d), w in have.items() if (d, s) not in have]
    return NetworkGraph(g.n, g.edges + tuple(extra), node_labels=g.node_labels, coords=g.coords)


def from_weight_matrix(wm: Sequence[Sequence[float]], **kwargs) -> NetworkGraph:
    """Inverse of :meth:`NetworkGraph.weight_matrix`."""
    wm = np.asarray(wm, dtype=float)
    dst, src = np.nonzero(wm)
    keep = src != dst
    edges: Iterable = zip(src[keep].tolist(), dst[keep].tolist(), wm[dst[keep], src[keep]].tolist())
    return NetworkGraph(wm.shape[0], tuple(edges), **kwargs)
