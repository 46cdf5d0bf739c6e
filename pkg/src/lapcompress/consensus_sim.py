"""Linear consensus dynamics driven by Gaussian noise at a single node."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .compress import Snapshot, stack
from .spectral import LaplacianBasis, components

CHUNK = 128
RANDOM = "random"


def default_threads() -> int:
    env = os.environ.get("LAPCOMPRESS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def instance_rng(seed: int, instance_id: int) -> np.random.Generator:
    """Independent stream for one ensemble member."""
    return np.random.default_rng([int(seed), int(instance_id)])


def check_row_stochastic(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if np.any(A < -1e-12):
        raise ValueError("A has negative entries; it is not row-stochastic")
    bad = np.flatnonzero(np.abs(A.sum(axis=1) - 1.0) > tol)
    if bad.size:
        raise ValueError(f"row {bad[0]} of A sums to {A[bad[0]].sum():.12g}, not 1")
    return A


@dataclass(frozen=True)
class ConsensusConfig:
    """``x[k+1] = A x[k] + e_z u[k]`` with ``x[0] = x0`` (zero by default).

    ``z`` is a node index or ``"random"`` (uniform per instance).
    ``drive=False`` switches the input off, for testing the noiseless flow.
    """

    A: np.ndarray = field(repr=False)
    z: int | str = RANDOM
    k_max: int = 400
    ensemble_size: int = 100
    seed: int = 0
    snapshot_times: tuple[int, ...] = (400,)
    drive: bool = True
    x0: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        A = check_row_stochastic(self.A)
        object.__setattr__(self, "A", A)
        n = A.shape[0]
        if self.z != RANDOM and not (isinstance(self.z, (int, np.integer)) and 0 <= self.z < n):
            raise ValueError(f"z must be 'random' or a node index in [0, {n}), got {self.z!r}")
        times = tuple(sorted(set(int(t) for t in self.snapshot_times)))
        if not times:
            raise ValueError("snapshot_times must be nonempty")
        if times[0] < 0 or times[-1] > self.k_max:
            raise ValueError(f"snapshot times must lie in [0, {self.k_max}]")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be positive")
        object.__setattr__(self, "snapshot_times", times)
        if self.x0 is not None and np.shape(self.x0) != (n,):
            raise ValueError(f"x0 must have length {n}")

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class ConsensusRun:
    snapshots: list[Snapshot]
    input_nodes: tuple[int, ...]

    def at(self, time_index: int) -> list[Snapshot]:
        return [s for s in self.snapshots if s.time_index == time_index]

    def input_node_csv(self) -> str:
        lines = ["instance_id,input_node"]
        lines += [f"{i},{z}" for i, z in enumerate(self.input_nodes)]
        return "\n".join(lines) + "\n"


def _draws(cfg: ConsensusConfig, instance_id: int):
    rng = instance_rng(cfg.seed, instance_id)
    z = int(rng.integers(cfg.n)) if cfg.z == RANDOM else int(cfg.z)
    u = rng.standard_normal(cfg.k_max)
    return z, u


def _simulate_chunk(cfg: ConsensusConfig, ids: range):
    draws = [_draws(cfg, i) for i in ids]
    zs = np.array([d[0] for d in draws], dtype=int)
    U = np.array([d[1] for d in draws]).reshape(len(ids), cfg.k_max)
    rows = np.arange(len(ids))
    X = np.zeros((len(ids), cfg.n))
    if cfg.x0 is not None:
        X[:] = cfg.x0
    AT = cfg.A.T
    out = {}
    wanted = set(cfg.snapshot_times)
    if 0 in wanted:
        out[0] = X.copy()
    for k in range(cfg.k_max):
        X = X @ AT
        if cfg.drive:
            X[rows, zs] += U[:, k]
        if k + 1 in wanted:
            out[k + 1] = X.copy()
    return zs, out


def simulate_consensus(cfg: ConsensusConfig, threads: int | None = None) -> ConsensusRun:
    """Run the ensemble; snapshots come back ordered by (instance_id, time).

    Each instance draws its input node and noise sequence from its own stream
    seeded by ``(seed, instance_id)``; instances are integrated in fixed-size
    chunks, so the output does not depend on ``threads``.
    """
    m = cfg.ensemble_size
    chunks = [range(lo, min(lo + CHUNK, m)) for lo in range(0, m, CHUNK)]
    workers = min(threads or default_threads(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _simulate_chunk(cfg, c), chunks))
    else:
        results = [_simulate_chunk(cfg, c) for c in chunks]
    snaps = []
    nodes = []
    for ids, (zs, out) in zip(chunks, results):
        nodes.extend(int(z) for z in zs)
        for r, inst in enumerate(ids):
            for t in cfg.snapshot_times:
                snaps.append(Snapshot(out[t][r], time_index=t, instance_id=inst))
    return ConsensusRun(snaps, tuple(nodes))


def ensemble_moment(snapshots, basis: LaplacianBasis) -> np.ndarray:
    """Average of ``s s^T`` over snapshots taken at one time index."""
    snapshots = list(snapshots)
    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots")
    times = {s.time_index for s in snapshots}
    if len(times) > 1:
        raise ValueError(f"snapshots span several time indices: {sorted(times)}")
    S = components(basis, stack(snapshots))
    return S.T @ S / len(S)
