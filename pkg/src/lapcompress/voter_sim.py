"""Two-stage stochastic voter model with stubborn (pinned) nodes."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .compress import Snapshot
from .consensus_sim import CHUNK, check_row_stochastic, default_threads, instance_rng

FAIR_COIN = "random"


@dataclass(frozen=True)
class VoterConfig:
    A: np.ndarray = field(repr=False)
    pinned: tuple[tuple[int, int], ...] = ()
    k_max: int = 500
    ensemble_size: int = 100
    seed: int = 0
    snapshot_times: tuple[int, ...] = (500,)
    initial_state: np.ndarray | str = field(default=FAIR_COIN, repr=False)

    def __post_init__(self):
        A = check_row_stochastic(self.A)
        object.__setattr__(self, "A", A)
        n = A.shape[0]
        pins = tuple((int(i), int(v)) for i, v in self.pinned)
        nodes = [i for i, _ in pins]
        if len(set(nodes)) != len(nodes):
            raise ValueError("pinned node indices must be distinct")
        for i, v in pins:
            if not 0 <= i < n:
                raise ValueError(f"pinned node {i} outside [0, {n})")
            if v not in (0, 1):
                raise ValueError(f"pinned status for node {i} must be 0 or 1, got {v}")
        object.__setattr__(self, "pinned", pins)
        times = tuple(sorted(set(int(t) for t in self.snapshot_times)))
        if not times or times[0] < 0 or times[-1] > self.k_max:
            raise ValueError(f"snapshot_times must be nonempty and within [0, {self.k_max}]")
        object.__setattr__(self, "snapshot_times", times)
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be positive")
        if not isinstance(self.initial_state, str):
            x0 = np.asarray(self.initial_state)
            if x0.shape != (n,) or not np.isin(x0, (0, 1)).all():
                raise ValueError(f"initial_state must be a 0/1 vector of length {n}")
        elif self.initial_state != FAIR_COIN:
            raise ValueError(f"unknown initial_state {self.initial_state!r}")

    @property
    def n(self) -> int:
        return self.A.shape[0]


def _simulate_chunk(cfg: VoterConfig, ids: range):
    n = cfg.n
    rngs = [instance_rng(cfg.seed, i) for i in ids]
    if isinstance(cfg.initial_state, str):
        X = np.array([r.random(n) < 0.5 for r in rngs], dtype=float)
    else:
        X = np.tile(np.asarray(cfg.initial_state, dtype=float), (len(ids), 1))
    pin_idx = np.array([i for i, _ in cfg.pinned], dtype=int)
    pin_val = np.array([v for _, v in cfg.pinned], dtype=float)
    X[:, pin_idx] = pin_val
    AT = cfg.A.T
    wanted = set(cfg.snapshot_times)
    out = {}
    if 0 in wanted:
        out[0] = X.copy()
    for k in range(cfg.k_max):
        Y = X @ AT
        draws = np.array([r.random(n) for r in rngs])
        X = (draws < Y).astype(float)
        X[:, pin_idx] = pin_val
        if k + 1 in wanted:
            out[k + 1] = X.copy()
    return out


def simulate_voter(cfg: VoterConfig, threads: int | None = None) -> list[Snapshot]:
    """Binary snapshots ordered by (instance_id, time).

    Stage 1 averages ``y = A x`` (pinned statuses included); stage 2 sets each
    node to 1 with probability ``y_i``; pinned nodes are then reset.
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
    for ids, out in zip(chunks, results):
        for r, inst in enumerate(ids):
            for t in cfg.snapshot_times:
                snaps.append(Snapshot(out[t][r], time_index=t, instance_id=inst))
    return snaps


def voter_mean_field(cfg: VoterConfig) -> np.ndarray:
    """Stationary expected state: fixed point of ``E x = A E x`` with pins held.

    Solves ``(I - A_ff) m_f = A_fp x_p`` for the free block.
    """
    n = cfg.n
    mean = np.zeros(n)
    pins = dict(cfg.pinned)
    free = np.array([i for i in range(n) if i not in pins], dtype=int)
    fixed = np.array(sorted(pins), dtype=int)
    for i in fixed:
        mean[i] = pins[i]
    if free.size == 0:
        return mean
    A_ff = cfg.A[np.ix_(free, free)]
    rho = np.abs(np.linalg.eigvals(A_ff)).max()
    if rho >= 1 - 1e-12:
        raise np.linalg.LinAlgError(
            f"free block has spectral radius {rho:.6g}; no unique fixed point (a pin must reach every node)"
        )
    rhs = cfg.A[np.ix_(free, fixed)] @ mean[fixed] if fixed.size else np.zeros(free.size)
    mean[free] = np.linalg.solve(np.eye(free.size) - A_ff, rhs)
    return mean
