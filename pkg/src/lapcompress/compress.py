"""K-sparse approximation of snapshots and energy-fraction metrics.

Basis indices are 0-based throughout.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .spectral import LaplacianBasis, components


@dataclass(frozen=True, eq=False)
class Snapshot:
    values: np.ndarray
    time_index: int = 0
    instance_id: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("snapshot values must be a 1-D vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("snapshot contains non-finite entries")
        if self.time_index < 0 or self.instance_id < 0:
            raise ValueError("time_index and instance_id must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def stack(snapshots) -> np.ndarray:
    """Stack snapshot values into an ``(m, n)`` array."""
    return np.vstack([np.asarray(getattr(s, "values", s), dtype=float) for s in snapshots])


@dataclass(frozen=True)
class SparseApprox:
    n: int
    retained: tuple[tuple[int, float], ...]
    energy_fraction: float
    refit_energy_fraction: float | None = None

    @property
    def K(self) -> int:
        return len(self.retained)

    def component_vector(self) -> np.ndarray:
        s = np.zeros(self.n)
        for i, v in self.retained:
            s[i] = v
        return s


def _values(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


def energy_fraction(x, x_approx) -> float:
    """``1 - |x - x_approx|^2 / |x|^2``."""
    x = _values(x)
    xa = np.asarray(x_approx, dtype=float)
    if x.shape != xa.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {xa.shape}")
    energy = float(x @ x)
    if energy == 0.0:
        raise ValueError("energy fraction is undefined for a zero snapshot")
    r = x - xa
    return 1.0 - float(r @ r) / energy


def top_k_indices(s: np.ndarray, K: int) -> np.ndarray:
    """Indices of the ``K`` largest-magnitude entries along the last axis.

    Ties go to the lower index (stable sort).
    """
    return np.argsort(-np.abs(s), axis=-1, kind="stable")[..., :K]


def k_sparse(basis: LaplacianBasis, x, K: int, refit: bool = False) -> SparseApprox:
    """Keep the ``K`` largest-magnitude basis components of ``x``.

    Optimal for orthonormal bases. With ``refit=True`` the retained columns are
    also least-squares fitted to ``x`` and that fraction is reported alongside.
    """
    xv = _values(x)
    if not 1 <= K <= basis.n:
        raise ValueError(f"K must lie in [1, {basis.n}], got {K}")
    if not np.any(xv):
        raise ValueError("cannot approximate a zero snapshot")
    s = components(basis, xv)
    idx = np.sort(top_k_indices(s, K))
    sbar = np.zeros_like(s)
    sbar[idx] = s[idx]
    f = energy_fraction(xv, basis.V @ sbar)
    f_refit = None
    if refit:
        cols = basis.V[:, idx]
        coef, *_ = np.linalg.lstsq(cols, xv, rcond=None)
        f_refit = energy_fraction(xv, cols @ coef)
    order = top_k_indices(s, K)
    retained = tuple((int(i), float(s[i])) for i in order)
    return SparseApprox(basis.n, retained, f, f_refit)


def reconstruct(basis: LaplacianBasis, approx: SparseApprox) -> np.ndarray:
    if approx.n != basis.n:
        raise ValueError(f"approximation has dimension {approx.n}, basis {basis.n}")
    return basis.V @ approx.component_vector()


def round_to_binary(x_approx) -> np.ndarray:
    """Threshold at 0.5; the tie maps to 1."""
    return (np.asarray(x_approx, dtype=float) >= 0.5).astype(int)


def match_fraction(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(a == b))


@dataclass(frozen=True, eq=False)
class EnergyCurve:
    """Energy fractions for every (snapshot, K) pair.

    ``F[i, j]`` is the fraction for ``instance_ids[i]`` at ``K_values[j]``.
    ``match`` (optional) holds the rounded-reconstruction match fractions on
    the same grid.
    """

    instance_ids: tuple[int, ...]
    time_indices: tuple[int, ...]
    K_values: tuple[int, ...]
    F: np.ndarray
    match: np.ndarray | None = None
    F_refit: np.ndarray | None = None

    @property
    def mean(self) -> np.ndarray:
        return self.F.mean(axis=0)

    def rows(self):
        for i, inst in enumerate(self.instance_ids):
            for j, K in enumerate(self.K_values):
                yield inst, K, float(self.F[i, j])

    def to_csv(self, key: str = "instance_id", include_mean: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = [key, "K", "energy_fraction"]
        if self.match is not None:
            header.append("match_fraction")
        w.writerow(header)
        ids = self.time_indices if key == "day" else self.instance_ids
        for i, inst in enumerate(ids):
            for j, K in enumerate(self.K_values):
                row = [inst, K, repr(float(self.F[i, j]))]
                if self.match is not None:
                    row.append(repr(float(self.match[i, j])))
                w.writerow(row)
        if include_mean:
            mean_match = None if self.match is None else self.match.mean(axis=0)
            for j, K in enumerate(self.K_values):
                row = [-1, K, repr(float(self.mean[j]))]
                if mean_match is not None:
                    row.append(repr(float(mean_match[j])))
                w.writerow(row)
        return buf.getvalue()

    def mean_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["K", "mean_energy_fraction"])
        for j, K in enumerate(self.K_values):
            w.writerow([K, repr(float(self.mean[j]))])
        return buf.getvalue()


def energy_curve(
    basis: LaplacianBasis, snapshots, K_values, binary_match: bool = False, refit: bool = False
) -> EnergyCurve:
    """Energy fraction of the magnitude-heuristic K-sparse approximation over a K grid.

    Equivalent to calling :func:`k_sparse` per (snapshot, K) but evaluated in
    batches. With ``binary_match`` the rounded reconstructions are compared
    against the (binary) snapshots as well; ``refit`` adds the least-squares
    refit fractions.
    """
    snapshots = list(snapshots)
    K_values = tuple(int(k) for k in K_values)
    if not snapshots or not K_values:
        raise ValueError("energy_curve needs at least one snapshot and one K")
    for K in K_values:
        if not 1 <= K <= basis.n:
            raise ValueError(f"K must lie in [1, {basis.n}], got {K}")
    X = stack(snapshots)
    energy = np.einsum("ij,ij->i", X, X)
    if np.any(energy == 0):
        bad = int(np.flatnonzero(energy == 0)[0])
        raise ValueError(f"cannot approximate a zero snapshot (position {bad})")
    S = components(basis, X)
    order = top_k_indices(S, basis.n)
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.arange(basis.n)[None, :].repeat(len(X), 0), axis=1)
    F = np.empty((len(X), len(K_values)))
    match = np.empty_like(F) if binary_match else None
    for j, K in enumerate(K_values):
        Sbar = np.where(rank < K, S, 0.0)
        Xa = Sbar @ basis.V.T
        R = X - Xa
        F[:, j] = 1.0 - np.einsum("ij,ij->i", R, R) / energy
        if binary_match:
            match[:, j] = np.mean(round_to_binary(Xa) == np.rint(X), axis=1)
    F_refit = None
    if refit:
        F_refit = np.array([[k_sparse(basis, x, K, refit=True).refit_energy_fraction for K in K_values]
                            for x in X])
    F.setflags(write=False)
    return EnergyCurve(
        tuple(int(getattr(s, "instance_id", i)) for i, s in enumerate(snapshots)),
        tuple(int(getattr(s, "time_index", 0)) for s in snapshots),
        K_values,
        F,
        match,
        F_refit,
    )


def dominant_basis_table(basis: LaplacianBasis, x, top: int):
    """The ``top`` largest-magnitude components as ``(index, eigenvalue, component)``."""
    if not 1 <= top <= basis.n:
        raise ValueError(f"top must lie in [1, {basis.n}], got {top}")
    s = components(basis, x)
    return [(int(i), float(basis.eigenvalues[i]), float(s[i])) for i in top_k_indices(s, top)]


def dominant_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "basis_index", "eigenvalue", "component"])
    for r, (i, lam, c) in enumerate(table, start=1):
        w.writerow([r, i, repr(lam), repr(c)])
    return buf.getvalue()
