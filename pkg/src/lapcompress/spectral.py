"""Laplacian-eigenvector basis with deterministic ordering and signs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .graph import check_laplacian

SYMMETRIC_TOL = 1e-12
MAX_CONDITION = 1e12


class EigenbasisError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class LaplacianBasis:
    """Realified right eigenvectors ``V`` (columns) and ``W = V^-1``.

    ``eigenvalues`` holds real parts; ``eigenvalues_imag`` is nonzero only for
    columns from a complex-conjugate pair, which are also flagged in ``pair``.
    The real-part column of a pair comes first, the imaginary part second.
    """

    eigenvalues: np.ndarray
    eigenvalues_imag: np.ndarray
    pair: np.ndarray
    V: np.ndarray
    W: np.ndarray
    orthonormal: bool

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def is_real(self) -> bool:
        return not self.pair.any()


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _reversible_weights(lap: np.ndarray) -> np.ndarray | None:
    """Positive ``pi`` with ``pi_i L_ij = pi_j L_ji`` if one exists, else None."""
    n = lap.shape[0]
    # left null vector of L, normalised to sum 1
    aug = np.vstack([lap.T, np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
    if not np.all(pi > 1e-14 * np.abs(pi).max()):
        return None
    flux = pi[:, None] * lap
    if np.abs(flux - flux.T).max() > 1e-10 * np.abs(flux).max():
        return None
    return pi


def eigenbasis(lap) -> LaplacianBasis:
    """Eigendecompose a Laplacian into a real basis sorted by eigenvalue.

    Symmetric Laplacians use a symmetric solver and give an orthonormal ``V``.
    Laplacians satisfying detailed balance are solved through the similar
    symmetric matrix ``P^1/2 L P^-1/2``; everything else goes through the
    general nonsymmetric solver with conjugate pairs split into real and
    imaginary columns.
    """
    lap = np.array(lap, dtype=float)
    check_laplacian(lap)
    n = lap.shape[0]
    scale = max(np.abs(lap).max(), 1.0)

    if np.abs(lap - lap.T).max() <= SYMMETRIC_TOL * scale:
        lam, vecs = np.linalg.eigh(0.5 * (lap + lap.T))
        imag = np.zeros(n)
        pair = np.zeros(n, dtype=bool)
        orthonormal = True
    else:
        orthonormal = False
        pi = _reversible_weights(lap)
        if pi is not None:
            root = np.sqrt(pi)
            sym = root[:, None] * lap / root[None, :]
            lam, u = np.linalg.eigh(0.5 * (sym + sym.T))
            vecs = u / root[:, None]
            imag = np.zeros(n)
            pair = np.zeros(n, dtype=bool)
        else:
            lam, vecs, imag, pair = _general_eig(lap)

    order = np.lexsort((np.arange(n), np.abs(imag), lam))
    lam, imag, pair, vecs = lam[order], imag[order], pair[order], vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    for j in range(n):
        vecs[:, j] = _fix_sign(vecs[:, j])
    lam[np.abs(lam) <= 1e-12 * scale] = 0.0

    if lam[0] < -1e-8 or abs(lam[0]) > 1e-8:
        raise EigenbasisError(f"smallest Laplacian eigenvalue {lam[0]:.3g} is not zero")
    cond = np.linalg.cond(vecs)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise EigenbasisError(f"defective or ill-conditioned eigenbasis (condition {cond:.3g})")
    inv = np.linalg.inv(vecs)
    return LaplacianBasis(
        _frozen(lam), _frozen(imag), _frozen(pair), _frozen(vecs), _frozen(inv), orthonormal
    )


def _general_eig(lap: np.ndarray):
    n = lap.shape[0]
    try:
        lam_c, vec_c = np.linalg.eig(lap)
    except np.linalg.LinAlgError as exc:
        raise EigenbasisError(f"eigensolver failed: {exc}") from exc
    scale = max(np.abs(lap).max(), 1.0)
    lam = np.empty(n)
    imag = np.empty(n)
    pair = np.zeros(n, dtype=bool)
    vecs = np.empty((n, n))
    used = np.zeros(n, dtype=bool)
    j = 0
    for i in range(n):
        if used[i]:
            continue
        used[i] = True
        if abs(lam_c[i].imag) <= 1e-12 * scale:
            lam[j], imag[j] = lam_c[i].real, 0.0
            vecs[:, j] = vec_c[:, i].real
            j += 1
            continue
        # partner is the conjugate with the closest value
        cand = np.flatnonzero(~used)
        partner = cand[np.argmin(np.abs(lam_c[cand] - np.conj(lam_c[i])))]
        used[partner] = True
        v = vec_c[:, i] if lam_c[i].imag > 0 else vec_c[:, partner]
        # rotate so the largest entry is real positive; makes the split unique
        k = int(np.argmax(np.abs(v)))
        v = v * np.exp(-1j * np.angle(v[k]))
        mu = lam_c[i] if lam_c[i].imag > 0 else lam_c[partner]
        lam[j:j + 2] = mu.real
        imag[j], imag[j + 1] = mu.imag, -mu.imag
        pair[j:j + 2] = True
        vecs[:, j] = v.real
        vecs[:, j + 1] = v.imag
        j += 2
    if np.linalg.norm(vecs, axis=0).min() == 0:
        raise EigenbasisError("defective or ill-conditioned eigenbasis (zero column)")
    return lam, vecs, imag, pair


def components(basis: LaplacianBasis, x) -> np.ndarray:
    """Coordinates ``s = W x`` of a snapshot (or stacked rows of snapshots)."""
    values = getattr(x, "values", x)
    arr = np.asarray(values, dtype=float)
    if arr.shape[-1] != basis.n:
        raise ValueError(f"snapshot has length {arr.shape[-1]}, basis has dimension {basis.n}")
    return arr @ basis.W.T


def eigenvalue_csv(basis: LaplacianBasis) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "eigenvalue_real", "eigenvalue_imag", "pair_flag"])
    for i in range(basis.n):
        w.writerow([i, repr(float(basis.eigenvalues[i])), repr(float(basis.eigenvalues_imag[i])),
                    int(basis.pair[i])])
    return buf.getvalue()


def matrix_csv(m: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(m).tolist():
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
