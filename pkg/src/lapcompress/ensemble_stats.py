"""Closed-form second moments of the consensus components and the whitening basis.

For the driven consensus model the components ``s[k] = W x[k]`` obey
``s[k+1] = diag(1 - lambda) s[k] + h u[k]`` with ``h = W e_z``, so their second
moment is ``Sigma = Q C Q`` with ``Q = diag(h)`` and ``C`` a matrix of
geometric sums of ``(1 - lambda_i)(1 - lambda_j)``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import LaplacianBasis

CUMULATIVE_TARGETS = (0.89, 0.99, 0.999)
D_FLOOR = 1e-14


class RegimeError(ValueError):
    """The basis is outside the regime where the closed form applies."""


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    k: int
    z: int
    q: np.ndarray
    C: np.ndarray
    Sigma: np.ndarray
    exact: bool
    orthonormal: bool

    @property
    def Q(self) -> np.ndarray:
        return np.diag(self.q)


def _check_regime(basis: LaplacianBasis, require_simple: bool) -> np.ndarray:
    lam = np.asarray(basis.eigenvalues, dtype=float)
    if not basis.is_real:
        raise RegimeError("outside Theorem 1 regime: Laplacian has complex eigenvalues")
    if basis.n > 1 and lam[1] <= 1e-10:
        raise RegimeError("outside Theorem 1 regime: zero eigenvalue is repeated (graph not strongly connected)")
    if lam[-1] >= 2.0:
        raise RegimeError(f"outside Theorem 1 regime: eigenvalue {lam[-1]:.6g} >= 2")
    if require_simple and basis.n > 1 and np.diff(lam).min() <= 1e-10:
        raise RegimeError("outside Theorem 1 regime: repeated eigenvalues")
    return lam


def theorem1_sigma(
    basis: LaplacianBasis, z: int, k: int, exact: bool = False, require_simple: bool = False
) -> EnsembleStats:
    """Second moment of ``s[k]`` for input at node ``z`` after ``k`` steps.

    The default is the large-``k`` form: ``c_11 = k``, ``c_1j = 1/lambda_j``,
    ``c_ij = 1 / (1 - (1-lambda_i)(1-lambda_j))``. ``exact=True`` uses the
    finite-``k`` geometric sums instead.

    Repeated nonzero eigenvalues are accepted unless ``require_simple``: the
    formula only needs a real diagonalising basis.
    """
    if not 0 <= z < basis.n:
        raise ValueError(f"z must lie in [0, {basis.n}), got {z}")
    if k < 1:
        raise ValueError("k must be positive")
    lam = _check_regime(basis, require_simple)
    mu = 1.0 - lam[1:]
    prod = np.outer(mu, mu)
    n = basis.n
    C = np.empty((n, n))
    C[0, 0] = k
    if exact:
        C[0, 1:] = (1.0 - mu**k) / lam[1:]
        C[1:, 1:] = (1.0 - prod**k) / (1.0 - prod)
    else:
        C[0, 1:] = 1.0 / lam[1:]
        C[1:, 1:] = 1.0 / (1.0 - prod)
    C[1:, 0] = C[0, 1:]
    q = np.array(basis.W[:, z])
    sigma = q[:, None] * C * q[None, :]
    for a in (q, C, sigma):
        a.setflags(write=False)
    return EnsembleStats(int(k), int(z), q, C, sigma, exact, basis.orthonormal)


def corollary_lower_bound(stats: EnsembleStats, K: int) -> float:
    """Sum of the ``K`` largest diagonal entries of Sigma.

    Lower-bounds the expected energy of the optimal K-sparse approximation when
    the basis is orthonormal.
    """
    d = np.diag(stats.Sigma)
    if not 1 <= K <= d.size:
        raise ValueError(f"K must lie in [1, {d.size}], got {K}")
    if not stats.orthonormal:
        warnings.warn("corollary bound assumes an orthonormal (symmetric Laplacian) basis", stacklevel=2)
    order = np.argsort(-d, kind="stable")[:K]
    return float(d[order].sum())


@dataclass(frozen=True, eq=False)
class WhiteningBasis:
    """``Phi = V V_star`` with ``V_star`` the eigenvectors of Sigma.

    Components ``r = Phi^-1 x = V_star^T W x`` have second moment ``diag(D)``.
    """

    Phi: np.ndarray
    D: np.ndarray
    V_star: np.ndarray
    W: np.ndarray

    def components(self, x) -> np.ndarray:
        arr = np.asarray(getattr(x, "values", x), dtype=float)
        return (arr @ self.W.T) @ self.V_star


def whitening_basis(basis: LaplacianBasis, stats: EnsembleStats) -> WhiteningBasis:
    sigma = stats.Sigma
    scale = max(np.abs(sigma).max(), 1e-300)
    if np.abs(sigma - sigma.T).max() > 1e-10 * scale:
        raise np.linalg.LinAlgError("whitening needs a symmetric second-moment matrix")
    d, vs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    order = np.argsort(-d, kind="stable")
    d, vs = d[order], vs[:, order]
    d = np.where(d < D_FLOOR * d[0], 0.0, d)
    phi = basis.V @ vs
    for j in range(phi.shape[1]):
        i = int(np.argmax(np.abs(phi[:, j])))
        if phi[i, j] < 0:
            phi[:, j] *= -1
            vs[:, j] *= -1
    for a in (phi, d, vs):
        a.setflags(write=False)
    return WhiteningBasis(phi, d, vs, basis.W)


@dataclass(frozen=True)
class DecayProfile:
    ratios: tuple[float, ...]
    components_for: dict

    def to_json(self, k: int | None = None, z: int | None = None) -> str:
        doc = {
            "k": k,
            "z": z,
            "components_for_89pct": self.components_for[0.89],
            "components_for_99pct": self.components_for[0.99],
            "components_for_99.9pct": self.components_for[0.999],
            "decay_ratios": list(self.ratios),
        }
        return json.dumps(doc, indent=2) + "\n"


def components_for_fraction(D, target: float) -> int:
    """Smallest count of leading variances whose share reaches ``target``."""
    D = np.asarray(D, dtype=float)
    frac = np.cumsum(D) / D.sum()
    return int(np.searchsorted(frac, target - 1e-12) + 1)


def variance_decay_profile(wb: WhiteningBasis | np.ndarray) -> DecayProfile:
    D = np.asarray(getattr(wb, "D", wb), dtype=float)
    if np.any(np.diff(D) > 0):
        raise ValueError("variances must be sorted in descending order")
    live = D[D > D_FLOOR * D[0]] if D[0] > 0 else D[:0]
    ratios = tuple(float(r) for r in live[1:] / live[:-1])
    counts = {t: components_for_fraction(D, t) for t in CUMULATIVE_TARGETS}
    return DecayProfile(ratios, counts)
