"""Eigenbases of Hodge Laplacians, the cell-complex Fourier transform, and the
Hodge decomposition of edge signals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complex import CellComplex, Skeleton, hodge_laplacians

ZERO_TOL = 1e-8
CLASS_TOL = 1e-8
CLUSTER_RTOL = 1e-7
HARMONIC, IRROTATIONAL, SOLENOIDAL = "harmonic", "irrotational", "solenoidal"


class NotSymmetricError(ValueError):
    pass


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenpairs of an edge Laplacian with Hodge-class labels.

    Attributes
    ----------
    eigenvalues : ndarray, shape (E,)
        Ascending, nonnegative.
    eigenvectors : ndarray, shape (E, E)
        Orthonormal columns; the largest-magnitude entry of each is positive.
    class_of : tuple of str
        ``harmonic``, ``irrotational`` or ``solenoidal`` per index.
    zero_tol : float
        Relative cutoff for harmonic indices.
    shared_eigenvalues : tuple of float
        Nonzero eigenvalues whose eigenspace mixes both nonzero classes.
    ambiguous : tuple of int
        Indices whose residual test was inconclusive (labelled by the smaller
        residual).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    class_of: tuple[str, ...]
    zero_tol: float = ZERO_TOL
    shared_eigenvalues: tuple[float, ...] = ()
    ambiguous: tuple[int, ...] = ()

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1]) if len(self.eigenvalues) else 0.0

    def indices(self, cls: str) -> np.ndarray:
        return np.array([i for i, c in enumerate(self.class_of) if c == cls], dtype=int)

    def vectors(self, cls: str) -> np.ndarray:
        return self.eigenvectors[:, self.indices(cls)]

    def values(self, cls: str) -> np.ndarray:
        return self.eigenvalues[self.indices(cls)]


@dataclass(frozen=True, eq=False)
class HodgeComponents:
    irrotational: np.ndarray
    solenoidal: np.ndarray
    harmonic: np.ndarray

    def total(self) -> np.ndarray:
        return self.irrotational + self.solenoidal + self.harmonic


def _check_symmetric(L):
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {L.shape}")
    scale = max(1.0, float(np.abs(L).max(initial=0.0)))
    if np.abs(L - L.T).max(initial=0.0) > 1e-10 * scale:
        raise NotSymmetricError("matrix is not symmetric")
    return 0.5 * (L + L.T)


def group_values(values: np.ndarray, rtol: float = CLUSTER_RTOL) -> list[np.ndarray]:
    """Split ascending ``values`` into runs whose consecutive gaps are small.

    Gaps are measured relative to the largest magnitude in ``values``.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    scale = max(np.abs(values).max(), np.finfo(float).tiny)
    cuts = np.flatnonzero(np.diff(values) > rtol * scale) + 1
    return np.split(np.arange(values.size), cuts)


def _fix_signs(U):
    idx = np.argmax(np.abs(U), axis=0)
    s = np.sign(U[idx, np.arange(U.shape[1])])
    s[s == 0] = 1.0
    return U * s


def eigendecompose(L, L_down=None, L_up=None, zero_tol: float = ZERO_TOL) -> SpectralBasis:
    """Eigendecomposition of a symmetric PSD Laplacian.

    When ``L_down`` and ``L_up`` are given the nonzero eigenvectors are
    labelled irrotational or solenoidal by their residual against each
    part. Inside a cluster of repeated eigenvalues the eigenvectors are
    re-diagonalized against ``L_up``, which separates the two families when
    an eigenvalue is shared between them.

    Parameters
    ----------
    L : array_like, shape (E, E)
    L_down, L_up : array_like, optional
    zero_tol : float
        Eigenvalues below ``zero_tol * lambda_max`` are harmonic.

    Raises
    ------
    NotSymmetricError
    """
    L = _check_symmetric(L)
    lam, U = np.linalg.eigh(L)
    lam = np.maximum(lam, 0.0)
    lmax = lam[-1] if lam.size else 0.0
    harm = lam < zero_tol * lmax if lmax > 0 else np.ones(lam.size, dtype=bool)
    lam[harm] = 0.0
    have_parts = L_down is not None and L_up is not None
    if have_parts:
        Ld = np.asarray(L_down, dtype=float)
        Lu = np.asarray(L_up, dtype=float)
        nz = np.flatnonzero(~harm)
        for grp in group_values(lam[nz]):
            if grp.size < 2:
                continue
            cols = nz[grp]
            Uc = U[:, cols]
            _, W = np.linalg.eigh(Uc.T @ Lu @ Uc)
            U[:, cols] = Uc @ W
    U = _fix_signs(U)

    labels = [HARMONIC] * lam.size
    ambiguous, shared = [], []
    if have_parts:
        tol = CLASS_TOL * lmax
        for i in np.flatnonzero(~harm):
            r_up = np.linalg.norm(Lu @ U[:, i])
            r_down = np.linalg.norm(Ld @ U[:, i])
            if r_up < tol and r_down >= tol:
                labels[i] = IRROTATIONAL
            elif r_down < tol and r_up >= tol:
                labels[i] = SOLENOIDAL
            else:
                labels[i] = IRROTATIONAL if r_up <= r_down else SOLENOIDAL
                ambiguous.append(int(i))
        nz = np.flatnonzero(~harm)
        for grp in group_values(lam[nz]):
            kinds = {labels[i] for i in nz[grp]}
            if len(kinds) > 1:
                shared.append(float(lam[nz[grp]].mean()))
    else:
        labels = [HARMONIC if h else "nonzero" for h in harm]
    return SpectralBasis(lam, U, tuple(labels), zero_tol, tuple(shared), tuple(ambiguous))


def spectral_basis(cx: CellComplex, zero_tol: float = ZERO_TOL) -> SpectralBasis:
    """Labelled eigenbasis of the Hodge Laplacian of ``cx``."""
    lap = hodge_laplacians(cx)
    return eigendecompose(lap.L1, lap.L1_down, lap.L1_up, zero_tol)


def _check_len(v, n, what="signal"):
    v = np.asarray(v, dtype=float)
    if v.shape[0] != n:
        raise DimensionError(f"{what} has length {v.shape[0]}, expected {n}")
    return v


def cft(signal, basis: SpectralBasis) -> np.ndarray:
    """Fourier coefficients ``U^T s``; columns of a 2-D input are separate signals."""
    s = _check_len(signal, basis.eigenvectors.shape[0])
    return basis.eigenvectors.T @ s


def inverse_cft(coeffs, basis: SpectralBasis) -> np.ndarray:
    c = _check_len(coeffs, basis.eigenvectors.shape[1], "coefficient vector")
    return basis.eigenvectors @ c


def _project(A, x):
    """Orthogonal projection of ``x`` onto the column span of ``A``."""
    if A.shape[1] == 0:
        return np.zeros_like(x)
    coef, *_ = np.linalg.lstsq(A, x, rcond=None)
    return A @ coef


def hodge_decompose(signal, cx: CellComplex) -> HodgeComponents:
    """Split an edge signal into gradient, curl and harmonic parts.

    The gradient part is the least-squares projection onto the span of
    ``B1^T``, the curl part the projection onto the span of ``B2``; the two
    spans are orthogonal so the remainder is harmonic.
    """
    s = _check_len(signal, cx.skeleton.num_edges)
    irr = _project(cx.B1.T.astype(float), s)
    sol = _project(cx.B2.astype(float), s)
    return HodgeComponents(irr, sol, s - irr - sol)


def project_sol_harm(observations, skeleton: Skeleton) -> np.ndarray:
    """Remove the gradient component from each observation.

    ``observations`` is either one length-E signal or an E x M matrix.
    """
    X = np.asarray(observations, dtype=float)
    if X.size == 0:
        raise DimensionError("no observations")
    X = _check_len(X, skeleton.num_edges, "observation")
    return X - _project(skeleton.B1.T.astype(float), X)
