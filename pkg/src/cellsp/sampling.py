"""Sampling and reconstruction of bandlimited edge signals."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .spectral import DimensionError, SpectralBasis, cft

RANK_TOL = 1e-10


class SingularPlanError(ValueError):
    """The selected samples do not determine the band."""


@dataclass(frozen=True, eq=False)
class SamplingPlan:
    """Frequency band, sampled edges and the restricted dictionary.

    ``S`` lists edges in the order they were chosen, so a prefix of ``S``
    is the plan the greedy rule would return for fewer samples.
    """

    F: np.ndarray
    S: np.ndarray
    V_F: np.ndarray
    det_score: float

    def gram(self) -> np.ndarray:
        VS = self.V_F[self.S]
        return VS.T @ VS


def select_band(signal, basis: SpectralBasis, bandwidth: int) -> np.ndarray:
    """Indices of the ``bandwidth`` largest-magnitude Fourier coefficients, ascending."""
    E = basis.eigenvectors.shape[1]
    if not 1 <= bandwidth <= E:
        raise ValueError(f"bandwidth must be in [1, {E}]")
    c = np.abs(cft(signal, basis))
    order = np.argsort(-c, kind="stable")
    return np.sort(order[:bandwidth])


def log_volume(V_S: np.ndarray, tol: float = RANK_TOL) -> tuple[int, float]:
    """Rank and log pseudo-determinant of ``V_S^T V_S``."""
    if V_S.shape[0] == 0:
        return 0, 0.0
    s = np.linalg.svd(V_S, compute_uv=False)
    keep = s > tol * max(s[0], 1.0) if s.size else s > 0
    return int(keep.sum()), float(2 * np.log(s[keep]).sum())


def select_edges_maxdet(V_F, num_samples: int, tol: float = RANK_TOL) -> tuple[np.ndarray, float]:
    """Greedy volume maximization over rows of ``V_F``.

    While the selection spans fewer than ``|F|`` dimensions only
    rank-increasing rows compete, scored by their squared distance to the
    span of the rows already chosen (the factor by which the
    pseudo-determinant grows). Afterwards rows are scored by
    ``1 + v^T G^{-1} v`` (matrix determinant lemma). Ties go to the lowest
    index.

    Returns
    -------
    S : ndarray
        Chosen edges in selection order.
    det_score : float
        ``log det(V_F^T D_S V_F)``.

    Raises
    ------
    SingularPlanError
        The normal matrix is still singular after ``num_samples`` picks.
    """
    V = np.asarray(V_F, dtype=float)
    E, K = V.shape
    if num_samples < K:
        raise ValueError(f"need at least |F| = {K} samples, got {num_samples}")
    if num_samples > E:
        raise ValueError(f"cannot pick {num_samples} of {E} edges")
    avail = np.ones(E, dtype=bool)
    chosen = []
    resid = V.copy()  # rows projected off the span of the chosen rows
    logdet = 0.0
    rank = 0
    rowscale = max(float(np.max(np.sum(V**2, axis=1))), np.finfo(float).tiny)
    Ginv = None
    for _ in range(num_samples):
        if rank < K:
            d = np.sum(resid**2, axis=1)
            d[~avail] = -np.inf
            j = int(np.argmax(d))
            if d[j] > tol * rowscale:
                q = resid[j] / np.sqrt(d[j])
                resid = resid - np.outer(resid @ q, q)
                logdet += np.log(d[j])
                rank += 1
                if rank == K:
                    VS = V[chosen + [j]]
                    Ginv = np.linalg.inv(VS.T @ VS)
            else:
                # nothing adds a dimension: grow the pseudo-determinant instead
                j = _best_in_span(V, chosen, avail)
            chosen.append(j)
            avail[j] = False
            continue
        score = np.einsum("ij,jk,ik->i", V, Ginv, V)
        score[~avail] = -np.inf
        j = int(np.argmax(score))
        v = V[j]
        Gv = Ginv @ v
        logdet += np.log1p(v @ Gv)
        Ginv = Ginv - np.outer(Gv, Gv) / (1.0 + v @ Gv)
        chosen.append(j)
        avail[j] = False
    if rank < K:
        raise SingularPlanError(f"selected rows span {rank} of {K} band dimensions")
    S = np.array(chosen, dtype=int)
    VS = V[S]
    return S, float(np.linalg.slogdet(VS.T @ VS)[1])


def _best_in_span(V, chosen, avail):
    best, arg = -np.inf, int(np.flatnonzero(avail)[0])
    for j in np.flatnonzero(avail):
        _, lv = log_volume(V[chosen + [int(j)]])
        if lv > best:
            best, arg = lv, int(j)
    return arg


def select_edges_exhaustive(V_F, num_samples: int, max_edges: int = 20) -> tuple[np.ndarray, float]:
    """Subset maximizing (rank, log pseudo-determinant) by enumeration.

    Only for small problems (``E <= max_edges``). Ties go to the
    lexicographically smallest subset.
    """
    V = np.asarray(V_F, dtype=float)
    E = V.shape[0]
    if E > max_edges:
        raise ValueError(f"exhaustive search limited to {max_edges} edges")
    best_key, best_S = None, None
    for S in combinations(range(E), num_samples):
        key = log_volume(V[list(S)])
        if best_key is None or key[0] > best_key[0] or (key[0] == best_key[0] and key[1] > best_key[1] + 1e-12):
            best_key, best_S = key, S
    return np.array(best_S, dtype=int), best_key[1]


def make_plan(basis_or_V, F, num_samples: int) -> SamplingPlan:
    """Greedy Max-Det plan for the band ``F`` of a basis (or dictionary matrix)."""
    U = basis_or_V.eigenvectors if isinstance(basis_or_V, SpectralBasis) else np.asarray(basis_or_V, dtype=float)
    F = np.asarray(F, dtype=int)
    V_F = U[:, F]
    S, score = select_edges_maxdet(V_F, num_samples)
    return SamplingPlan(F, S, V_F, score)


def recover(samples, plan: SamplingPlan) -> np.ndarray:
    """Reconstruct the full edge signal from values on ``plan.S``.

    ``samples[i]`` is the value observed on edge ``plan.S[i]``.
    """
    y = np.asarray(samples, dtype=float)
    if y.shape[0] != len(plan.S):
        raise DimensionError(f"expected {len(plan.S)} samples, got {y.shape[0]}")
    VS = plan.V_F[plan.S]
    G = VS.T @ VS
    if np.linalg.matrix_rank(G) < G.shape[0]:
        raise SingularPlanError("normal matrix is singular")
    return plan.V_F @ np.linalg.solve(G, VS.T @ y)


def noise_mse(plan: SamplingPlan, noise_var: float) -> float:
    """Expected squared reconstruction error for i.i.d. sample noise."""
    return float(noise_var * np.trace(np.linalg.inv(plan.gram())))


def symmetrize_flows(flows: dict[tuple[int, int], float]) -> dict[tuple[int, int], float]:
    """Average the two directions of each link: ``(f_ij + f_ji) / 2``.

    Keys are returned with ``i < j``; a direction absent from the input
    counts as zero flow.
    """
    out: dict[tuple[int, int], float] = {}
    for (i, j), f in flows.items():
        if i == j:
            raise ValueError(f"self-loop flow at node {i}")
        key = (i, j) if i < j else (j, i)
        out[key] = out.get(key, 0.0) + 0.5 * float(f)
    return out
