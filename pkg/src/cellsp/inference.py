"""Cell inference from observed flows and sparse spectral representation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .complex import CellComplex, Skeleton, TwoCell, build_b2, hodge_laplacians, simple_cycles
from .spectral import DimensionError, eigendecompose, project_sol_harm, spectral_basis

ENERGY_GATE_REL = 1e-6
SPARSITY_REL = 1e-6


class ConvergenceError(RuntimeError):
    """Iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=None, iterations=None, coefficients=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.coefficients = coefficients


@dataclass(frozen=True, eq=False)
class InferenceResult:
    """Outcome of the minimum-curl cell selection.

    Attributes
    ----------
    q : ndarray of int, shape (P,)
        1 for filled candidates.
    d : ndarray, shape (P,)
        Curl energy of the projected observations around each candidate.
    q_star : int
        Number of filled cells (0 when the energy gate fired).
    energy_sH : float
        Energy left after removing the gradient part.
    gated : bool
        True when the projected energy fell below the threshold.
    """

    q: np.ndarray
    d: np.ndarray
    q_star: int
    energy_sH: float
    gated: bool = False

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.q)


def _as_matrix(observations, E):
    X = np.asarray(observations, dtype=float)
    if X.size == 0:
        raise DimensionError("no observations")
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != E:
        raise DimensionError(f"observations have {X.shape[0]} rows, expected {E}")
    return X


def curl_energies(x_sh: np.ndarray, candidates: Sequence[TwoCell]) -> np.ndarray:
    """Summed squared circulation of each column of ``x_sh`` around each candidate."""
    if not candidates:
        return np.zeros(0)
    C = np.column_stack([c.boundary_chain for c in candidates]).astype(float)
    return ((C.T @ x_sh) ** 2).sum(axis=1)


def infer_cells(
    observations,
    skeleton: Skeleton,
    candidates: Sequence[TwoCell],
    q_star: int,
    energy_threshold: float | None = None,
) -> InferenceResult:
    """Choose which candidate 2-cells to fill.

    Observations are first stripped of their gradient part. The ``q_star``
    candidates with the smallest curl energy are filled (stable order on
    ties). If the remaining energy is below ``energy_threshold`` nothing is
    filled.

    Parameters
    ----------
    observations : array_like, shape (E,) or (E, M)
    skeleton : Skeleton
    candidates : sequence of TwoCell
    q_star : int
    energy_threshold : float, optional
        Absolute gate. Defaults to ``1e-6`` times the total observation
        energy.
    """
    P = len(candidates)
    if q_star < 0 or q_star > P:
        raise ValueError(f"q_star={q_star} outside [0, {P}]")
    X = _as_matrix(observations, skeleton.num_edges)
    if energy_threshold is None:
        energy_threshold = ENERGY_GATE_REL * float((X**2).sum())
    if energy_threshold < 0:
        raise ValueError("energy_threshold must be nonnegative")
    xs = project_sol_harm(X, skeleton)
    energy = float((xs**2).sum())
    d = curl_energies(xs, candidates)
    q = np.zeros(P, dtype=int)
    if energy < energy_threshold:
        return InferenceResult(q, d, 0, energy, gated=True)
    q[np.argsort(d, kind="stable")[:q_star]] = 1
    return InferenceResult(q, d, q_star, energy)


def inferred_complex(skeleton: Skeleton, candidates: Sequence[TwoCell], result: InferenceResult) -> CellComplex:
    return build_b2(skeleton, [candidates[i] for i in result.selected])


@dataclass(frozen=True)
class QStarSweep:
    q_values: np.ndarray
    train_error: np.ndarray
    heldout_error: np.ndarray
    q_star: int


def sweep_q_star(
    observations,
    skeleton: Skeleton,
    candidates: Sequence[TwoCell],
    q_values: Sequence[int] | None = None,
    train_fraction: float = 0.8,
    max_error: float = 1e-2,
    seed: int | None = 0,
) -> QStarSweep:
    """Pick ``q_star`` by validation over held-out snapshots.

    Snapshots are split at random into training and held-out sets. For each
    ``q`` the cells are chosen on the training set; the held-out error is
    the curl energy those cells carry on the held-out snapshots as a share
    of the held-out (gradient-free) energy. The largest ``q`` whose held-out
    error stays within ``max_error`` is returned.
    """
    X = _as_matrix(observations, skeleton.num_edges)
    M = X.shape[1]
    if M < 2:
        raise ValueError("need at least two snapshots to validate")
    perm = np.random.default_rng(seed).permutation(M)
    n_train = min(max(1, int(round(train_fraction * M))), M - 1)
    tr, ho = X[:, np.sort(perm[:n_train])], X[:, np.sort(perm[n_train:])]
    P = len(candidates)
    qs = np.arange(P + 1) if q_values is None else np.asarray(sorted(q_values), dtype=int)
    xt = project_sol_harm(tr, skeleton)
    xh = project_sol_harm(ho, skeleton)
    d_tr = curl_energies(xt, candidates)
    d_ho = curl_energies(xh, candidates)
    e_tr = max(float((xt**2).sum()), np.finfo(float).tiny)
    e_ho = max(float((xh**2).sum()), np.finfo(float).tiny)
    order = np.argsort(d_tr, kind="stable")
    tr_err = np.array([d_tr[order[:q]].sum() / e_tr for q in qs])
    ho_err = np.array([d_ho[order[:q]].sum() / e_ho for q in qs])
    ok = qs[ho_err <= max_error]
    return QStarSweep(qs, tr_err, ho_err, int(ok.max()) if ok.size else 0)


@dataclass(frozen=True, eq=False)
class SparseRepresentation:
    """Basis-pursuit solution.

    ``sparsity`` counts entries with ``|s_i| > 1e-6 * max|s|``.
    """

    coefficients: np.ndarray
    dictionary_id: str
    epsilon: float
    sparsity: int
    residual: float
    iterations: int = 0


def sparsity_count(s: np.ndarray, rel: float = SPARSITY_REL) -> int:
    s = np.asarray(s)
    m = np.abs(s).max(initial=0.0)
    return int(np.count_nonzero(np.abs(s) > rel * m)) if m > 0 else 0


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _ball_project(w, c, r):
    d = w - c
    n = np.linalg.norm(d)
    return w if n <= r else c + d * (r / n)


def basis_pursuit(
    x,
    V,
    epsilon: float,
    dictionary_id: str = "",
    rho: float = 1.0,
    tol: float = 1e-8,
    max_iter: int = 10000,
) -> SparseRepresentation:
    """Minimize ``||s||_1`` subject to ``||x - V s|| <= epsilon``.

    Solved by ADMM on the split ``s = w`` with ``w`` constrained to the
    feasible set. For orthonormal ``V`` that set is a Euclidean ball in
    coefficient space, so every step is closed form. The problem is scaled
    to ``||x|| = 1`` before iterating so the penalty ``rho`` is
    scale-free. On exit the coefficients on the detected support are
    replaced by the exact optimum for that support and sign pattern.

    Raises
    ------
    ConvergenceError
        Tolerance not met within ``max_iter`` iterations.
    """
    x = np.asarray(x, dtype=float)
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != x.shape[0]:
        raise DimensionError(f"dictionary shape {V.shape} does not match signal length {x.shape[0]}")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    K = V.shape[1]
    if np.abs(V.T @ V - np.eye(K)).max(initial=0.0) > 1e-8:
        raise ValueError("dictionary columns are not orthonormal")

    c0 = V.T @ x
    d0 = x - V @ c0
    out0 = float(d0 @ d0)  # energy outside span(V)
    r0 = epsilon**2 - out0
    if r0 < -1e-12 * float(x @ x):
        raise ValueError("infeasible: epsilon is below the distance from x to span(V)")
    r0 = max(r0, 0.0)
    cmax = np.abs(c0).max(initial=0.0)
    if cmax == 0.0 or epsilon**2 >= x @ x:
        return SparseRepresentation(np.zeros(K), dictionary_id, float(epsilon), 0,
                                    float(np.linalg.norm(x)), 0)
    # unit shrinkage in the rescaled problem matches a uniform shrink that
    # would use up the whole radius
    scale = max(np.sqrt(r0 / K), 1e-12 * cmax)
    c = c0 / scale
    out2 = out0 / scale**2
    r2 = r0 / scale**2
    r = np.sqrt(r2)

    w = c.copy()
    u = np.zeros(K)
    s = _soft(w, 1.0 / rho)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        s = _soft(w - u, 1.0 / rho)
        w_old = w
        w = _ball_project(s + u, c, r)
        u = u + s - w
        rp = np.linalg.norm(s - w)
        rd = rho * np.linalg.norm(w - w_old)
        if rp <= tol * max(np.linalg.norm(s), np.linalg.norm(w)) and rd <= tol * rho * np.linalg.norm(u):
            converged = True
            break
    if not converged:
        res = scale * np.sqrt(max(out2 + np.sum((c - s) ** 2), 0.0))
        raise ConvergenceError(
            f"basis pursuit did not converge in {max_iter} iterations (residual {res:.3e})",
            residual=res, iterations=max_iter, coefficients=scale * s,
        )
    # polish on the detected support: over a fixed orthant the problem is
    # a linear objective on a ball, minimized by a uniform shrink
    S = s != 0
    rs2 = r2 - np.sum(c[~S] ** 2)
    if S.any() and rs2 >= 0:
        sig = np.sign(s[S])
        t = c[S] - np.sqrt(rs2 / S.sum()) * sig
        s = s.copy()
        if np.all(np.sign(t) == sig):
            s[S] = t
        elif np.sum((c - s) ** 2) > r2:
            s[S] = _ball_project(s[S], c[S], np.sqrt(rs2))
    s = scale * s
    res = float(np.linalg.norm(x - V @ s))
    return SparseRepresentation(s, dictionary_id, float(epsilon), sparsity_count(s), res, it)


def sparsity_error_curve(x, dictionaries, epsilons, **kwargs) -> list[tuple[str, float, int, float]]:
    """Sparsity and residual of basis pursuit over an epsilon grid.

    Returns rows ``(dictionary_id, epsilon, sparsity, residual)`` ordered by
    dictionary then by ascending epsilon.
    """
    eps = sorted(float(e) for e in epsilons)
    rows = []
    for did, V in dictionaries:
        for e in eps:
            rep = basis_pursuit(x, V, e, dictionary_id=did, **kwargs)
            rows.append((did, e, rep.sparsity, rep.residual))
    return rows


def best_residual_by_sparsity(rows, dictionary_id: str, max_sparsity: int) -> np.ndarray:
    """Smallest residual reached at each sparsity level ``0..max_sparsity``.

    Entry ``k`` is the best residual over grid points with sparsity ``<= k``
    (``inf`` when none).
    """
    out = np.full(max_sparsity + 1, np.inf)
    for did, _, k, res in rows:
        if did == dictionary_id and k <= max_sparsity:
            out[k] = min(out[k], res)
    return np.minimum.accumulate(out)


def line_graph_laplacian(L1_down: np.ndarray) -> np.ndarray:
    """Laplacian of the line graph, with adjacency ``|L1_down - 2 I|``."""
    A = np.abs(L1_down - 2.0 * np.eye(L1_down.shape[0]))
    return np.diag(A.sum(axis=1)) - A


def simplicial_laplacian(skeleton: Skeleton) -> np.ndarray:
    """Edge Laplacian with every triangle of the skeleton filled."""
    B1 = skeleton.B1.astype(float)
    tri = simple_cycles(skeleton, 3)
    L = B1.T @ B1
    if tri:
        B2 = np.column_stack([skeleton.chain(t) for t in tri]).astype(float)
        L = L + B2 @ B2.T
    return L


def dictionaries(cx: CellComplex) -> list[tuple[str, np.ndarray]]:
    """Eigenvector dictionaries of the four edge operators.

    ``cell`` uses the full Hodge Laplacian of ``cx``, ``simplicial`` fills
    every triangle in the skeleton, ``graph`` uses only the lower Laplacian
    and ``line`` the line-graph Laplacian.
    """
    lap = hodge_laplacians(cx)
    sk = cx.skeleton
    out = [("cell", spectral_basis(cx).eigenvectors)]
    out.append(("simplicial", eigendecompose(simplicial_laplacian(sk)).eigenvectors))
    out.append(("graph", eigendecompose(lap.L1_down).eigenvectors))
    out.append(("line", eigendecompose(line_graph_laplacian(lap.L1_down)).eigenvectors))
    return out
