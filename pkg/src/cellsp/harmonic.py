"""Sparse harmonic representatives by distributed subgradient descent.

Given a noisy edge observation ``x``, the solver looks for a harmonic signal
``s_H`` close to ``x`` whose equivalent ``z = s_H + B2 s2`` (same harmonic
class, shifted by a curl flow) is as sparse as possible. The harmonic
constraint is enforced by a quadratic penalty whose weight grows as the
step size shrinks.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from . import _backend
from .complex import CellComplex, hodge_laplacians
from .generators import harmonic_signal
from .spectral import spectral_basis, HARMONIC

_STATUS = {0: "max_iters", 1: "stalled", 2: "diverged"}


class DivergenceError(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class HarmonicConfig:
    """Solver settings.

    Attributes
    ----------
    gamma : float
        Weight of the sparsity term.
    step_a : float
        Step-size scale; step ``k`` uses ``step_a / sqrt(k)`` (and ``step_a``
        at ``k = 0``).
    epsilon_w : float, optional
        Diffusion step of the harmonic penalty, in ``(0, 2 / lambda_max)``.
        Defaults to ``1 / lambda_max``.
    max_iters : int
    seed : int
        Seed of the uniform ``[0, 1)`` initialization.
    tol_stop : float
        Stop when the best objective improves by less than this relative
        amount over ``window`` iterations.
    window : int
    divergence_limit : float
    """

    gamma: float = 50.0
    step_a: float = 1.5e-3
    epsilon_w: float | None = None
    max_iters: int = 200_000
    seed: int = 0
    tol_stop: float = 1e-9
    window: int = 1000
    divergence_limit: float = 1e12

    def validate(self, lambda_max: float) -> "HarmonicConfig":
        """Return a copy with ``epsilon_w`` resolved, checking every range."""
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.step_a <= 0:
            raise ValueError("step_a must be positive")
        if self.max_iters < 1 or self.window < 1:
            raise ValueError("max_iters and window must be positive")
        eps = self.epsilon_w
        if lambda_max <= 0:
            eps = 1.0 if eps is None else eps
        else:
            eps = 1.0 / lambda_max if eps is None else eps
            if not 0 < eps < 2.0 / lambda_max:
                raise ValueError(f"epsilon_w must lie in (0, {2.0 / lambda_max:.6g})")
        return replace(self, epsilon_w=float(eps))


@dataclass(frozen=True, eq=False)
class HarmonicResult:
    """Best iterate of the harmonic solver.

    ``objective_trace[k]`` is the penalized objective at iterate ``k``
    (penalty weight ``epsilon_w / (2 mu_k)``). Because that weight grows
    with ``k``, the best iterate can trail the last one; the state after
    the final step is kept in ``final_s_H`` and ``final_s2``.
    """

    s_H: np.ndarray
    s2: np.ndarray
    z: np.ndarray
    objective_trace: np.ndarray
    harmonic_residual: float
    best_iteration: int
    iterations: int
    status: str
    config: HarmonicConfig
    final_s_H: np.ndarray | None = None
    final_s2: np.ndarray | None = None

    @property
    def best_objective(self) -> float:
        return float(self.objective_trace[self.best_iteration])


def _operators(cx: CellComplex):
    lap = hodge_laplacians(cx)
    B2 = sp.csr_matrix(cx.B2.astype(float))
    return lap, sp.csr_matrix(lap.L1), B2, sp.csr_matrix(B2.T)


def _csr_triplet(M):
    M = sp.csr_matrix(M)
    M.sort_indices()
    return (M.indptr.astype(np.int64), M.indices.astype(np.int64), M.data.astype(float))


def initial_state(cx: CellComplex, seed: int):
    rng = np.random.default_rng(seed)
    return rng.random(cx.skeleton.num_edges), rng.random(cx.num_cells)


def run_algorithm1(
    x1,
    cx: CellComplex,
    config: HarmonicConfig | None = None,
    initial: tuple[np.ndarray, np.ndarray] | None = None,
    backend=None,
) -> HarmonicResult:
    """Run the distributed subgradient scheme and return its best iterate.

    Each iteration updates every cell value from the signs on its boundary
    edges and every edge value from its Laplacian neighbours and incident
    cells, using only the state of the previous iteration.

    Parameters
    ----------
    x1 : array_like, shape (E,)
        Observed edge signal.
    cx : CellComplex
    config : HarmonicConfig, optional
    initial : (s_H, s2), optional
        Starting point; defaults to seeded uniform random vectors.
    backend : module, optional
        Kernel module overriding the import-time choice.

    Raises
    ------
    DivergenceError
        The objective exceeded ``divergence_limit``.
    """
    config = config or HarmonicConfig()
    x = np.asarray(x1, dtype=float)
    E = cx.skeleton.num_edges
    if x.shape != (E,):
        raise ValueError(f"observation has shape {x.shape}, expected ({E},)")
    lap, L1, B2, B2t = _operators(cx)
    lmax = float(np.linalg.eigvalsh(lap.L1)[-1])
    cfg = config.validate(lmax)
    sh0, s20 = initial if initial is not None else initial_state(cx, cfg.seed)
    kern = backend or _backend.kernels
    best_sh, best_s2, trace, best_k, n_iter, status, last_sh, last_s2 = kern.harmonic_loop(
        x, np.asarray(sh0, dtype=float), np.asarray(s20, dtype=float),
        _csr_triplet(L1), _csr_triplet(B2), _csr_triplet(B2t),
        cfg.epsilon_w, cfg.gamma, cfg.step_a, cfg.max_iters, cfg.tol_stop,
        cfg.window, cfg.divergence_limit,
    )
    if status == 2:
        raise DivergenceError(f"objective exceeded {cfg.divergence_limit:g} at iteration {n_iter}", trace)
    z = best_sh + B2 @ best_s2
    return HarmonicResult(
        best_sh, best_s2, z, trace, float(np.linalg.norm(L1 @ best_sh)),
        int(best_k), int(n_iter), _STATUS[status], cfg, last_sh, last_s2,
    )


def _sign(v):
    return np.sign(v)  # sign(0) = 0


def subgradient_step(state, x1, cx: CellComplex, mu: float, gamma: float, epsilon_w: float = 0.0):
    """One simultaneous update of ``(s_H, s2)`` from the current state.

    With ``epsilon_w = 0`` this is the bare subgradient step on fit plus
    sparsity; a positive ``epsilon_w`` adds the harmonic-penalty gradient
    (scaled by the step it becomes ``epsilon_w * L1 @ s_H``), as used by
    ``run_algorithm1``.
    """
    s_h, s2 = (np.asarray(v, dtype=float) for v in state)
    x = np.asarray(x1, dtype=float)
    B2 = cx.B2.astype(float)
    g = _sign(s_h + B2 @ s2)
    s2_new = s2 - mu * gamma * (B2.T @ g)
    s_h_new = s_h - mu * (-2.0 * (x - s_h) + gamma * g)
    if epsilon_w:
        s_h_new = s_h_new - epsilon_w * (hodge_laplacians(cx).L1 @ s_h)
    return s_h_new, s2_new


def penalized_objective(s_h, s2, x1, cx: CellComplex, mu: float, gamma: float, epsilon_w: float) -> float:
    L1 = hodge_laplacians(cx).L1
    r = np.asarray(x1) - s_h
    z = s_h + cx.B2.astype(float) @ s2
    return float(r @ r + gamma * np.abs(z).sum() + epsilon_w / (2 * mu) * (s_h @ L1 @ s_h))


def run_algorithm1_dense(x1, cx: CellComplex, config: HarmonicConfig, iterations: int,
                         initial=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense-matrix reference: ``iterations`` plain steps, no best tracking.

    Returns the final ``(s_H, s2)`` and the objective at each visited iterate.
    """
    x = np.asarray(x1, dtype=float)
    lap = hodge_laplacians(cx)
    cfg = config.validate(float(np.linalg.eigvalsh(lap.L1)[-1]))
    s_h, s2 = initial if initial is not None else initial_state(cx, cfg.seed)
    s_h, s2 = np.array(s_h, dtype=float), np.array(s2, dtype=float)
    trace = []
    for k in range(iterations + 1):
        mu = cfg.step_a if k == 0 else cfg.step_a / np.sqrt(k)
        trace.append(penalized_objective(s_h, s2, x, cx, mu, cfg.gamma, cfg.epsilon_w))
        if k == iterations:
            break
        s_h, s2 = subgradient_step((s_h, s2), x, cx, mu, cfg.gamma, cfg.epsilon_w)
    return s_h, s2, np.array(trace)


def zero_threshold(x1, cx: CellComplex) -> float:
    """Smallest ``gamma`` at which ``z = 0`` solves the harmonic problem.

    Zero is optimal iff some ``g`` with ``||g||_inf <= 1``, ``B2^T g = 0``
    matches ``2 / gamma`` times the harmonic part of ``x1``. The threshold
    is ``2 * min ||g||_inf`` over ``g`` with ``B2^T g = 0`` and the same
    harmonic part as ``x1``, found by linear programming.
    """
    x = np.asarray(x1, dtype=float)
    E = cx.skeleton.num_edges
    UH = spectral_basis(cx).vectors(HARMONIC)
    if UH.shape[1] == 0:
        return 0.0
    A_eq = np.vstack([cx.B2.T.astype(float), UH.T]) if cx.num_cells else UH.T
    b_eq = np.r_[np.zeros(cx.num_cells), UH.T @ x]
    # variables (g, t): minimize t with -t <= g_i <= t
    c = np.r_[np.zeros(E), 1.0]
    A_ub = np.block([[np.eye(E), -np.ones((E, 1))], [-np.eye(E), -np.ones((E, 1))]])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(2 * E),
                  A_eq=np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))]), b_eq=b_eq,
                  bounds=[(None, None)] * E + [(0, None)], method="highs")
    if not res.success:
        raise RuntimeError(f"threshold LP failed: {res.message}")
    return 2.0 * float(res.x[-1])


def threshold_scaled_signal(cx: CellComplex, ratio: float, gamma: float, noise_var: float = 0.0,
                            seed: int | None = 0) -> tuple[np.ndarray, float]:
    """Random harmonic observation whose amplitude sits ``ratio`` times past zero.

    The harmonic coefficients are drawn as in ``harmonic_signal`` and scaled
    so that ``zero_threshold`` of the noiseless flow equals ``ratio * gamma``;
    with ``ratio > 1`` the sparse representative at ``gamma`` is nonzero.
    Returns the observation and the amplitude used.
    """
    if ratio <= 0 or gamma <= 0:
        raise ValueError("ratio and gamma must be positive")
    g_unit = zero_threshold(harmonic_signal(cx, 1.0, 0.0, seed=seed), cx)
    if g_unit == 0.0:
        raise ValueError("complex has no harmonic space")
    amplitude = ratio * gamma / g_unit
    return harmonic_signal(cx, amplitude, noise_var, seed=seed), float(amplitude)


def mass_fraction(z, edges) -> float:
    """Share of ``||z||_1`` carried by the given edge indices."""
    z = np.abs(np.asarray(z, dtype=float))
    tot = z.sum()
    return float(z[np.asarray(edges, dtype=int)].sum() / tot) if tot > 0 else 0.0
