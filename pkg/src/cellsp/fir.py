"""FIR filters on edge signals built from powers of the lower and upper Laplacians.

Two least-squares designs are provided: a *common* design sharing one
coefficient vector between both Laplacians and an *independent* design with
one vector per Laplacian. ``gain_condition`` decides, from projections in the
vectorized operator space, whether the independent design strictly wins.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial import chebyshev

from .complex import HodgeLaplacians
from .spectral import CLUSTER_RTOL, IRROTATIONAL, SOLENOIDAL, DimensionError, SpectralBasis, group_values

PINV_RTOL = 1e-10
STRICT_RTOL = 1e-8
MAX_VEC_EDGES = 300


@dataclass(frozen=True)
class MaskSpec:
    """Sigmoid frequency response ``beta / (1 + exp(alpha (lambda - b)))``."""

    beta: float = 1.0
    alpha: float = 1.0
    b: float = 0.0
    target: str = SOLENOIDAL

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.target not in (SOLENOIDAL, IRROTATIONAL, "both"):
            raise ValueError(f"unknown mask target {self.target!r}")

    def __call__(self, eigenvalues):
        return sigmoid_mask(eigenvalues, self)


def sigmoid_mask(eigenvalues, spec: MaskSpec) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    with np.errstate(over="ignore"):
        return spec.beta / (1.0 + np.exp(spec.alpha * (lam - spec.b)))


@dataclass(frozen=True)
class Family:
    """Distinct nonzero eigenvalues of one Laplacian with their multiplicities."""

    values: np.ndarray
    multiplicity: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)


def distinct_eigenvalues(values, rtol: float = CLUSTER_RTOL) -> Family:
    """Group nearly equal eigenvalues; each group is represented by its mean."""
    v = np.sort(np.asarray(values, dtype=float))
    groups = group_values(v, rtol)
    return Family(
        np.array([v[g].mean() for g in groups]),
        np.array([len(g) for g in groups], dtype=int),
    )


def spectral_families(basis: SpectralBasis, rtol: float = CLUSTER_RTOL) -> tuple[Family, Family]:
    """Solenoidal and irrotational families of a labelled basis."""
    return (
        distinct_eigenvalues(basis.values(SOLENOIDAL), rtol),
        distinct_eigenvalues(basis.values(IRROTATIONAL), rtol),
    )


def build_phi(eigenvalues, L: int, rtol: float = CLUSTER_RTOL) -> np.ndarray:
    """Matrix of powers ``[lambda, lambda^2, ..., lambda^L]``, one row per eigenvalue.

    Raises
    ------
    ValueError
        Eigenvalues are not strictly positive or not distinct under the
        grouping tolerance.
    """
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    if L < 1:
        raise ValueError("filter length must be at least 1")
    if lam.size == 0:
        return np.zeros((0, L))
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be strictly positive")
    srt = np.sort(lam)
    if len(group_values(srt, rtol)) != lam.size:
        raise ValueError("eigenvalues are not distinct; group them first")
    return lam[:, None] ** np.arange(1, L + 1)[None, :]


def _pinv_solve(A, h, rtol=PINV_RTOL):
    """Minimum-norm least-squares solution via a truncated SVD.

    Columns are equilibrated to unit norm first (a diagonal change of
    variables), which removes the trivial part of the power matrix's
    ill-conditioning before the cutoff is applied.
    """
    if A.shape[0] == 0:
        return np.zeros(A.shape[1])
    cn = np.linalg.norm(A, axis=0)
    cn[cn == 0] = 1.0
    U, s, Vt = np.linalg.svd(A / cn, full_matrices=False)
    keep = s > rtol * s[0] if s.size and s[0] > 0 else np.zeros(s.size, dtype=bool)
    return (Vt[keep].T @ ((U[:, keep].T @ h) / s[keep])) / cn


def _pinv_fit(lam, h, L, weights, ref, with_const=False):
    """Truncated-SVD fit of powers of ``lam / ref`` (optionally with a constant).

    Coefficients are mapped back as ``a_k = a'_k / ref^k``.
    """
    w = np.ones(len(lam)) if weights is None else np.asarray(weights, dtype=float)
    k = np.arange(0 if with_const else 1, L + 1)
    A = (lam[:, None] / ref) ** k[None, :] if len(lam) else np.zeros((0, len(k)))
    sw = np.sqrt(w)
    a_scaled = _pinv_solve(A * sw[:, None], h * sw)
    res = float(np.sum(w * (h - A @ a_scaled) ** 2))
    return a_scaled / ref**k, res


def _bjorck_pereyra(x, f):
    """Coefficients ``c`` with ``sum_j c_j x_i^j = f_i`` (Newton form, then expanded)."""
    n = len(x)
    c = np.array(f, dtype=float)
    for k in range(n - 1):
        c[k + 1 :] = (c[k + 1 :] - c[k:-1]) / (x[k + 1 :] - x[: n - k - 1])
    for k in range(n - 2, -1, -1):
        c[k:-1] -= x[k] * c[k + 1 :]
    return c


def _cheb_to_power(coef):
    """Expand ``sum_j coef_j T_j(2t - 1)`` into powers of ``t``."""
    out = np.polynomial.Polynomial([0.0])
    shift = np.polynomial.Polynomial([-1.0, 2.0])
    tk_prev, tk = np.polynomial.Polynomial([1.0]), shift
    for j, cj in enumerate(coef):
        if j == 0:
            out = out + cj * tk_prev
        elif j == 1:
            out = out + cj * tk
        else:
            tk_prev, tk = tk, 2 * shift * tk - tk_prev
            out = out + cj * tk
    c = np.zeros(len(coef))
    c[: len(out.coef)] = out.coef[: len(coef)]
    return c


def _merge_nodes(lam, h, w, rtol):
    """Collapse rows that share an eigenvalue into one weighted row.

    Returns the merged nodes, targets (weighted means), weights and the
    irreducible squared error of the within-group spread.
    """
    order = np.argsort(lam, kind="stable")
    lam, h, w = lam[order], h[order], w[order]
    groups = group_values(lam, rtol)
    ln = np.array([lam[g].mean() for g in groups])
    wn = np.array([w[g].sum() for g in groups])
    hn = np.array([np.dot(w[g], h[g]) / w[g].sum() for g in groups])
    spread = float(sum(np.dot(w[g], (h[g] - m) ** 2) for g, m in zip(groups, hn)))
    return ln, hn, wn, spread


def _fit_powers(lam, h, L, weights=None, rtol=CLUSTER_RTOL):
    """Minimum-norm weighted least-squares fit of ``h`` by ``sum_k a_k lam^k``, k = 1..L.

    Equals ``pinv(Phi) h`` for the power matrix ``Phi`` in exact arithmetic
    but avoids forming ``Phi``, whose conditioning grows exponentially with
    the number of nodes:

    * as many nodes as coefficients: interpolation (Bjorck-Pereyra);
    * more nodes: least squares in a shifted Chebyshev basis, expanded;
    * fewer nodes: any interpolant minus its projection on the null space
      of ``Phi``, spanned by multiples of ``lam * prod(lam - lam_i)``.

    Returns the coefficients and the attained weighted squared residual.
    """
    lam = np.asarray(lam, dtype=float)
    h = np.asarray(h, dtype=float)
    w = np.ones(len(lam)) if weights is None else np.asarray(weights, dtype=float)
    if len(lam) == 0:
        return np.zeros(L), 0.0
    ln, hn, wn, spread = _merge_nodes(lam, h, w, rtol)
    n = len(ln)
    ref = float(ln.max())
    t = ln / ref
    scale = ref ** np.arange(1, L + 1)
    if n == L:
        a = _bjorck_pereyra(t, hn / t) / scale
    elif n > L:
        A = t[:, None] * np.polynomial.chebyshev.chebvander(2 * t - 1, L - 1)
        sw = np.sqrt(wn)
        coef, *_ = np.linalg.lstsq(A * sw[:, None], hn * sw, rcond=None)
        a = _cheb_to_power(coef) / scale
    else:
        # raw coordinates: the null space is taken in the same metric as the norm
        ap = np.zeros(L)
        ap[:n] = _bjorck_pereyra(t, hn / t) / scale[:n]
        wpoly = np.poly(ln)[::-1]
        N = np.zeros((L, L - n))
        for j in range(L - n):
            N[j : j + n + 1, j] = wpoly
        Q, _ = np.linalg.qr(N)
        a = ap - Q @ (Q.T @ ap)
    res = spread + float(np.sum(wn * (hn - _poly_eval(a, ln)) ** 2))
    return a, res


@dataclass(frozen=True, eq=False)
class FirDesign:
    """Coefficients and attained errors of an FIR design.

    In common mode ``a_sol`` and ``a_irr`` both equal ``a_common``. The
    residuals are squared (optionally multiplicity-weighted) spectral errors.
    """

    length_L: int
    mode: str
    a_common: np.ndarray | None
    a_sol: np.ndarray
    a_irr: np.ndarray
    alpha0: float = 0.0
    residual_common: float = float("nan")
    residual_sol: float = float("nan")
    residual_irr: float = float("nan")
    masks: dict = field(default_factory=dict)

    def response_sol(self, lam):
        return self.alpha0 + _poly_eval(self.a_sol, lam)

    def response_irr(self, lam):
        return self.alpha0 + _poly_eval(self.a_irr, lam)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "L": self.length_L,
            "alpha0": self.alpha0,
            "a_common": None if self.a_common is None else [float(v) for v in self.a_common],
            "a_sol": [float(v) for v in self.a_sol],
            "a_irr": [float(v) for v in self.a_irr],
            "residual_common": self.residual_common,
            "residual_sol": self.residual_sol,
            "residual_irr": self.residual_irr,
            "masks": {k: asdict(v) for k, v in self.masks.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FirDesign":
        ac = d.get("a_common")
        return cls(
            int(d["L"]), d["mode"], None if ac is None else np.asarray(ac, dtype=float),
            np.asarray(d["a_sol"], dtype=float), np.asarray(d["a_irr"], dtype=float),
            float(d.get("alpha0", 0.0)), float(d.get("residual_common", np.nan)),
            float(d.get("residual_sol", np.nan)), float(d.get("residual_irr", np.nan)),
            {k: MaskSpec(**v) for k, v in d.get("masks", {}).items()},
        )


def _poly_eval(a, lam):
    lam = np.asarray(lam, dtype=float)
    out = np.zeros_like(lam)
    for ak in a[::-1]:
        out = (out + ak) * lam
    return out


def _ref(*lams):
    m = max((float(np.max(l)) for l in lams if len(l)), default=1.0)
    return m if m > 0 else 1.0


def design_common(
    mask_values,
    lambdas_sol,
    lambdas_irr,
    L: int,
    weights=None,
    optimize_alpha0: bool = False,
) -> FirDesign:
    """One coefficient vector fitted to both families at once.

    Parameters
    ----------
    mask_values : array_like
        Stacked targets ``[h_sol; h_irr]`` on the distinct eigenvalues.
    lambdas_sol, lambdas_irr : array_like
        Distinct nonzero eigenvalues of the upper and lower Laplacians.
    L : int
        Filter length.
    weights : array_like, optional
        Row weights (e.g. eigenvalue multiplicities) for the stacked rows.
    optimize_alpha0 : bool
        Fit the identity coefficient too instead of fixing it at 0.
    """
    ls = np.asarray(lambdas_sol, dtype=float)
    li = np.asarray(lambdas_irr, dtype=float)
    h = np.asarray(mask_values, dtype=float)
    if L < 1:
        raise ValueError("filter length must be at least 1")
    if h.shape != (len(ls) + len(li),):
        raise DimensionError("mask_values must stack one target per solenoidal then irrotational eigenvalue")
    lam = np.r_[ls, li]
    if optimize_alpha0:
        a, res = _pinv_fit(lam, h, L, weights, _ref(lam), with_const=True)
        a0, a = a[0], a[1:]
    else:
        a, res = _fit_powers(lam, h, L, weights)
        a0 = 0.0
    return FirDesign(L, "common", a, a, a, float(a0), residual_common=res)


def design_independent(
    mask_sol,
    mask_irr,
    lambdas_sol,
    lambdas_irr,
    L: int,
    weights_sol=None,
    weights_irr=None,
    optimize_alpha0: bool = False,
) -> FirDesign:
    """Separate coefficient vectors for the upper and lower Laplacians.

    With ``optimize_alpha0`` the shared identity coefficient is fitted
    jointly with both vectors; otherwise the two fits decouple.
    """
    ls = np.asarray(lambdas_sol, dtype=float)
    li = np.asarray(lambdas_irr, dtype=float)
    hs = np.asarray(mask_sol, dtype=float)
    hi = np.asarray(mask_irr, dtype=float)
    if L < 1:
        raise ValueError("filter length must be at least 1")
    if hs.shape != ls.shape or hi.shape != li.shape:
        raise DimensionError("mask vectors must match their eigenvalue vectors")
    if not optimize_alpha0:
        a_s, rs = _fit_powers(ls, hs, L, weights_sol)
        a_i, ri = _fit_powers(li, hi, L, weights_irr)
        return FirDesign(L, "independent", None, a_s, a_i, 0.0, residual_sol=rs, residual_irr=ri)

    # block system [1 Phi_s 0; 1 0 Phi_I] in rescaled variables
    cs, ci = _ref(ls), _ref(li)
    k = np.arange(1, L + 1)
    As = (ls[:, None] / cs) ** k
    Ai = (li[:, None] / ci) ** k
    A = np.block([
        [np.ones((len(ls), 1)), As, np.zeros((len(ls), L))],
        [np.ones((len(li), 1)), np.zeros((len(li), L)), Ai],
    ])
    ws = np.ones(len(ls)) if weights_sol is None else np.asarray(weights_sol, dtype=float)
    wi = np.ones(len(li)) if weights_irr is None else np.asarray(weights_irr, dtype=float)
    sw = np.sqrt(np.r_[ws, wi])
    h = np.r_[hs, hi]
    x = _pinv_solve(A * sw[:, None], h * sw)
    e = h - A @ x
    rs = float(np.sum(ws * e[: len(ls)] ** 2))
    ri = float(np.sum(wi * e[len(ls):] ** 2))
    return FirDesign(L, "independent", None, x[1 : L + 1] / cs**k, x[L + 1 :] / ci**k,
                     float(x[0]), residual_sol=rs, residual_irr=ri)


@dataclass(frozen=True, eq=False)
class FilterProblem:
    """Design targets of one filtering task on one complex."""

    sol: Family
    irr: Family
    h_sol: np.ndarray
    h_irr: np.ndarray
    weighted: bool

    @property
    def h(self) -> np.ndarray:
        return np.r_[self.h_sol, self.h_irr]

    @property
    def w_sol(self):
        return self.sol.multiplicity.astype(float) if self.weighted else None

    @property
    def w_irr(self):
        return self.irr.multiplicity.astype(float) if self.weighted else None

    def target_energy(self) -> float:
        ws = self.sol.multiplicity if self.weighted else 1
        wi = self.irr.multiplicity if self.weighted else 1
        return float(np.sum(ws * self.h_sol**2) + np.sum(wi * self.h_irr**2))

    def common(self, L: int, **kw) -> FirDesign:
        w = None if not self.weighted else np.r_[self.w_sol, self.w_irr]
        return design_common(self.h, self.sol.values, self.irr.values, L, weights=w, **kw)

    def independent(self, L: int, **kw) -> FirDesign:
        return design_independent(self.h_sol, self.h_irr, self.sol.values, self.irr.values, L,
                                  weights_sol=self.w_sol, weights_irr=self.w_irr, **kw)


def filter_problem(basis: SpectralBasis, mask_sol: MaskSpec, mask_irr: MaskSpec,
                   weighted: bool = False) -> FilterProblem:
    """Evaluate both masks on the distinct eigenvalues of a labelled basis.

    With ``weighted=True`` each distinct eigenvalue counts once per
    multiplicity, which makes the spectral residuals equal to the
    Frobenius errors of the filter operator.
    """
    sol, irr = spectral_families(basis)
    return FilterProblem(sol, irr, sigmoid_mask(sol.values, mask_sol), sigmoid_mask(irr.values, mask_irr), weighted)


def apply_fir(signal, design: FirDesign, laplacians: HodgeLaplacians) -> np.ndarray:
    """Filter an edge signal (or the columns of an E x M array).

    Uses Horner accumulation with sparse matrix-vector products, so no
    power of a Laplacian is ever formed.
    """
    s = np.asarray(signal, dtype=float)
    E = laplacians.L1.shape[0]
    if s.shape[0] != E:
        raise DimensionError(f"signal has length {s.shape[0]}, expected {E}")
    Ld = laplacians.sparse("L1_down")
    Lu = laplacians.sparse("L1_up")
    return design.alpha0 * s + _horner(Ld, design.a_irr, s) + _horner(Lu, design.a_sol, s)


def _horner(Lsp, a, s):
    if len(a) == 0:
        return np.zeros_like(s)
    v = a[-1] * s
    for ak in a[-2::-1]:
        v = Lsp @ v + ak * s
    return Lsp @ v


@dataclass(frozen=True)
class GainReport:
    """Projection diagnostics comparing common and independent designs.

    ``verdict`` is ``consistent_zero`` when the common system is solvable,
    ``strict`` when the independent design is strictly better, ``equal``
    otherwise, and ``None`` when either power family lacks full column
    rank (the comparison is then withheld).
    """

    consistent: bool
    full_rank: bool
    y_norm: float
    leak_norm: float
    verdict: str | None
    h_norm: float
    f_common: float
    f_independent: float

    @property
    def gap(self) -> float:
        return self.f_common - self.f_independent


def _power_columns(lam, U, L, ref):
    """Columns ``vec(U diag(q_k(lam)) U^T)`` for a polynomial basis ``q_k``.

    ``q_k(t) = t * T_{k-1}(2t - 1)`` with ``t = lam / ref`` spans the same
    space as ``lam, ..., lam^L`` but is far better conditioned.
    """
    E = U.shape[0]
    if U.shape[1] == 0:
        return np.zeros((E * E, L))
    t = lam / ref
    cols = []
    for k in range(1, L + 1):
        coef = np.zeros(k)
        coef[-1] = 1.0
        q = t * chebyshev.chebval(2 * t - 1, coef)
        cols.append(((U * q) @ U.T).ravel(order="F"))
    return np.column_stack(cols)


def _range_basis(A, rtol=PINV_RTOL):
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0], 0
    r = int(np.sum(s > rtol * s[0]))
    return U[:, :r], r


def gain_condition(mask_sol: MaskSpec, mask_irr: MaskSpec, basis: SpectralBasis, L: int) -> GainReport:
    """Decide whether independent coefficients strictly beat a common set.

    Works in the E^2-dimensional space of vectorized operators: ``vec(H)``
    is the target filter, ``Phi_d`` and ``Phi_u`` hold the vectorized powers
    of the lower and upper Laplacians. The independent design projects
    ``vec(H)`` onto ``R(Phi_d) + R(Phi_u)``; the common design onto the
    smaller ``R(Phi_d + Phi_u)``. The leak of the first projection outside
    the second is exactly the square root of the gain.

    Raises
    ------
    ValueError
        More than 300 edges, or an empty solenoidal/irrotational family.
    """
    E = basis.eigenvectors.shape[0]
    if E > MAX_VEC_EDGES:
        raise ValueError(f"gain checker limited to E <= {MAX_VEC_EDGES} (got {E})")
    i_s, i_d = basis.indices(SOLENOIDAL), basis.indices(IRROTATIONAL)
    if len(i_s) == 0 or len(i_d) == 0:
        raise ValueError("both solenoidal and irrotational families must be nonempty")
    U = basis.eigenvectors
    lam = basis.eigenvalues
    Us, Ud = U[:, i_s], U[:, i_d]
    ls, ld = lam[i_s], lam[i_d]
    vecH = (((Us * sigmoid_mask(ls, mask_sol)) @ Us.T) + ((Ud * sigmoid_mask(ld, mask_irr)) @ Ud.T)).ravel(order="F")
    ref = basis.lambda_max
    Phid = _power_columns(ld, Ud, L, ref)
    Phiu = _power_columns(ls, Us, L, ref)
    Qd, rd = _range_basis(Phid)
    Qu, ru = _range_basis(Phiu)
    Qm, _ = _range_basis(Phid + Phiu)
    hn = float(np.linalg.norm(vecH))
    y = Qd @ (Qd.T @ vecH) + Qu @ (Qu.T @ vecH)
    leak = y - Qm @ (Qm.T @ y)
    miss = vecH - Qm @ (Qm.T @ vecH)
    f_common = float(miss @ miss)
    r_ind = vecH - y
    f_ind = float(r_ind @ r_ind)
    tol = STRICT_RTOL * hn
    consistent = bool(np.sqrt(f_common) <= tol)
    full_rank = rd == L and ru == L
    leak_norm = float(np.linalg.norm(leak))
    if consistent:
        verdict = "consistent_zero"
    elif not full_rank:
        verdict = None
    elif leak_norm > tol:
        verdict = "strict"
    else:
        verdict = "equal"
    return GainReport(consistent, full_rank, float(np.linalg.norm(y)), leak_norm, verdict,
                      hn, f_common, f_ind)
