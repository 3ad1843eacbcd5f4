"""Pure-Python reference kernels.

These mirror the compiled kernels in ``_ckernels.pyx`` one to one and are
used whenever the extension is unavailable (or forced through the
``CELLSP_BACKEND=python`` environment variable).
"""
from __future__ import annotations

import math

import numpy as np

STATUS_MAX_ITERS = 0
STATUS_STALLED = 1
STATUS_DIVERGED = 2


def simple_cycles(indptr, indices, num_nodes, p_max):
    """Enumerate simple cycles of length 3..p_max in an undirected graph.

    Each cycle is reported once, starting at its smallest node and oriented so
    that the second node is smaller than the last one.

    Parameters
    ----------
    indptr, indices : ndarray
        CSR adjacency with sorted neighbour lists.
    num_nodes : int
    p_max : int
        Maximum cycle length.

    Returns
    -------
    list of tuple of int
    """
    cycles = []
    on_path = np.zeros(num_nodes, dtype=bool)
    for start in range(num_nodes):
        path = [start]
        on_path[start] = True
        # stack of neighbour cursors, one per path position
        cursors = [indptr[start]]
        while cursors:
            node = path[-1]
            pos = cursors[-1]
            if pos == indptr[node + 1]:
                cursors.pop()
                on_path[path.pop()] = False
                continue
            cursors[-1] = pos + 1
            nxt = indices[pos]
            if nxt == start:
                if len(path) >= 3 and path[1] < path[-1]:
                    cycles.append(tuple(path))
                continue
            if nxt < start or on_path[nxt] or len(path) >= p_max:
                continue
            path.append(nxt)
            on_path[nxt] = True
            cursors.append(indptr[nxt])
        on_path[start] = False
    return cycles


def harmonic_loop(x, s_h, s2, l_csr, b_csr, bt_csr, eps_w, gamma, step_a,
                  max_iters, tol_stop, window, div_limit):
    """Run the harmonic subgradient iteration from ``(s_h, s2)``.

    The three sparse operators are passed as ``(indptr, indices, data)``
    triples: the edge Laplacian, the edge-to-cell incidence and its
    transpose. Row access keeps every update local to incident edges/cells.

    Returns
    -------
    best_sh, best_s2 : ndarray
    trace : ndarray
        Objective value at every evaluated iterate.
    best_k, n_iter, status : int
    last_sh, last_s2 : ndarray
        State after the final step.
    """
    import scipy.sparse as sp

    E = x.shape[0]
    P = s2.shape[0]
    L = sp.csr_matrix((l_csr[2], l_csr[1], l_csr[0]), shape=(E, E))
    B = sp.csr_matrix((b_csr[2], b_csr[1], b_csr[0]), shape=(E, P))
    Bt = sp.csr_matrix((bt_csr[2], bt_csr[1], bt_csr[0]), shape=(P, E))

    s_h = np.array(s_h, dtype=float)
    s2 = np.array(s2, dtype=float)
    trace = np.empty(max_iters + 1)
    best = math.inf
    best_sh, best_s2, best_k = s_h.copy(), s2.copy(), 0
    checkpoint = math.inf
    status = STATUS_MAX_ITERS
    k = 0
    while True:
        mu = step_a if k == 0 else step_a / math.sqrt(k)
        z = s_h + B @ s2 if P else s_h.copy()
        lsh = L @ s_h
        r = x - s_h
        f = r @ r + gamma * np.abs(z).sum() + eps_w / (2.0 * mu) * (s_h @ lsh)
        trace[k] = f
        if not math.isfinite(f) or f > div_limit:
            status = STATUS_DIVERGED
            break
        if f < best:
            best = f
            best_sh[:] = s_h
            best_s2[:] = s2
            best_k = k
        if k == max_iters:
            break
        if k > 0 and k % window == 0:
            if checkpoint - best < tol_stop * abs(checkpoint):
                status = STATUS_STALLED
                break
            checkpoint = best
        elif k == 0:
            checkpoint = best
        g = np.sign(z)
        if P:
            s2 = s2 - (mu * gamma) * (Bt @ g)
        s_h = s_h - eps_w * lsh - mu * (gamma * g - 2.0 * r)
        k += 1
    return best_sh, best_s2, trace[: k + 1].copy(), best_k, k, status, s_h, s2
