# cython: language_level=3
"""Compiled kernels: simple-cycle enumeration and the harmonic iteration.

Semantics match ``_pykernels`` exactly; see that module for documentation.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite, INFINITY

cnp.import_array()

STATUS_MAX_ITERS = 0
STATUS_STALLED = 1
STATUS_DIVERGED = 2

cdef enum:
    C_MAX_ITERS = 0
    C_STALLED = 1
    C_DIVERGED = 2


def simple_cycles(indptr, indices, Py_ssize_t num_nodes, Py_ssize_t p_max):
    cdef cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef cnp.int64_t[::1] path = np.zeros(max(p_max, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] cursor = np.zeros(max(p_max, 1), dtype=np.int64)
    cdef cnp.uint8_t[::1] on_path = np.zeros(num_nodes, dtype=np.uint8)
    cdef Py_ssize_t start, depth, node, pos, nxt, i
    cycles = []
    for start in range(num_nodes):
        path[0] = start
        cursor[0] = ip[start]
        on_path[start] = 1
        depth = 1
        while depth > 0:
            node = path[depth - 1]
            pos = cursor[depth - 1]
            if pos == ip[node + 1]:
                depth -= 1
                on_path[node] = 0
                continue
            cursor[depth - 1] = pos + 1
            nxt = ix[pos]
            if nxt == start:
                if depth >= 3 and path[1] < path[depth - 1]:
                    cycles.append(tuple([path[i] for i in range(depth)]))
                continue
            if nxt < start or on_path[nxt] or depth >= p_max:
                continue
            path[depth] = nxt
            cursor[depth] = ip[nxt]
            on_path[nxt] = 1
            depth += 1
    return cycles


cdef inline double _sign(double v) nogil:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


def harmonic_loop(x, s_h, s2, l_csr, b_csr, bt_csr, double eps_w, double gamma,
                  double step_a, Py_ssize_t max_iters, double tol_stop,
                  Py_ssize_t window, double div_limit):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t E = xv.shape[0]
    cdef double[::1] sh = np.array(s_h, dtype=np.float64)
    cdef double[::1] c2 = np.array(s2, dtype=np.float64)
    cdef Py_ssize_t P = c2.shape[0]

    cdef cnp.int64_t[::1] lp = np.ascontiguousarray(l_csr[0], dtype=np.int64)
    cdef cnp.int64_t[::1] li = np.ascontiguousarray(l_csr[1], dtype=np.int64)
    cdef double[::1] ld = np.ascontiguousarray(l_csr[2], dtype=np.float64)
    cdef cnp.int64_t[::1] bp = np.ascontiguousarray(b_csr[0], dtype=np.int64)
    cdef cnp.int64_t[::1] bi = np.ascontiguousarray(b_csr[1], dtype=np.int64)
    cdef double[::1] bd = np.ascontiguousarray(b_csr[2], dtype=np.float64)
    cdef cnp.int64_t[::1] tp = np.ascontiguousarray(bt_csr[0], dtype=np.int64)
    cdef cnp.int64_t[::1] ti = np.ascontiguousarray(bt_csr[1], dtype=np.int64)
    cdef double[::1] td = np.ascontiguousarray(bt_csr[2], dtype=np.float64)

    cdef double[::1] z = np.zeros(E)
    cdef double[::1] g = np.zeros(E)
    cdef double[::1] lsh = np.zeros(E)
    cdef double[::1] best_sh = np.array(sh, copy=True)
    cdef double[::1] best_s2 = np.array(c2, copy=True)
    trace_arr = np.empty(max_iters + 1)
    cdef double[::1] trace = trace_arr

    cdef double best = INFINITY, checkpoint = INFINITY
    cdef double mu, f, acc, r, fit, l1, quad
    cdef Py_ssize_t k = 0, best_k = 0, e, j, n
    cdef int status = C_MAX_ITERS

    with nogil:
        while True:
            if k == 0:
                mu = step_a
            else:
                mu = step_a / sqrt(<double>k)
            fit = 0.0
            l1 = 0.0
            quad = 0.0
            for e in range(E):
                acc = sh[e]
                for j in range(bp[e], bp[e + 1]):
                    acc = acc + bd[j] * c2[bi[j]]
                z[e] = acc
                g[e] = _sign(acc)
                l1 = l1 + fabs(acc)
                acc = 0.0
                for j in range(lp[e], lp[e + 1]):
                    acc = acc + ld[j] * sh[li[j]]
                lsh[e] = acc
                quad = quad + sh[e] * acc
                r = xv[e] - sh[e]
                fit = fit + r * r
            f = fit + gamma * l1 + eps_w / (2.0 * mu) * quad
            trace[k] = f
            if not isfinite(f) or f > div_limit:
                status = C_DIVERGED
                break
            if f < best:
                best = f
                best_sh[:] = sh
                best_s2[:] = c2
                best_k = k
            if k == max_iters:
                break
            if k > 0 and k % window == 0:
                if checkpoint - best < tol_stop * fabs(checkpoint):
                    status = C_STALLED
                    break
                checkpoint = best
            elif k == 0:
                checkpoint = best
            for n in range(P):
                acc = 0.0
                for j in range(tp[n], tp[n + 1]):
                    acc = acc + td[j] * g[ti[j]]
                c2[n] = c2[n] - (mu * gamma) * acc
            for e in range(E):
                r = xv[e] - sh[e]
                sh[e] = sh[e] - eps_w * lsh[e] - mu * (gamma * g[e] - 2.0 * r)
            k += 1
    return (np.asarray(best_sh), np.asarray(best_s2), trace_arr[: k + 1].copy(),
            best_k, k, status, np.asarray(sh), np.asarray(c2))
