# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def assemble(const double[::1] uu, const long[:, ::1] main_idx, const double[:, ::1] main_coef,
             const long[:, ::1] other_idx, const double[:, ::1] other_coef,
             const long[:, ::1] rows, const double[:, ::1] row_w,
             const long[:, ::1] node_idx, const double[:, ::1] node_coef,
             const long[:, :, ::1] slot_edge, const long[:, ::1] slot_node,
             long N, long nnz, bint want_jac):
    cdef Py_ssize_t E = main_idx.shape[0]
    cdef Py_ssize_t e, k, m, p
    cdef double g, o, W, W3, F, dg, do, wrow, gx, gr, Wn, Wn3
    cdef double dcol[8]
    res_arr = np.zeros(N + 1)
    cdef double[::1] res = res_arr
    data_arr = np.zeros(nnz + 1 if want_jac else 1)
    cdef double[::1] data = data_arr

    for e in range(E):
        g = main_coef[e, 0] * uu[main_idx[e, 0]] + main_coef[e, 1] * uu[main_idx[e, 1]]
        o = 0.0
        for k in range(6):
            o += other_coef[e, k] * uu[other_idx[e, k]]
        W = sqrt(1.0 + g * g + o * o)
        F = g / W
        res[rows[e, 0]] += row_w[e, 0] * F
        res[rows[e, 1]] += row_w[e, 1] * F
        if want_jac:
            W3 = W * W * W
            dg = (1.0 + o * o) / W3
            do = -g * o / W3
            dcol[0] = dg * main_coef[e, 0]
            dcol[1] = dg * main_coef[e, 1]
            for k in range(6):
                dcol[2 + k] = do * other_coef[e, k]
            for m in range(2):
                wrow = row_w[e, m]
                if wrow == 0.0:
                    continue
                for k in range(8):
                    data[slot_edge[e, m, k]] += wrow * dcol[k]

    for p in range(N):
        gx = 0.0
        gr = 0.0
        for k in range(3):
            gx += node_coef[p, k] * uu[node_idx[p, k]]
            gr += node_coef[p, 3 + k] * uu[node_idx[p, 3 + k]]
        Wn = sqrt(1.0 + gx * gx + gr * gr)
        res[p] -= 1.0 / Wn
        if want_jac:
            Wn3 = Wn * Wn * Wn
            for k in range(3):
                data[slot_node[p, k]] += gx / Wn3 * node_coef[p, k]
                data[slot_node[p, 3 + k]] += gr / Wn3 * node_coef[p, 3 + k]

    if want_jac:
        return res_arr[:N], data_arr[:nnz]
    return res_arr[:N], None


def directed_hausdorff(const double[:, ::1] P, const double[:, ::1] Q):
    cdef Py_ssize_t i, j, n = P.shape[0], m = Q.shape[0]
    cdef double best = 0.0, dmin, dx, dy, d2
    for i in range(n):
        dmin = 1e300
        for j in range(m):
            dx = P[i, 0] - Q[j, 0]
            dy = P[i, 1] - Q[j, 1]
            d2 = dx * dx + dy * dy
            if d2 < dmin:
                dmin = d2
                if dmin <= best:
                    break
        if dmin > best:
            best = dmin
    return sqrt(best)
