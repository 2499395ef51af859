# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for DBSCAN labeling and rectangular assignment.

Contracts match ``articukit._pykernels`` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


cdef inline bint _within(const double[:, ::1] X, Py_ssize_t a, Py_ssize_t b,
                         Py_ssize_t d, double eps2) noexcept nogil:
    cdef double s = 0.0, t
    cdef Py_ssize_t k
    for k in range(d):
        t = X[a, k] - X[b, k]
        s += t * t
        if s > eps2:
            return False
    return True


def dbscan_labels(X, double eps, Py_ssize_t min_pts):
    arr = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Xv = arr
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1]
    labels_arr = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels_arr
    # sweep along the widest coordinate; only points within eps on it can be neighbors
    cdef Py_ssize_t axis = int(np.argmax(np.ptp(arr, axis=0))) if d else 0
    order_arr = np.argsort(arr[:, axis], kind="stable").astype(np.int64) if d else np.arange(n, dtype=np.int64)
    pos_arr = np.empty(n, dtype=np.int64)
    pos_arr[order_arr] = np.arange(n, dtype=np.int64)
    xs_arr = np.ascontiguousarray(arr[order_arr, axis]) if d else np.zeros(n)
    cdef cnp.int64_t[::1] order = order_arr
    cdef cnp.int64_t[::1] pos = pos_arr
    cdef const double[::1] xs = xs_arr
    cdef cnp.int64_t[::1] labels = labels_arr
    core_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] core = core_arr
    queue_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef double eps2 = eps * eps, t
    cdef Py_ssize_t i, j, k, p, q, cnt, head, tail
    cdef cnp.int64_t cluster = 0

    with nogil:
        for p in range(n):
            i = order[p]
            cnt = 0
            q = p
            while q >= 0:
                t = xs[p] - xs[q]
                if t * t > eps2:
                    break
                cnt += _within(Xv, i, order[q], d, eps2)
                q -= 1
            q = p + 1
            while q < n:
                t = xs[q] - xs[p]
                if t * t > eps2:
                    break
                cnt += _within(Xv, i, order[q], d, eps2)
                q += 1
            core[i] = cnt >= min_pts

        # seeds in ascending index order; a cluster is fully grown before the
        # next starts, so neighbor visiting order does not change the labels
        for i in range(n):
            if labels[i] != -1 or not core[i]:
                continue
            labels[i] = cluster
            head = 0
            tail = 0
            queue[tail] = i
            tail += 1
            while head < tail:
                j = queue[head]
                head += 1
                p = pos[j]
                q = p
                while q >= 0:
                    t = xs[p] - xs[q]
                    if t * t > eps2:
                        break
                    k = order[q]
                    if labels[k] == -1 and _within(Xv, j, k, d, eps2):
                        labels[k] = cluster
                        if core[k]:
                            queue[tail] = k
                            tail += 1
                    q -= 1
                q = p + 1
                while q < n:
                    t = xs[q] - xs[p]
                    if t * t > eps2:
                        break
                    k = order[q]
                    if labels[k] == -1 and _within(Xv, j, k, d, eps2):
                        labels[k] = cluster
                        if core[k]:
                            queue[tail] = k
                            tail += 1
                    q += 1
            cluster += 1
    return labels_arr


def solve_assignment(cost):
    cdef const double[:, ::1] C = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = C.shape[0], m = C.shape[1]
    u_arr = np.zeros(n + 1)
    v_arr = np.zeros(m + 1)
    minv_arr = np.empty(m + 1)
    p_arr = np.zeros(m + 1, dtype=np.int64)
    way_arr = np.zeros(m + 1, dtype=np.int64)
    used_arr = np.zeros(m + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr, v = v_arr, minv = minv_arr
    cdef cnp.int64_t[::1] p = p_arr, way = way_arr
    cdef cnp.uint8_t[::1] used = used_arr
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur

    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(m + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, m + 1):
                    if not used[j]:
                        cur = C[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(m + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while True:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
                if j0 == 0:
                    break

    col_for_row = np.empty(n, dtype=np.int64)
    for j in range(1, m + 1):
        if p_arr[j]:
            col_for_row[p_arr[j] - 1] = j - 1
    return col_for_row
