"""Pure-Python kernels. Same contracts as ``_ckernels``; used when the
compiled extension is unavailable or ``ARTICUKIT_PURE_PYTHON=1``."""
from collections import deque

import numpy as np
from scipy.spatial import cKDTree


def dbscan_labels(X, eps, min_pts):
    """Label points by DBSCAN with a closed ``eps`` ball (self included).

    Clusters are seeded in ascending index order and expanded breadth
    first, so a border point goes to the earliest-created cluster that
    reaches it.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels
    tree = cKDTree(X)
    neighbors = [sorted(nb) for nb in tree.query_ball_point(X, eps, p=2.0)]
    core = [len(nb) >= min_pts for nb in neighbors]
    cluster = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        labels[i] = cluster
        queue = deque([i])
        while queue:
            j = queue.popleft()
            for k in neighbors[j]:
                if labels[k] == -1:
                    labels[k] = cluster
                    if core[k]:
                        queue.append(k)
        cluster += 1
    return labels


def solve_assignment(cost):
    """Rectangular min-cost assignment (rows <= cols).

    Shortest augmenting path with row/column potentials, O(H^2 L).
    Returns the column assigned to each row.
    """
    C = np.asarray(cost, dtype=np.float64)
    n, m = C.shape
    inf = float("inf")
    # 1-based bookkeeping; index 0 is the virtual column
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)
    way = [0] * (m + 1)
    rows = C.tolist()
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = rows[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
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
        if p[j]:
            col_for_row[p[j] - 1] = j - 1
    return col_for_row
