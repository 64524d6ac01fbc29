"""Numba kernels for all-pairs shortest-path statistics.

Pure functions on CSR adjacency arrays; one BFS + Brandes dependency
accumulation per source node. Aggregation is a plain serial sum so results
do not depend on scheduling.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def shortest_path_census(indptr, indices, n):
    """Per-source BFS sweep over an undirected CSR graph.

    Returns
    -------
    betweenness : float64[n]
        Unnormalized Brandes betweenness; every unordered pair is counted
        twice (once per direction), callers halve it.
    dist_sum : float64[n]
        Sum of shortest-path lengths from each node to its reachable set.
    reach : int64[n]
        Number of reachable nodes, including the source itself.
    eccentricity : int64[n]
        Max distance to any reachable node.
    """
    betweenness = np.zeros(n, dtype=np.float64)
    dist_sum = np.zeros(n, dtype=np.float64)
    reach = np.zeros(n, dtype=np.int64)
    eccentricity = np.zeros(n, dtype=np.int64)

    order = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.int64)
    sigma = np.empty(n, dtype=np.float64)
    delta = np.empty(n, dtype=np.float64)

    for s in range(n):
        dist[:] = -1
        sigma[:] = 0.0
        delta[:] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = order[head]
            head += 1
            du = dist[u]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if dist[v] < 0:
                    dist[v] = du + 1
                    order[tail] = v
                    tail += 1
                if dist[v] == du + 1:
                    sigma[v] += sigma[u]

        total = 0
        far = 0
        for k in range(tail):
            d = dist[order[k]]
            total += d
            if d > far:
                far = d
        dist_sum[s] = total
        reach[s] = tail
        eccentricity[s] = far

        # dependency accumulation in reverse BFS order
        for k in range(tail - 1, -1, -1):
            w = order[k]
            coeff = (1.0 + delta[w]) / sigma[w]
            dw = dist[w]
            for e in range(indptr[w], indptr[w + 1]):
                v = indices[e]
                if dist[v] == dw - 1:
                    delta[v] += sigma[v] * coeff
            if w != s:
                betweenness[w] += delta[w]

    return betweenness, dist_sum, reach, eccentricity
