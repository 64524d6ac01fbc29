"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written the slow, obvious way and consumes
only public data (edge lists, plain vectors), never the package's internal
structures, so a bug cannot hide on both sides of a comparison.
"""

from collections import deque

import numpy as np


def bfs_depths(node_ids, directed_edges, root):
    """Depth of every node reachable from ``root`` following edge direction."""
    adjacency = {n: [] for n in node_ids}
    for a, b in directed_edges:
        adjacency[a].append(b)
    depth = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if v not in depth:
                depth[v] = depth[u] + 1
                queue.append(v)
    return depth


def scalar_mape(actual, forecast):
    total = 0.0
    included = 0
    excluded = 0
    for y, f in zip(actual, forecast):
        if y == 0:
            excluded += 1
            continue
        total += abs((y - f) / y)
        included += 1
    if included == 0:
        raise ZeroDivisionError("all terms excluded")
    return total / included, excluded


def scalar_mase(actual, forecast, previous):
    total = 0.0
    included = 0
    excluded = 0
    for y, f, prev in zip(actual, forecast, previous):
        if y - prev == 0:
            excluded += 1
            continue
        total += abs((y - f) / (y - prev))
        included += 1
    if included == 0:
        raise ZeroDivisionError("all terms excluded")
    return total / included, excluded


def normal_equations(X, y):
    """OLS through the normal equations; only valid on full-rank designs."""
    return np.linalg.solve(X.T @ X, X.T @ y)


def undirected_allpairs(n, pairs):
    """Plain BFS distance matrix over an undirected edge list; -1 = unreachable."""
    adjacency = [[] for _ in range(n)]
    for i, j in pairs:
        adjacency[i].append(j)
        adjacency[j].append(i)
    dist = -np.ones((n, n), dtype=int)
    for s in range(n):
        dist[s, s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adjacency[u]:
                if dist[s, v] < 0:
                    dist[s, v] = dist[s, u] + 1
                    queue.append(v)
    return dist


def naive_stats(n, pairs):
    """Shortest-path-derived statistics computed the quadratic-and-then-some way.

    Returns a dict with closeness (mean, Wasserman-Faust scaled), betweenness
    (mean, normalized by (n-1)(n-2)/2), diameter and average shortest path on
    the largest component, and mean local clustering.
    """
    dist = undirected_allpairs(n, pairs)
    adjacency = [set() for _ in range(n)]
    for i, j in pairs:
        adjacency[i].add(j)
        adjacency[j].add(i)

    # components via reachability rows
    labels = -np.ones(n, dtype=int)
    label = 0
    for s in range(n):
        if labels[s] < 0:
            labels[dist[s] >= 0] = label
            label += 1
    sizes = np.bincount(labels)
    main = int(np.argmax(sizes))
    members = np.flatnonzero(labels == main)

    # closeness
    closeness = []
    for u in range(n):
        reachable = dist[u] >= 0
        r = int(reachable.sum())
        total = int(dist[u][reachable].sum())
        if total > 0 and n > 1:
            closeness.append(((r - 1) / total) * ((r - 1) / (n - 1)))
        else:
            closeness.append(0.0)

    # path counts per source, in distance order
    betweenness = np.zeros(n)
    if n > 2:
        sigma = np.zeros((n, n))
        for s in range(n):
            sigma[s, s] = 1.0
            order = np.argsort(dist[s])
            for v in order:
                if dist[s, v] <= 0:
                    continue
                sigma[s, v] = sum(sigma[s, u] for u in adjacency[v]
                                  if dist[s, u] == dist[s, v] - 1)
        for s in range(n):
            for t in range(n):
                if s >= t or dist[s, t] < 0:
                    continue
                for v in range(n):
                    if v in (s, t) or dist[s, v] < 0 or dist[v, t] < 0:
                        continue
                    if dist[s, v] + dist[v, t] == dist[s, t]:
                        betweenness[v] += sigma[s, v] * sigma[v, t] / sigma[s, t]
        betweenness /= (n - 1) * (n - 2) / 2.0

    if len(members) > 1:
        block = dist[np.ix_(members, members)]
        diameter = int(block.max())
        avg_sp = float(block.sum() / (len(members) * (len(members) - 1)))
    else:
        diameter = 0
        avg_sp = 0.0

    clustering = []
    for u in range(n):
        d = len(adjacency[u])
        if d < 2:
            clustering.append(0.0)
            continue
        links = 0
        nbrs = sorted(adjacency[u])
        for a in range(len(nbrs)):
            for b in range(a + 1, len(nbrs)):
                if nbrs[b] in adjacency[nbrs[a]]:
                    links += 1
        clustering.append(2.0 * links / (d * (d - 1)))

    return {
        "closeness": float(np.mean(closeness)),
        "betweenness": float(np.mean(betweenness)),
        "diameter": diameter,
        "avg_shortest_path": avg_sp,
        "clustering": float(np.mean(clustering)),
        "component_count": int(label),
    }


def lattice_edges_geometric(rows, cols):
    """Edge count of the triangular tiling by brute geometric enumeration.

    Places every node at its planar position and links pairs at unit
    distance, independent of any index-arithmetic construction.
    """
    positions = {}
    for i in range(rows):
        for j in range(cols):
            positions[(i, j)] = (j * np.sqrt(3.0) / 2.0, i + 0.5 * (j % 2))
    keys = list(positions)
    count = 0
    for a in range(len(keys)):
        xa, ya = positions[keys[a]]
        for b in range(a + 1, len(keys)):
            xb, yb = positions[keys[b]]
            if abs(np.hypot(xa - xb, ya - yb) - 1.0) < 1e-9:
                count += 1
    return count
