"""Weighted directed networks of geographic units and their graph statistics.

The central object is :class:`CountyNetwork`: a static directed graph whose
nodes carry FIPS-style 5-digit identifiers and optional centroid/state
attributes, and whose edges carry a positive weight ``mu``. Neighbor queries
follow out-edges; graph statistics are computed on the undirected view.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import csr_matrix

from ._centrality import shortest_path_census

EARTH_RADIUS_KM = 6371.0
WEIGHT_MODES = ("binary", "commuters", "great_circle_km")


class NetworkError(ValueError):
    """Invalid network construction or query."""


@dataclass(frozen=True)
class NodeAttrs:
    """Optional per-node attributes: centroid coordinates and state code."""

    lat: float | None = None
    lon: float | None = None
    state: str | None = None


@dataclass(frozen=True)
class NetworkStats:
    """Graph-metric bundle computed on the undirected view of a network.

    ``closeness`` and ``betweenness`` are means of normalized node
    centralities (closeness scaled by its reachable fraction of ``n - 1``,
    betweenness divided by ``(n - 1)(n - 2) / 2``). ``diameter`` and
    ``avg_shortest_path`` are computed over the largest connected component;
    unreachable pairs are excluded.
    """

    node_count: int
    edge_count: int
    avg_degree: float
    closeness: float
    betweenness: float
    clustering_coefficient: float
    density: float
    diameter: int
    avg_shortest_path: float
    component_count: int


@dataclass(frozen=True)
class StageNeighborhood:
    """Stage-r neighbor sets of a root node, for r = 1..r_max.

    ``stages[k]`` holds the nodes whose unweighted shortest-path distance
    from the root along out-edges is exactly ``k + 1``. Sets are pairwise
    disjoint and never contain the root.
    """

    root: str
    stages: tuple[frozenset[str], ...]

    def stage(self, r: int) -> frozenset[str]:
        """Neighbors at distance exactly ``r`` (1-based)."""
        if not 1 <= r <= len(self.stages):
            raise NetworkError(f"stage {r} outside computed range 1..{len(self.stages)}")
        return self.stages[r - 1]


def _validate_node_id(code: str) -> str:
    if not isinstance(code, str) or len(code) != 5 or not code.isdigit():
        raise NetworkError(f"node id must be a 5-digit string, got {code!r}")
    return code


class CountyNetwork:
    """Static directed weighted graph keyed by 5-digit FIPS-style ids.

    Node ordering is fixed at construction and defines the column order of
    every time-series panel aligned to the network. Instances are immutable
    after construction; all queries are read-only and safe to call from
    concurrent workers.

    Parameters
    ----------
    nodes : sequence of str
        Node identifiers in authoritative order (5 decimal digits each).
    edges : iterable of (str, str, float)
        Directed edges ``(from_id, to_id, mu)`` with ``mu > 0``. Self-loops
        and duplicate directed edges are rejected.
    weight_mode : str
        One of ``binary``, ``commuters``, ``great_circle_km``; records the
        semantics of ``mu``.
    node_attrs : mapping, optional
        Node id -> :class:`NodeAttrs`.
    """

    def __init__(self, nodes, edges, weight_mode, node_attrs=None, _origin=None):
        if weight_mode not in WEIGHT_MODES:
            raise NetworkError(f"unknown weight_mode {weight_mode!r}; expected one of {WEIGHT_MODES}")
        node_list = [_validate_node_id(n) for n in nodes]
        if len(set(node_list)) != len(node_list):
            dupes = [n for n, c in Counter(node_list).items() if c > 1]
            raise NetworkError(f"duplicate node ids: {dupes}")
        self.nodes: tuple[str, ...] = tuple(node_list)
        self.weight_mode = weight_mode
        self._index = {n: k for k, n in enumerate(self.nodes)}

        attrs_map = dict(node_attrs) if node_attrs else {}
        resolved = []
        for n in self.nodes:
            a = attrs_map.get(n)
            if a is None:
                a = NodeAttrs()
            elif not isinstance(a, NodeAttrs):
                a = NodeAttrs(*a)
            resolved.append(a)
        self.node_attrs: tuple[NodeAttrs, ...] = tuple(resolved)

        adj: list[dict[int, float]] = [dict() for _ in self.nodes]
        edge_rows = []
        for src, dst, mu in edges:
            i = self._require(src)
            j = self._require(dst)
            if i == j:
                raise NetworkError(f"self-loop on node {src}")
            mu = float(mu)
            if not math.isfinite(mu) or mu <= 0.0:
                raise NetworkError(f"edge {src}->{dst} must have weight > 0, got {mu}")
            if j in adj[i]:
                raise NetworkError(f"duplicate directed edge {src}->{dst}")
            adj[i][j] = mu
            edge_rows.append((i, j, mu))
        edge_rows.sort(key=lambda e: (e[0], e[1]))
        self._adj: tuple[dict[int, float], ...] = tuple(adj)
        self._edge_list: tuple[tuple[int, int, float], ...] = tuple(edge_rows)

        # original construction weights, kept so commuter counts survive a
        # round of reweighting
        if _origin is None:
            _origin = (weight_mode, tuple(mu for _, _, mu in edge_rows))
        self._origin_mode, self._origin_mu = _origin
        self._weight_cache: dict[int, csr_matrix] = {}

    # -- basic queries ----------------------------------------------------

    def _require(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise NetworkError(f"unknown node id: {node_id!r}") from None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        """Directed edge count."""
        return len(self._edge_list)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._index

    def index(self, node_id: str) -> int:
        """Position of a node in the authoritative ordering."""
        return self._require(node_id)

    def attrs(self, node_id: str) -> NodeAttrs:
        return self.node_attrs[self._require(node_id)]

    def edges(self):
        """Directed edges as ``(from_id, to_id, mu)`` in canonical order."""
        return [(self.nodes[i], self.nodes[j], mu) for i, j, mu in self._edge_list]

    def out_neighbors(self, node_id: str) -> dict[str, float]:
        """Out-edge weights of a node, keyed by destination id."""
        i = self._require(node_id)
        return {self.nodes[j]: mu for j, mu in self._adj[i].items()}

    def undirected_pairs(self) -> set[tuple[int, int]]:
        """Index pairs (i < j) adjacent in either direction."""
        return {(i, j) if i < j else (j, i) for i, j, _ in self._edge_list}

    def undirected_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for i, j in self.undirected_pairs():
            deg[i] += 1
            deg[j] += 1
        return deg

    @property
    def node_order_hash(self) -> str:
        """SHA-256 of the node ordering; guards panel/fit alignment."""
        return hashlib.sha256("\n".join(self.nodes).encode("ascii")).hexdigest()

    def state_mask(self, state: str) -> np.ndarray:
        """Boolean mask of nodes whose state attribute equals ``state``."""
        return np.array([a.state == state for a in self.node_attrs], dtype=bool)

    def states(self) -> set[str]:
        return {a.state for a in self.node_attrs if a.state is not None}

    # -- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "nodes": [
                {"fips": n, "lat": a.lat, "lon": a.lon, "state": a.state}
                for n, a in zip(self.nodes, self.node_attrs)
            ],
            "edges": [{"from": self.nodes[i], "to": self.nodes[j], "mu": mu}
                      for i, j, mu in self._edge_list],
            "weight_mode": self.weight_mode,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CountyNetwork":
        try:
            nodes = [rec["fips"] for rec in doc["nodes"]]
            attrs = {rec["fips"]: NodeAttrs(rec.get("lat"), rec.get("lon"), rec.get("state"))
                     for rec in doc["nodes"]}
            edges = [(rec["from"], rec["to"], rec["mu"]) for rec in doc["edges"]]
            mode = doc["weight_mode"]
        except (KeyError, TypeError) as exc:
            raise NetworkError(f"malformed network document: {exc}") from exc
        return cls(nodes, edges, mode, node_attrs=attrs)

    @classmethod
    def from_json(cls, text: str) -> "CountyNetwork":
        return cls.from_json_dict(json.loads(text))


# -- neighbor machinery ----------------------------------------------------


def neighbor_set(net: CountyNetwork, a) -> set[str]:
    """Nodes outside ``a`` that receive an edge from some member of ``a``."""
    member_idx = {net._require(n) for n in a}
    out = set()
    for i in member_idx:
        out.update(net._adj[i].keys())
    out -= member_idx
    return {net.nodes[j] for j in out}


def stage_neighbors(net: CountyNetwork, i: str, r_max: int) -> StageNeighborhood:
    """Stage-r neighbor sets of node ``i`` for r = 1..r_max.

    Stage 1 is the out-neighbor set of ``i``; stage r is the neighbor set of
    stage r-1 minus everything already seen at earlier stages (and the root).
    """
    if r_max < 1:
        raise NetworkError(f"r_max must be >= 1, got {r_max}")
    root = net._require(i)
    seen = {root}
    current = set(net._adj[root].keys())
    stages = []
    for _ in range(r_max):
        stages.append(frozenset(net.nodes[k] for k in current))
        seen |= current
        nxt = set()
        for u in current:
            nxt.update(net._adj[u].keys())
        current = nxt - seen
    return StageNeighborhood(root=i, stages=tuple(stages))


def connection_weights(net: CountyNetwork, i: str, r: int) -> dict[str, float]:
    """Normalized connection weights of node ``i`` over its stage-r neighbors.

    Each stage-r neighbor k gets weight mu_ik / sum(mu_il over the stage set).
    For r = 1, mu is the stored edge weight. Stage-r nodes with r > 1 are
    never direct neighbors, so mu falls back to the reciprocal of the
    unweighted shortest-path length (1/r for every member), making deeper
    stages uniform.
    """
    if r < 1:
        raise NetworkError(f"stage r must be >= 1, got {r}")
    root = net._require(i)
    stage = stage_neighbors(net, i, r).stages[r - 1]
    if not stage:
        return {}
    if r == 1:
        mu = {k: net._adj[root][net._index[k]] for k in stage}
    else:
        mu = {k: 1.0 / r for k in stage}
    total = sum(mu.values())
    return {k: v / total for k, v in mu.items()}


def stage_weight_matrix(net: CountyNetwork, r: int):
    """CSR matrix W with W[i, q] = connection weight of q in stage r of i.

    Rows of nodes with empty stage-r sets are zero. Cached per network; the
    cache is idempotent so concurrent builders are harmless.
    """
    cached = net._weight_cache.get(r)
    if cached is not None:
        return cached
    rows, cols, vals = [], [], []
    for i, node in enumerate(net.nodes):
        for q, w in connection_weights(net, node, r).items():
            rows.append(i)
            cols.append(net._index[q])
            vals.append(w)
    mat = csr_matrix((vals, (rows, cols)), shape=(net.n_nodes, net.n_nodes))
    net._weight_cache[r] = mat
    return mat


# -- distance weighting -----------------------------------------------------


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in km on a sphere of radius 6371.0 km."""
    for lat in (lat1, lat2):
        if not -90.0 <= lat <= 90.0:
            raise NetworkError(f"latitude out of range [-90, 90]: {lat}")
    for lon in (lon1, lon2):
        if not -180.0 <= lon <= 180.0:
            raise NetworkError(f"longitude out of range [-180, 180]: {lon}")
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def reweight(net: CountyNetwork, mode: str) -> CountyNetwork:
    """Return a copy of the network with the same edges under a new weighting.

    ``binary`` sets every mu to 1; ``great_circle_km`` sets mu to the
    haversine distance between endpoint centroids (coordinates required and
    distances must be positive); ``commuters`` restores the flow counts the
    network was originally built with.
    """
    if mode not in WEIGHT_MODES:
        raise NetworkError(f"unknown weight_mode {mode!r}; expected one of {WEIGHT_MODES}")
    if mode == "binary":
        new_mu = [1.0] * len(net._edge_list)
    elif mode == "great_circle_km":
        new_mu = []
        for i, j, _ in net._edge_list:
            ai, aj = net.node_attrs[i], net.node_attrs[j]
            if ai.lat is None or ai.lon is None or aj.lat is None or aj.lon is None:
                raise NetworkError(
                    f"great-circle weighting needs coordinates on both endpoints of "
                    f"{net.nodes[i]}->{net.nodes[j]}")
            d = haversine_km(ai.lat, ai.lon, aj.lat, aj.lon)
            if d <= 0.0:
                raise NetworkError(
                    f"co-located centroids {net.nodes[i]} and {net.nodes[j]}: "
                    f"great-circle weight would not be positive")
            new_mu.append(d)
    else:  # commuters
        if net._origin_mode != "commuters":
            raise NetworkError("network has no commuter counts to restore")
        new_mu = list(net._origin_mu)
    edges = [(net.nodes[i], net.nodes[j], mu)
             for (i, j, _), mu in zip(net._edge_list, new_mu)]
    attrs = dict(zip(net.nodes, net.node_attrs))
    return CountyNetwork(net.nodes, edges, mode, node_attrs=attrs,
                         _origin=(net._origin_mode, net._origin_mu))


# -- graph statistics --------------------------------------------------------


def _undirected_csr(net: CountyNetwork):
    pairs = sorted(net.undirected_pairs())
    n = net.n_nodes
    if not pairs:
        indptr = np.zeros(n + 1, dtype=np.int64)
        return indptr, np.zeros(0, dtype=np.int64), 0
    arr = np.array(pairs, dtype=np.int64)
    rows = np.concatenate([arr[:, 0], arr[:, 1]])
    cols = np.concatenate([arr[:, 1], arr[:, 0]])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, cols, len(pairs)


def _mean_local_clustering(net: CountyNetwork) -> float:
    nbrs = [set() for _ in range(net.n_nodes)]
    for i, j in net.undirected_pairs():
        nbrs[i].add(j)
        nbrs[j].add(i)
    total = 0.0
    for u in range(net.n_nodes):
        d = len(nbrs[u])
        if d < 2:
            continue
        links = sum(len(nbrs[u] & nbrs[v]) for v in nbrs[u]) // 2
        total += 2.0 * links / (d * (d - 1))
    return total / net.n_nodes


def network_stats(net: CountyNetwork) -> NetworkStats:
    """Compute the undirected graph-metric bundle for a network.

    Works on disconnected graphs: centrality means span all nodes, while
    diameter and average shortest path are restricted to the largest
    connected component.
    """
    n = net.n_nodes
    if n == 0:
        raise NetworkError("empty network")
    indptr, indices, edge_count = _undirected_csr(net)
    avg_degree = 2.0 * edge_count / n
    density = 2.0 * edge_count / (n * (n - 1)) if n > 1 else 0.0

    betw_raw, dist_sum, reach, ecc = shortest_path_census(indptr, indices, n)

    # closeness: (r-1)/dist * (r-1)/(n-1), zero for isolated nodes
    closeness = np.zeros(n)
    pos = dist_sum > 0
    if n > 1:
        closeness[pos] = ((reach[pos] - 1) / dist_sum[pos]) * ((reach[pos] - 1) / (n - 1))
    mean_closeness = float(closeness.mean())

    if n > 2:
        norm = (n - 1) * (n - 2) / 2.0
        mean_betweenness = float((betw_raw / 2.0 / norm).mean())
    else:
        mean_betweenness = 0.0

    adjacency = csr_matrix((np.ones(len(indices)), indices, indptr), shape=(n, n))
    n_comp, labels = connected_components(adjacency, directed=False)
    sizes = np.bincount(labels, minlength=n_comp)
    main = int(np.argmax(sizes))
    members = labels == main
    size = int(sizes[main])
    if size > 1:
        diameter = int(ecc[members].max())
        avg_sp = float(dist_sum[members].sum() / (size * (size - 1)))
    else:
        diameter = 0
        avg_sp = 0.0

    return NetworkStats(
        node_count=n,
        edge_count=edge_count,
        avg_degree=avg_degree,
        closeness=mean_closeness,
        betweenness=mean_betweenness,
        clustering_coefficient=_mean_local_clustering(net),
        density=density,
        diameter=diameter,
        avg_shortest_path=avg_sp,
        component_count=int(n_comp),
    )


def degree_histogram(net: CountyNetwork) -> dict[int, int]:
    """Histogram of undirected degrees; counts sum to the node count."""
    return dict(sorted(Counter(net.undirected_degrees().tolist()).items()))


# -- synthetic reference topology --------------------------------------------


def triangular_lattice(rows: int, cols: int) -> CountyNetwork:
    """Triangular-tiling lattice on a rows x cols grid of nodes.

    Columns are stacks of ``rows`` nodes; odd columns sit half a step lower,
    so each node links to its vertical neighbors, its horizontal neighbors,
    and one cross-column diagonal whose direction alternates with column
    parity. This is the planar equilateral tiling; the undirected edge count
    is 3*rows*cols - 2*rows - 2*cols + 1. Edges are stored as directed pairs
    with mu = 1 under binary weighting.
    """
    if rows < 2 or cols < 2:
        raise NetworkError(f"lattice dimensions must be >= 2, got ({rows}, {cols})")
    if rows * cols > 100000:
        raise NetworkError("lattice too large for 5-digit node ids")

    def node(i, j):
        return f"{i * cols + j:05d}"

    undirected = []
    for i in range(rows):
        for j in range(cols):
            if i + 1 < rows:
                undirected.append((node(i, j), node(i + 1, j)))
            if j + 1 < cols:
                undirected.append((node(i, j), node(i, j + 1)))
                if j % 2 == 0:
                    if i - 1 >= 0:
                        undirected.append((node(i, j), node(i - 1, j + 1)))
                elif i + 1 < rows:
                    undirected.append((node(i, j), node(i + 1, j + 1)))

    nodes = [node(i, j) for i in range(rows) for j in range(cols)]
    edges = []
    for a, b in undirected:
        edges.append((a, b, 1.0))
        edges.append((b, a, 1.0))
    return CountyNetwork(nodes, edges, "binary")


# -- state extraction ---------------------------------------------------------


def extract_state_subnetwork(net: CountyNetwork, state: str,
                             include_external: bool = False) -> CountyNetwork:
    """Restrict a network to one state's nodes.

    Without ``include_external`` the result keeps only within-state nodes and
    the edges among them. With it, every out-of-state node sharing an edge
    with a within-state node is retained too, along with all edges incident
    to at least one within-state node; external nodes keep their original
    state attribute, so membership is recoverable via ``state_mask``.
    """
    if state not in net.states():
        raise NetworkError(f"unknown state code: {state!r}")
    inside = {i for i, a in enumerate(net.node_attrs) if a.state == state}

    keep_edges = []
    keep_mu_origin = []
    touched = set(inside)
    for (i, j, mu), omu in zip(net._edge_list, net._origin_mu):
        if include_external:
            hit = i in inside or j in inside
        else:
            hit = i in inside and j in inside
        if hit:
            keep_edges.append((i, j, mu))
            keep_mu_origin.append(omu)
            touched.add(i)
            touched.add(j)

    # order-preserving index subset keeps the canonical edge sort stable
    if include_external:
        node_idx = [k for k in range(net.n_nodes) if k in touched]
    else:
        node_idx = [k for k in range(net.n_nodes) if k in inside]

    nodes = [net.nodes[k] for k in node_idx]
    attrs = {net.nodes[k]: net.node_attrs[k] for k in node_idx}
    edges = [(net.nodes[i], net.nodes[j], mu) for i, j, mu in keep_edges]
    origin_mu = tuple(keep_mu_origin)
    return CountyNetwork(nodes, edges, net.weight_mode, node_attrs=attrs,
                         _origin=(net._origin_mode, origin_mu))
