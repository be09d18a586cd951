"""Undirected attributed graphs, grid constructors, and the breadth-first
scheduling (levels, tree/cross edge classes, incoming lists) that orders
wave updates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

EDGE_TREE = 0
EDGE_CROSS = 1


class UGraph:
    """Undirected attributed graph: one edge per unordered pair, no self loops.

    Node features, per-node scalar targets and a target mask ride along so a
    graph is a complete training example.
    """

    def __init__(self, n_nodes: int, edges, node_features=None, edge_features=None,
                 node_targets=None, target_mask=None):
        if n_nodes < 1:
            raise ValueError("graph needs at least one node")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n_nodes:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self loop")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        order = np.lexsort((hi, lo))
        edges = np.stack([lo, hi], axis=1)[order]
        if edges.shape[0] > 1 and np.any(np.all(np.diff(edges, axis=0) == 0, axis=1)):
            raise ValueError("duplicate edge")
        m = edges.shape[0]

        def _f(x, default_shape):
            if x is None:
                return np.zeros(default_shape)
            arr = np.asarray(x, dtype=np.float64)
            return arr.reshape(default_shape[0], -1)

        self.n_nodes = int(n_nodes)
        self.edges = edges
        self.node_features = _f(node_features, (n_nodes, 0))
        ef = _f(edge_features, (m, 0))
        self.edge_features = ef[order] if edge_features is not None else ef
        self.node_targets = _f(node_targets, (n_nodes, 1))
        self.target_mask = (np.ones(n_nodes) if target_mask is None
                            else np.asarray(target_mask, dtype=np.float64).reshape(-1))
        if self.node_features.shape[0] != n_nodes or self.node_targets.shape[0] != n_nodes:
            raise ValueError("node attribute length mismatch")
        if self.edge_features.shape[0] != m:
            raise ValueError("edge attribute length mismatch")
        if self.target_mask.shape[0] != n_nodes:
            raise ValueError("target mask length mismatch")
        for arr in (self.edges, self.node_features, self.edge_features,
                    self.node_targets, self.target_mask):
            arr.setflags(write=False)
        self._adj = None

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def adjacency(self):
        """Per-node sorted list of (neighbor, edge index)."""
        if self._adj is None:
            adj = [[] for _ in range(self.n_nodes)]
            for eid, (u, v) in enumerate(self.edges):
                adj[int(u)].append((int(v), eid))
                adj[int(v)].append((int(u), eid))
            self._adj = [sorted(a) for a in adj]
        return self._adj

    def neighbors(self, u: int):
        return [v for v, _ in self.adjacency()[u]]

    def with_attributes(self, node_features=None, edge_features=None,
                        node_targets=None, target_mask=None) -> "UGraph":
        """New graph sharing topology with replaced attributes."""
        return UGraph(
            self.n_nodes, self.edges,
            self.node_features if node_features is None else node_features,
            self.edge_features if edge_features is None else edge_features,
            self.node_targets if node_targets is None else node_targets,
            self.target_mask if target_mask is None else target_mask)


def grid_graph(rows: int, cols: int) -> UGraph:
    """rows x cols grid with 4-neighborhood edges, row-major node ids."""
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be >= 1")
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1))
            if r + 1 < rows:
                edges.append((u, u + cols))
    return UGraph(rows * cols, np.asarray(edges, dtype=np.int64).reshape(-1, 2))


def hop_distances(g: UGraph, source: int) -> np.ndarray:
    """BFS hop counts from ``source``; rejects disconnected graphs."""
    dist = np.full(g.n_nodes, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    adj = g.adjacency()
    while frontier:
        nxt = []
        for u in frontier:
            for v, _ in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    if np.any(dist < 0):
        raise ValueError("graph is disconnected")
    return dist


def _all_pairs_hops(g: UGraph) -> np.ndarray:
    if g.n_edges == 0:
        if g.n_nodes == 1:
            return np.zeros((1, 1))
        raise ValueError("graph is disconnected")
    ones = np.ones(2 * g.n_edges)
    rows = np.concatenate([g.edges[:, 0], g.edges[:, 1]])
    cols = np.concatenate([g.edges[:, 1], g.edges[:, 0]])
    adj = csr_matrix((ones, (rows, cols)), shape=(g.n_nodes, g.n_nodes))
    return shortest_path(adj, method="D", unweighted=True)


def graph_center(g: UGraph) -> int:
    """Node of minimum eccentricity; ties broken by smallest node id."""
    dist = _all_pairs_hops(g)
    if np.isinf(dist).any():
        raise ValueError("graph is disconnected")
    ecc = dist.max(axis=1)
    return int(np.argmin(ecc))


@dataclass
class BfsSchedule:
    """Breadth-first ordering of a connected graph from ``root``.

    ``forward_incoming[u]`` lists (neighbor, edge, same_level) for neighbors
    one level closer to the root plus same-level cross neighbors;
    ``backward_incoming`` is the mirror. Tree edges link each non-root node
    to its lowest-id neighbor one level up; every other edge is cross.
    """

    root: int
    level: np.ndarray
    order: np.ndarray
    tree_parent: np.ndarray  # -1 at the root
    edge_class: np.ndarray   # EDGE_TREE / EDGE_CROSS per edge
    forward_incoming: list
    backward_incoming: list

    @property
    def n_levels(self) -> int:
        return int(self.level.max()) + 1

    def nodes_at_level(self, l: int) -> np.ndarray:
        sorted_levels = self.level[self.order]
        lo, hi = np.searchsorted(sorted_levels, [l, l + 1])
        return self.order[lo:hi]


def bfs_schedule(g: UGraph, root: int) -> BfsSchedule:
    if root < 0 or root >= g.n_nodes:
        raise ValueError("root out of range")
    adj = g.adjacency()
    level = np.full(g.n_nodes, -1, dtype=np.int64)
    level[root] = 0
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v, _ in adj[u]:
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    if np.any(level < 0):
        raise ValueError("graph is disconnected")

    tree_parent = np.full(g.n_nodes, -1, dtype=np.int64)
    for u in range(g.n_nodes):
        if u == root:
            continue
        ups = [v for v, _ in adj[u] if level[v] == level[u] - 1]
        tree_parent[u] = min(ups)

    edge_class = np.full(g.n_edges, EDGE_CROSS, dtype=np.int8)
    for eid, (u, v) in enumerate(g.edges):
        if tree_parent[u] == v or tree_parent[v] == u:
            edge_class[eid] = EDGE_TREE

    order = np.lexsort((np.arange(g.n_nodes), level))
    forward = [[] for _ in range(g.n_nodes)]
    backward = [[] for _ in range(g.n_nodes)]
    for u in range(g.n_nodes):
        for v, eid in adj[u]:
            if level[v] < level[u]:
                forward[u].append((v, eid, False))
            elif level[v] == level[u]:
                forward[u].append((v, eid, True))
                backward[u].append((v, eid, True))
            else:
                backward[u].append((v, eid, False))

    for arr in (level, order, tree_parent, edge_class):
        arr.setflags(write=False)
    return BfsSchedule(root=int(root), level=level, order=order,
                       tree_parent=tree_parent, edge_class=edge_class,
                       forward_incoming=[tuple(f) for f in forward],
                       backward_incoming=[tuple(b) for b in backward])
