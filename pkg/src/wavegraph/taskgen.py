"""Seeded generators for the three task families: spanning-tree path
problems (with multi-path variants), maze images, and random DC circuits
with their graph encodings.

Every generator is a pure function of (parameters, seed): identical seeds
give bit-identical examples. Targets are checked against independent
oracles (BFS / exhaustive path enumeration / the nodal solver) before an
example is emitted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphcore import UGraph, grid_graph

KIND_WIRE = "wire"
KIND_RESISTOR = "resistor"
KIND_BATTERY = "battery"

BATTERY_INTERNAL_OHMS = 100.0
COMPONENT_PROBS = {KIND_BATTERY: 0.05, KIND_RESISTOR: 0.70, KIND_WIRE: 0.25}

# grid size -> (edge deletion probability, training batch size)
CIRCUIT_TABLE = {
    2: (0.1, 100), 3: (0.1, 90), 4: (0.2, 80), 5: (0.2, 70), 6: (0.3, 60),
    7: (0.4, 50), 8: (0.5, 40), 9: (0.5, 30), 10: (0.5, 20),
}
CIRCUIT_TEST_DELETE_PROB = 0.5  # sizes 11-15
MAX_PATH_COUNT = 10
MAX_RESAMPLE_ATTEMPTS = 1000

PIXEL_PASSABLE = 0
PIXEL_WALL = 1
PIXEL_GOAL = 2


def circuit_delete_prob(size: int) -> float:
    if size in CIRCUIT_TABLE:
        return CIRCUIT_TABLE[size][0]
    if 11 <= size <= 15:
        return CIRCUIT_TEST_DELETE_PROB
    raise ValueError(f"no deletion probability defined for grid size {size}")


def circuit_batch_size(size: int) -> int:
    if size in CIRCUIT_TABLE:
        return CIRCUIT_TABLE[size][1]
    raise ValueError(f"no training batch size defined for grid size {size}")


# ---------------------------------------------------------------------------
# spanning trees


def _grid_neighbors(n: int):
    def inside(r, c):
        return 0 <= r < n and 0 <= c < n

    def ns(u):
        r, c = divmod(u, n)
        return [rr * n + cc for rr, cc in
                ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)) if inside(rr, cc)]

    return ns


def dfs_spanning_tree(n: int, seed) -> UGraph:
    """Spanning tree of the n x n grid via depth-first search with uniformly
    shuffled neighbor order (the long-corridor maze generator)."""
    if n < 2:
        raise ValueError("grid size must be >= 2")
    rng = np.random.default_rng(seed)
    ns = _grid_neighbors(n)
    start = int(rng.integers(0, n * n))
    visited = {start}
    stack = [start]
    edges = []
    while stack:
        u = stack[-1]
        cands = [v for v in ns(u) if v not in visited]
        if not cands:
            stack.pop()
            continue
        v = cands[int(rng.integers(0, len(cands)))]
        visited.add(v)
        edges.append((u, v))
        stack.append(v)
    return UGraph(n * n, edges)


def prim_spanning_tree(n: int, seed) -> UGraph:
    """Spanning tree of the n x n grid via randomized Prim: grow from a
    random node, adding a uniformly chosen frontier edge each step."""
    if n < 2:
        raise ValueError("grid size must be >= 2")
    rng = np.random.default_rng(seed)
    ns = _grid_neighbors(n)
    start = int(rng.integers(0, n * n))
    visited = {start}
    frontier = [(start, v) for v in ns(start)]
    edges = []
    while frontier:
        i = int(rng.integers(0, len(frontier)))
        u, v = frontier.pop(i)
        if v in visited:
            continue
        visited.add(v)
        edges.append((u, v))
        frontier.extend((v, w) for w in ns(v) if w not in visited)
    return UGraph(n * n, edges)


# ---------------------------------------------------------------------------
# path examples


@dataclass
class PathExample:
    graph: UGraph
    goals: tuple
    path_nodes: frozenset
    generator: str
    size: int
    seed: int
    path_count: int = 1
    task: str = "paths"

    @property
    def shortest_length(self) -> int:
        return len(self.path_nodes)


def bfs_path(g: UGraph, a: int, b: int) -> list:
    """Shortest path between two nodes by plain BFS (oracle)."""
    prev = {a: a}
    frontier = [a]
    while frontier and b not in prev:
        nxt = []
        for u in frontier:
            for v in g.neighbors(u):
                if v not in prev:
                    prev[v] = u
                    nxt.append(v)
        frontier = nxt
    if b not in prev:
        raise ValueError("goals are not connected")
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def enumerate_simple_paths(g: UGraph, a: int, b: int, cap: int = MAX_PATH_COUNT):
    """All simple paths from a to b, or None when more than ``cap`` exist."""
    paths = []
    stack = [(a, [a], {a})]
    while stack:
        u, path, seen = stack.pop()
        if u == b:
            paths.append(path)
            if len(paths) > cap:
                return None
            continue
        for v in g.neighbors(u):
            if v not in seen:
                stack.append((v, path + [v], seen | {v}))
    return paths


def _path_attributes(g: UGraph, goals, path) -> UGraph:
    feats = np.zeros((g.n_nodes, 1))
    feats[list(goals), 0] = 1.0
    targets = np.zeros((g.n_nodes, 1))
    targets[list(path), 0] = 1.0
    return g.with_attributes(node_features=feats, node_targets=targets,
                             target_mask=np.ones(g.n_nodes))


def make_path_example(tree: UGraph, seed, generator: str = "dfs",
                      size: int | None = None) -> PathExample:
    """Uniform distinct goal pair on a spanning tree; target is the unique
    tree path (verified against the BFS oracle)."""
    rng = np.random.default_rng(seed)
    n = tree.n_nodes
    a = int(rng.integers(0, n))
    b = int(rng.integers(0, n - 1))
    if b >= a:
        b += 1
    path = bfs_path(tree, a, b)
    g = _path_attributes(tree, (a, b), path)
    if size is None:
        size = int(round(np.sqrt(n)))
    return PathExample(graph=g, goals=(min(a, b), max(a, b)),
                       path_nodes=frozenset(path), generator=generator,
                       size=size, seed=_as_seed_int(seed))


def make_multipath_example(tree: UGraph, k_extra: int, seed,
                           generator: str = "dfs",
                           size: int | None = None) -> PathExample:
    """Tree plus ``k_extra`` non-tree grid edges. Emits only examples whose
    simple-path count is <= 10 and whose shortest path is unique; otherwise
    redraws from the same stream."""
    if k_extra < 0:
        raise ValueError("k_extra must be >= 0")
    rng = np.random.default_rng(seed)
    n = tree.n_nodes
    if size is None:
        size = int(round(np.sqrt(n)))
    grid = grid_graph(size, size)
    tree_set = {tuple(e) for e in tree.edges.tolist()}
    candidates = [tuple(e) for e in grid.edges.tolist() if tuple(e) not in tree_set]
    for _ in range(MAX_RESAMPLE_ATTEMPTS):
        if k_extra > len(candidates):
            raise ValueError("not enough non-tree grid edges")
        pick = rng.choice(len(candidates), size=k_extra, replace=False)
        edges = np.concatenate([tree.edges,
                                np.asarray([candidates[i] for i in sorted(pick)],
                                           dtype=np.int64).reshape(-1, 2)])
        g = UGraph(n, edges)
        a = int(rng.integers(0, n))
        b = int(rng.integers(0, n - 1))
        if b >= a:
            b += 1
        paths = enumerate_simple_paths(g, a, b, MAX_PATH_COUNT)
        if paths is None:
            continue
        best = min(len(p) for p in paths)
        shortest = [p for p in paths if len(p) == best]
        if len(shortest) != 1:
            continue
        g = _path_attributes(g, (a, b), shortest[0])
        return PathExample(graph=g, goals=(min(a, b), max(a, b)),
                           path_nodes=frozenset(shortest[0]), generator=generator,
                           size=size, seed=_as_seed_int(seed),
                           path_count=len(paths), task="multipath")
    raise RuntimeError("multipath generation exceeded the resample budget")


def _as_seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(1)[0])
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


# ---------------------------------------------------------------------------
# maze images


@dataclass
class MazeImage:
    graph: UGraph           # pixel grid graph, one node per pixel
    classes: np.ndarray     # (2N+1) x (2N+1) of PIXEL_* codes
    goal_pixels: tuple
    path_pixels: frozenset
    generator: str
    size: int               # cell grid size N (image side is 2N+1)
    seed: int
    task: str = "maze-image"

    @property
    def side(self) -> int:
        return self.classes.shape[0]

    @property
    def goals(self) -> tuple:
        return self.goal_pixels

    @property
    def path_nodes(self) -> frozenset:
        return self.path_pixels

    @property
    def path_count(self) -> int:
        return 1

    @property
    def shortest_length(self) -> int:
        return len(self.path_pixels)

    def ascii_art(self) -> str:
        chars = {PIXEL_PASSABLE: ".", PIXEL_WALL: "#", PIXEL_GOAL: "G"}
        rows = []
        for r in range(self.side):
            rows.append("".join(
                "o" if r * self.side + c in self.path_pixels
                and self.classes[r, c] != PIXEL_GOAL
                else chars[self.classes[r, c]]
                for c in range(self.side)))
        return "\n".join(rows)


def rasterize_maze(example: PathExample) -> MazeImage:
    """Standard cell/wall embedding: cells sit at odd pixel coordinates of a
    (2N+1)^2 image; the pixel between two cells is passable iff the tree
    edge exists. The pixel graph connects ALL adjacent pixels (walls too);
    wall information lives only in the features."""
    n = example.size
    side = 2 * n + 1
    classes = np.full((side, side), PIXEL_WALL, dtype=np.int64)

    def cell_pixel(u):
        r, c = divmod(u, n)
        return 2 * r + 1, 2 * c + 1

    for u in range(n * n):
        classes[cell_pixel(u)] = PIXEL_PASSABLE
    for u, v in example.graph.edges:
        (r1, c1), (r2, c2) = cell_pixel(int(u)), cell_pixel(int(v))
        classes[(r1 + r2) // 2, (c1 + c2) // 2] = PIXEL_PASSABLE

    goal_pixels = []
    for goal in example.goals:
        r, c = cell_pixel(goal)
        classes[r, c] = PIXEL_GOAL
        goal_pixels.append(r * side + c)

    path_order = bfs_path(example.graph, example.goals[0], example.goals[1])
    path_pixels = set()
    for u in path_order:
        r, c = cell_pixel(u)
        path_pixels.add(r * side + c)
    for u, v in zip(path_order, path_order[1:]):
        (r1, c1), (r2, c2) = cell_pixel(u), cell_pixel(v)
        path_pixels.add(((r1 + r2) // 2) * side + (c1 + c2) // 2)

    flat = classes.reshape(-1)
    feats = np.zeros((side * side, 3))
    feats[np.arange(side * side), flat] = 1.0
    targets = np.zeros((side * side, 1))
    targets[sorted(path_pixels), 0] = 1.0
    g = grid_graph(side, side).with_attributes(
        node_features=feats, node_targets=targets, target_mask=np.ones(side * side))
    return MazeImage(graph=g, classes=classes, goal_pixels=tuple(goal_pixels),
                     path_pixels=frozenset(path_pixels), generator=example.generator,
                     size=n, seed=example.seed)


# ---------------------------------------------------------------------------
# circuits


@dataclass
class Component:
    a: int
    b: int
    kind: str
    resistance: float = 0.0   # ohms (internal resistance for batteries)
    voltage: float = 0.0      # volts (batteries only)
    positive_terminal: int = -1


@dataclass
class CircuitNetlist:
    n_nodes: int
    components: list
    ground: int

    def component_graph(self) -> UGraph:
        edges = [(c.a, c.b) for c in self.components]
        return UGraph(self.n_nodes, edges)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.count = n

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb
            self.count -= 1
            return True
        return False


def generate_circuit(n: int, delete_prob: float, seed) -> CircuitNetlist:
    """Random circuit on an n x n grid: edges deleted i.i.d. with
    ``delete_prob``, survivors made batteries/resistors/wires
    (0.05/0.7/0.25), at least one battery guaranteed. Ground is the
    bottom-right grid node.

    I.i.d. deletion disconnects large sparse grids almost surely (at
    d=0.5 a fully connected draw is a < 3e-4 event for n=8 and was never
    observed for n >= 9 in 1e5 trials), so instead of resampling, the
    minimum number of deleted edges is restored in random order until the
    grid is connected again.
    """
    if n < 2:
        raise ValueError("grid size must be >= 2")
    if not 0.0 <= delete_prob < 1.0:
        raise ValueError("delete_prob must be in [0, 1)")
    rng = np.random.default_rng(seed)
    grid = grid_graph(n, n)
    kinds = list(COMPONENT_PROBS)
    probs = np.array([COMPONENT_PROBS[k] for k in kinds])

    keep = rng.random(grid.n_edges) >= delete_prob
    uf = _UnionFind(n * n)
    for u, v in grid.edges[keep]:
        uf.union(int(u), int(v))
    if uf.count > 1:
        deleted = np.where(~keep)[0]
        for i in rng.permutation(deleted):
            u, v = grid.edges[i]
            if uf.union(int(u), int(v)):
                keep[i] = True
            if uf.count == 1:
                break
    edges = grid.edges[keep]

    comps = []
    for u, v in edges:
        kind = kinds[int(rng.choice(len(kinds), p=probs))]
        comps.append(_make_component(int(u), int(v), kind, rng))
    if not any(c.kind == KIND_BATTERY for c in comps):
        i = int(rng.integers(0, len(comps)))
        c = comps[i]
        comps[i] = _make_component(c.a, c.b, KIND_BATTERY, rng)
    return CircuitNetlist(n_nodes=n * n, components=comps, ground=n * n - 1)


def _make_component(u: int, v: int, kind: str, rng) -> Component:
    if kind == KIND_WIRE:
        return Component(u, v, KIND_WIRE)
    if kind == KIND_RESISTOR:
        return Component(u, v, KIND_RESISTOR,
                         resistance=float(rng.uniform(100.0, 1000.0)))
    voltage = float(rng.uniform(5.0, 20.0))
    positive = u if rng.random() < 0.5 else v
    return Component(u, v, KIND_BATTERY, resistance=BATTERY_INTERNAL_OHMS,
                     voltage=voltage, positive_terminal=positive)


def encode_circuit(net: CircuitNetlist, voltages: np.ndarray) -> UGraph:
    """Graph encoding: node features [is_ground] + 4-wide thermometer code of
    incident battery positive terminals; edge features [log(1+R), log(1+V)];
    targets are node voltages against ground."""
    voltages = np.asarray(voltages, dtype=np.float64).reshape(-1)
    if voltages.shape[0] != net.n_nodes:
        raise ValueError("voltage vector length mismatch")
    pos_counts = np.zeros(net.n_nodes, dtype=np.int64)
    edges, efeats = [], []
    for c in net.components:
        edges.append((c.a, c.b))
        efeats.append((np.log1p(c.resistance), np.log1p(c.voltage)))
        if c.kind == KIND_BATTERY:
            pos_counts[c.positive_terminal] += 1
    feats = np.zeros((net.n_nodes, 5))
    feats[net.ground, 0] = 1.0
    for u in range(net.n_nodes):
        feats[u, 1:1 + min(int(pos_counts[u]), 4)] = 1.0
    return UGraph(net.n_nodes, edges, node_features=feats,
                  edge_features=efeats, node_targets=voltages.reshape(-1, 1),
                  target_mask=np.ones(net.n_nodes))


@dataclass
class CircuitExample:
    netlist: CircuitNetlist
    graph: UGraph
    voltages: np.ndarray
    size: int
    seed: int
    generator: str = "grid"
    task: str = "circuits"


def make_circuit_example(n: int, seed, delete_prob: float | None = None) -> CircuitExample:
    from .circuit_oracle import solve_dc  # deferred: oracle depends on this module

    if delete_prob is None:
        delete_prob = circuit_delete_prob(n)
    net = generate_circuit(n, delete_prob, seed)
    voltages = solve_dc(net)
    return CircuitExample(netlist=net, graph=encode_circuit(net, voltages),
                          voltages=voltages, size=n, seed=_as_seed_int(seed))


# ---------------------------------------------------------------------------
# dataset builders


def example_seed(base_seed: int, index: int) -> int:
    """Deterministic per-example seed from a dataset seed and line index."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


def make_tree(generator: str, n: int, seed) -> UGraph:
    if generator == "dfs":
        return dfs_spanning_tree(n, seed)
    if generator == "prim":
        return prim_spanning_tree(n, seed)
    raise ValueError(f"unknown tree generator {generator!r}")


def generate_path_example(size: int, seed: int, generator: str = "dfs") -> PathExample:
    rng_seed = np.random.SeedSequence(seed)
    tree = make_tree(generator, size, rng_seed.spawn(1)[0])
    return make_path_example(tree, rng_seed.spawn(1)[0], generator=generator, size=size)


def generate_multipath_example(size: int, seed: int, generator: str = "dfs") -> PathExample:
    ss = np.random.SeedSequence(seed)
    tree_seed, k_seed, ex_seed = ss.spawn(3)
    tree = make_tree(generator, size, tree_seed)
    k_max = max(1, (3 * size) // 2)
    k_extra = int(np.random.default_rng(k_seed).integers(1, k_max + 1))
    ex = make_multipath_example(tree, k_extra, ex_seed, generator=generator, size=size)
    ex.seed = int(seed)
    return ex


def generate_maze_example(size: int, seed: int, generator: str = "dfs") -> MazeImage:
    ex = generate_path_example(size, seed, generator)
    maze = rasterize_maze(ex)
    maze.seed = int(seed)
    return maze


def generate_example(task: str, size: int, seed: int, generator: str = "dfs"):
    if task == "paths":
        ex = generate_path_example(size, seed, generator)
        ex.seed = int(seed)
        return ex
    if task == "multipath":
        return generate_multipath_example(size, seed, generator)
    if task == "maze-image":
        return generate_maze_example(size, seed, generator)
    if task == "circuits":
        return make_circuit_example(size, seed)
    raise ValueError(f"unknown task {task!r}")
