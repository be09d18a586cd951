"""Wave networks and the graph-convolution baseline.

Wave propagates node states outward from a root in breadth-first level
order and back, so one forward-backward sweep moves information across
the whole graph; graph convolution aggregates one hop per pass. Both run
over a batch of graphs packed into a disjoint union so every level (or
pass) is one set of array ops on the tape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numcore as nc
from .graphcore import EDGE_TREE, BfsSchedule, UGraph, bfs_schedule, graph_center
from .numcore import DenseLayer, Tensor

CELL_KINDS = ("dense-tanh", "minigru")


# ---------------------------------------------------------------------------
# recurrent cells


class MiniGruCell:
    """Gated recurrent cell without a read gate.

    u = sigmoid(x W1 + s W2 + b1), o = elu(x W3 + s W4 + b2),
    s' = (1-u) * s + u * o.
    """

    def __init__(self, input_size: int, state_size: int,
                 rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng(0)
        self.input_size = input_size
        self.state_size = state_size

        def w(fan_in):
            limit = nc.glorot_limit(fan_in, state_size)
            return Tensor(rng.uniform(-limit, limit, size=(fan_in, state_size)),
                          requires_grad=True)

        self.W1, self.W3 = w(input_size), w(input_size)
        self.W2, self.W4 = w(state_size), w(state_size)
        self.b1 = Tensor(np.zeros(state_size), requires_grad=True)
        self.b2 = Tensor(np.zeros(state_size), requires_grad=True)

    def __call__(self, x: Tensor, s: Tensor) -> Tensor:
        if x.data.shape[1] != self.input_size or s.data.shape[1] != self.state_size:
            raise ValueError("miniGRU width mismatch")
        u = nc.sigmoid(x @ self.W1 + s @ self.W2 + self.b1)
        o = nc.elu(x @ self.W3 + s @ self.W4 + self.b2)
        return (Tensor(1.0) - u) * s + u * o

    def parameters(self):
        return [("W1", self.W1), ("W2", self.W2), ("W3", self.W3), ("W4", self.W4),
                ("b1", self.b1), ("b2", self.b2)]


def minigru_step(cell: MiniGruCell, x, s) -> np.ndarray:
    """Single-vector convenience wrapper around the batched cell."""
    xt = Tensor(np.asarray(x, dtype=np.float64).reshape(1, -1))
    st = Tensor(np.asarray(s, dtype=np.float64).reshape(1, -1))
    return cell(xt, st).data[0]


class DenseTanhCell:
    """s' = tanh(dense(concat(state, message)))."""

    def __init__(self, input_size: int, state_size: int,
                 rng: np.random.Generator | None = None):
        self.input_size = input_size
        self.state_size = state_size
        self.dense = DenseLayer(state_size + input_size, state_size, "tanh", rng)

    def __call__(self, x: Tensor, s: Tensor) -> Tensor:
        return self.dense(nc.concat([s, x], axis=1))

    def parameters(self):
        return [("dense." + n, t) for n, t in self.dense.parameters()]


def make_cell(kind: str, input_size: int, state_size: int, rng):
    if kind == "minigru":
        return MiniGruCell(input_size, state_size, rng)
    if kind == "dense-tanh":
        return DenseTanhCell(input_size, state_size, rng)
    raise ValueError(f"unknown cell kind {kind!r}")


# ---------------------------------------------------------------------------
# mix network


class MixNetwork:
    """Wave's message function over incoming neighbor states.

    Two weighted sums of the incoming states: one weighted per element by a
    softmax over the exp-activated network n1, one by the softsign-activated
    network n2; both networks see concat(s_u_prev, E_uv, s_v) and come in a
    tree/cross parameter pair selected per edge. No incoming edges gives
    exactly the bias b.
    """

    def __init__(self, state_size: int, edge_feature_width: int,
                 rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng(0)
        self.state_size = state_size
        self.edge_feature_width = edge_feature_width
        in_w = 2 * state_size + edge_feature_width
        self.n1_tree = DenseLayer(in_w, state_size, "exp", rng)
        self.n1_cross = DenseLayer(in_w, state_size, "exp", rng)
        self.n2_tree = DenseLayer(in_w, state_size, "softsign", rng)
        self.n2_cross = DenseLayer(in_w, state_size, "softsign", rng)
        limit = nc.glorot_limit(1, 1)
        self.w = Tensor(rng.uniform(-limit, limit, size=state_size), requires_grad=True)
        self.b = Tensor(np.zeros(state_size), requires_grad=True)

    def message(self, s_u: Tensor, s_v: Tensor, edge_feats: np.ndarray,
                seg: np.ndarray, n_targets: int, n_tree: int,
                return_weights: bool = False):
        """Messages for ``n_targets`` nodes from per-edge rows.

        Edge rows are ordered tree-first: rows [0, n_tree) go through the
        tree parameters, the rest through cross. ``seg[i]`` is the target
        node position of edge row i.
        """
        d = self.state_size
        if s_u.data.shape[1] != d or s_v.data.shape[1] != d:
            raise ValueError("mix network state width mismatch")
        if edge_feats.shape[1] != self.edge_feature_width:
            raise ValueError("mix network edge feature width mismatch")
        n_edges = s_v.data.shape[0]
        x = nc.concat([s_u, Tensor(edge_feats), s_v], axis=1)
        tree_rows = np.arange(n_tree)
        cross_rows = np.arange(n_tree, n_edges)
        x_tree = nc.gather_rows(x, tree_rows)
        x_cross = nc.gather_rows(x, cross_rows)
        z1 = nc.concat([self.n1_tree.preactivation(x_tree),
                        self.n1_cross.preactivation(x_cross)], axis=0)
        # softmax of the n1 pre-activations == n1 outputs normalized by their
        # per-target sum (n1 is exp-activated), computed stably
        a = nc.segment_softmax(z1, seg, n_targets)
        g2 = nc.concat([self.n2_tree(x_tree), self.n2_cross(x_cross)], axis=0)
        part1 = nc.segment_sum(self.w * s_v * a, seg, n_targets)
        part2 = nc.segment_sum(s_v * g2, seg, n_targets)
        m = self.b + part1 + part2
        if return_weights:
            return m, a
        return m

    def parameters(self):
        out = [("w", self.w), ("b", self.b)]
        for tag, layer in (("n1_tree", self.n1_tree), ("n1_cross", self.n1_cross),
                           ("n2_tree", self.n2_tree), ("n2_cross", self.n2_cross)):
            out.extend((f"{tag}.{n}", t) for n, t in layer.parameters())
        return out


def mix_message(mix: MixNetwork, s_u_prev, incoming, return_weights: bool = False):
    """Single-node message: ``incoming`` is a list of
    (edge_features, neighbor_state, edge_class) triples."""
    d = mix.state_size
    s_u_prev = np.asarray(s_u_prev, dtype=np.float64).reshape(-1)
    if s_u_prev.shape[0] != d:
        raise ValueError("node state width mismatch")
    ordered = ([e for e in incoming if e[2] == EDGE_TREE]
               + [e for e in incoming if e[2] != EDGE_TREE])
    n_tree = sum(1 for e in incoming if e[2] == EDGE_TREE)
    n = len(ordered)
    efeat = np.zeros((n, mix.edge_feature_width))
    svs = np.zeros((n, d))
    for i, (ef, sv, _) in enumerate(ordered):
        ef = np.asarray(ef, dtype=np.float64).reshape(-1)
        sv = np.asarray(sv, dtype=np.float64).reshape(-1)
        if ef.shape[0] != mix.edge_feature_width or sv.shape[0] != d:
            raise ValueError("incoming width mismatch")
        efeat[i] = ef
        svs[i] = sv
    s_u = Tensor(np.tile(s_u_prev, (n, 1)))
    out = mix.message(s_u, Tensor(svs), efeat, np.zeros(n, dtype=np.intp), 1,
                      n_tree, return_weights=return_weights)
    if return_weights:
        m, a = out
        return m.data[0], a.data
    return out.data[0]


# ---------------------------------------------------------------------------
# packed graphs / batches


@dataclass
class _DirPack:
    src: np.ndarray   # source node id per incoming edge row (tree rows first)
    seg: np.ndarray   # target position within the level per row
    eix: np.ndarray   # edge index per row
    n_tree: int


@dataclass
class _LevelPack:
    nodes: np.ndarray
    fwd: _DirPack
    bwd: _DirPack


class PackedGraph:
    """A graph with its schedule flattened into per-level index arrays."""

    def __init__(self, graph: UGraph, sched: BfsSchedule | None = None,
                 root: int | None = None):
        if sched is None:
            sched = bfs_schedule(graph, graph_center(graph) if root is None else root)
        self.graph = graph
        self.sched = sched
        self.levels = []
        for l in range(sched.n_levels):
            nodes = sched.nodes_at_level(l)
            pos = {int(u): i for i, u in enumerate(nodes)}
            packs = []
            for incoming in (sched.forward_incoming, sched.backward_incoming):
                src, seg, eix = [], [], []
                for cls_tree in (True, False):
                    for u in nodes:
                        for v, eid, _same in incoming[int(u)]:
                            if (sched.edge_class[eid] == EDGE_TREE) == cls_tree:
                                src.append(v)
                                seg.append(pos[int(u)])
                                eix.append(eid)
                n_tree = sum(1 for u in nodes for v, eid, _ in incoming[int(u)]
                             if sched.edge_class[eid] == EDGE_TREE)
                packs.append(_DirPack(np.asarray(src, dtype=np.intp),
                                      np.asarray(seg, dtype=np.intp),
                                      np.asarray(eix, dtype=np.intp), n_tree))
            self.levels.append(_LevelPack(nodes, packs[0], packs[1]))
        # directed arcs (u <- v) for graph convolution
        tgt = np.concatenate([graph.edges[:, 0], graph.edges[:, 1]])
        src = np.concatenate([graph.edges[:, 1], graph.edges[:, 0]])
        eix = np.tile(np.arange(graph.n_edges), 2)
        self.arcs = (tgt.astype(np.intp), src.astype(np.intp), eix.astype(np.intp))


class GraphBatch:
    """Disjoint union of packed graphs with per-level merged index arrays."""

    def __init__(self, packs):
        packs = list(packs)
        if not packs:
            raise ValueError("empty batch")
        self.packs = packs
        graphs = [p.graph for p in packs]
        self.n_nodes = sum(g.n_nodes for g in graphs)
        self.node_offset = np.cumsum([0] + [g.n_nodes for g in graphs])[:-1]
        self.edge_offset = np.cumsum([0] + [g.n_edges for g in graphs])[:-1]
        self.features = np.concatenate([g.node_features for g in graphs], axis=0)
        self.edge_features = np.concatenate([g.edge_features for g in graphs], axis=0)
        self.targets = np.concatenate([g.node_targets for g in graphs], axis=0)
        self.mask = np.concatenate([g.target_mask for g in graphs], axis=0)
        self.sizes = [g.n_nodes for g in graphs]

        self.levels = []
        max_levels = max(len(p.levels) for p in packs)
        for l in range(max_levels):
            nodes = []
            parts = {"fwd": {"tree": [], "cross": []}, "bwd": {"tree": [], "cross": []}}
            base = 0
            for k, p in enumerate(packs):
                if l >= len(p.levels):
                    continue
                lv = p.levels[l]
                nodes.append(lv.nodes + self.node_offset[k])
                for key, dp in (("fwd", lv.fwd), ("bwd", lv.bwd)):
                    parts[key]["tree"].append((dp.src[:dp.n_tree] + self.node_offset[k],
                                               dp.seg[:dp.n_tree] + base,
                                               dp.eix[:dp.n_tree] + self.edge_offset[k]))
                    parts[key]["cross"].append((dp.src[dp.n_tree:] + self.node_offset[k],
                                                dp.seg[dp.n_tree:] + base,
                                                dp.eix[dp.n_tree:] + self.edge_offset[k]))
                base += len(lv.nodes)
            merged = {}
            for key in ("fwd", "bwd"):
                chunks = parts[key]["tree"] + parts[key]["cross"]
                src = np.concatenate([c[0] for c in chunks])
                seg = np.concatenate([c[1] for c in chunks])
                eix = np.concatenate([c[2] for c in chunks])
                n_tree = sum(len(c[0]) for c in parts[key]["tree"])
                merged[key] = _DirPack(src.astype(np.intp), seg.astype(np.intp),
                                       eix.astype(np.intp), n_tree)
            self.levels.append(_LevelPack(np.concatenate(nodes).astype(np.intp),
                                          merged["fwd"], merged["bwd"]))

        self.arcs = (
            np.concatenate([p.arcs[0] + off for p, off in zip(packs, self.node_offset)]),
            np.concatenate([p.arcs[1] + off for p, off in zip(packs, self.node_offset)]),
            np.concatenate([p.arcs[2] + off for p, off in zip(packs, self.edge_offset)]),
        )

    @classmethod
    def from_graphs(cls, graphs, scheds=None):
        if scheds is None:
            return cls([PackedGraph(g) for g in graphs])
        return cls([PackedGraph(g, s) for g, s in zip(graphs, scheds)])

    def split_nodes(self, values: np.ndarray):
        """Split a [n_total x k] array back into per-graph arrays."""
        bounds = np.cumsum(self.sizes)[:-1]
        return np.split(values, bounds, axis=0)


# ---------------------------------------------------------------------------
# wave model


class _SweepParams:
    def __init__(self, state_size, edge_feature_width, cell_kind, rng):
        self.fwd_mix = MixNetwork(state_size, edge_feature_width, rng)
        self.fwd_cell = make_cell(cell_kind, state_size, state_size, rng)
        self.bwd_mix = MixNetwork(state_size, edge_feature_width, rng)
        self.bwd_cell = make_cell(cell_kind, state_size, state_size, rng)

    def parameters(self):
        out = []
        for tag, obj in (("fwd_mix", self.fwd_mix), ("fwd_cell", self.fwd_cell),
                         ("bwd_mix", self.bwd_mix), ("bwd_cell", self.bwd_cell)):
            out.extend((f"{tag}.{n}", t) for n, t in obj.parameters())
        return out


def dynamic_sweep_count(n_nodes: int) -> int:
    """ceil((N+1)/2) sweeps for an N x N node grid."""
    side = math.isqrt(n_nodes)
    if side * side != n_nodes:
        raise ValueError("dynamic pass rule needs a square grid graph")
    return (side + 2) // 2


class WaveModel:
    """Wave network: embed, P forward-backward sweeps, per-node readout.

    Fixed-pass models hold distinct parameters per sweep; dynamic models
    share one sweep's parameters and choose the sweep count from the grid
    side of the input.
    """

    kind = "wave"

    def __init__(self, feature_width: int, edge_feature_width: int, state_size: int,
                 passes: int = 1, cell_kind: str = "dense-tanh",
                 head_activation: str = "sigmoid", dynamic: bool = False,
                 seed: int = 0):
        if cell_kind not in CELL_KINDS:
            raise ValueError(f"unknown cell kind {cell_kind!r}")
        self.feature_width = feature_width
        self.edge_feature_width = edge_feature_width
        self.state_size = state_size
        self.passes = passes
        self.cell_kind = cell_kind
        self.head_activation = head_activation
        self.dynamic = dynamic
        self.seed = seed
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        self.embed = DenseLayer(feature_width, state_size, "tanh", rng)
        n_sets = 1 if dynamic else passes
        self.sweeps = [_SweepParams(state_size, edge_feature_width, cell_kind, rng)
                       for _ in range(n_sets)]
        self.head = DenseLayer(state_size, 1, head_activation, rng)

    def sweep_count(self, batch: GraphBatch) -> int:
        if not self.dynamic:
            return self.passes
        sizes = set(batch.sizes)
        if len(sizes) != 1:
            raise ValueError("dynamic wave needs uniform graph sizes per batch")
        return dynamic_sweep_count(sizes.pop())

    def _run_direction(self, states: Tensor, batch: GraphBatch, mix, cell,
                       ascending: bool) -> Tensor:
        levels = batch.levels if ascending else list(reversed(batch.levels))
        for lv in levels:
            dp = lv.fwd if ascending else lv.bwd
            s_u = nc.gather_rows(states, lv.nodes)
            s_u_edges = nc.gather_rows(s_u, dp.seg)
            s_v = nc.gather_rows(states, dp.src)
            m = mix.message(s_u_edges, s_v, batch.edge_features[dp.eix],
                            dp.seg, len(lv.nodes), dp.n_tree)
            states = nc.scatter_rows(states, lv.nodes, cell(m, s_u))
        return states

    def forward(self, batch: GraphBatch) -> Tensor:
        if batch.features.shape[1] != self.feature_width:
            raise ValueError("node feature width mismatch")
        states = self.embed(Tensor(batch.features))
        for p in range(self.sweep_count(batch)):
            params = self.sweeps[0 if self.dynamic else p]
            states = self._run_direction(states, batch, params.fwd_mix,
                                         params.fwd_cell, ascending=True)
            states = self._run_direction(states, batch, params.bwd_mix,
                                         params.bwd_cell, ascending=False)
        return states

    def predict(self, batch: GraphBatch) -> Tensor:
        return self.head(self.forward(batch))

    def parameters(self):
        out = [("embed." + n, t) for n, t in self.embed.parameters()]
        for i, sw in enumerate(self.sweeps):
            out.extend((f"sweep{i}.{n}", t) for n, t in sw.parameters())
        out.extend(("head." + n, t) for n, t in self.head.parameters())
        return out

    def spec(self) -> dict:
        return {"kind": self.kind, "feature_width": self.feature_width,
                "edge_feature_width": self.edge_feature_width,
                "state_size": self.state_size, "passes": self.passes,
                "cell_kind": self.cell_kind, "head_activation": self.head_activation,
                "dynamic": self.dynamic, "seed": self.seed}


def wave_forward(model: WaveModel, g: UGraph, sched: BfsSchedule) -> np.ndarray:
    """Per-node states for a single graph under a given schedule."""
    return model.forward(GraphBatch([PackedGraph(g, sched)])).data


# ---------------------------------------------------------------------------
# graph convolution baseline


class _ConvPass:
    def __init__(self, node_size, edge_size, rng):
        self.c1 = DenseLayer(edge_size + node_size, node_size, "elu", rng)
        self.r1 = DenseLayer(2 * node_size, node_size, "elu", rng)
        self.c2 = DenseLayer(2 * node_size, edge_size, "elu", rng)
        self.r2 = DenseLayer(2 * edge_size, edge_size, "elu", rng)

    def parameters(self):
        out = []
        for tag, layer in (("c1", self.c1), ("r1", self.r1),
                           ("c2", self.c2), ("r2", self.r2)):
            out.extend((f"{tag}.{n}", t) for n, t in layer.parameters())
        return out


class GraphConvModel:
    """Local-aggregation baseline with distinct parameters per pass.

    Per pass: M_u = sum_v c1(E_uv, S_v); S_u' = R1(S_u, M_u);
    M_uv = c2(S_u, S_v) + c2(S_v, S_u); E_uv' = R2(E_uv, M_uv); all from
    previous-pass states simultaneously.
    """

    kind = "gconv"

    def __init__(self, feature_width: int, edge_feature_width: int,
                 node_state_size: int, edge_state_size: int, passes: int = 5,
                 head_activation: str = "sigmoid", seed: int = 0):
        self.feature_width = feature_width
        self.edge_feature_width = edge_feature_width
        self.node_state_size = node_state_size
        self.edge_state_size = edge_state_size
        self.passes = passes
        self.head_activation = head_activation
        self.seed = seed
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        self.node_embed = DenseLayer(feature_width, node_state_size, "tanh", rng)
        self.edge_embed = DenseLayer(edge_feature_width, edge_state_size, "tanh", rng)
        self.conv = [_ConvPass(node_state_size, edge_state_size, rng)
                     for _ in range(passes)]
        self.head = DenseLayer(node_state_size, 1, head_activation, rng)

    def forward(self, batch: GraphBatch) -> Tensor:
        if batch.features.shape[1] != self.feature_width:
            raise ValueError("node feature width mismatch")
        s = self.node_embed(Tensor(batch.features))
        e = self.edge_embed(Tensor(batch.edge_features))
        tgt, src, eix = batch.arcs
        n = batch.n_nodes
        eu = batch.arcs[0][: len(batch.arcs[0]) // 2]
        ev = batch.arcs[1][: len(batch.arcs[1]) // 2]
        for cp in self.conv:
            msg_in = nc.concat([nc.gather_rows(e, eix), nc.gather_rows(s, src)], axis=1)
            m_node = nc.segment_sum(cp.c1(msg_in), tgt, n)
            s_new = cp.r1(nc.concat([s, m_node], axis=1))
            su, sv = nc.gather_rows(s, eu), nc.gather_rows(s, ev)
            m_edge = cp.c2(nc.concat([su, sv], axis=1)) + cp.c2(nc.concat([sv, su], axis=1))
            e_new = cp.r2(nc.concat([e, m_edge], axis=1))
            s, e = s_new, e_new
        return s

    def predict(self, batch: GraphBatch) -> Tensor:
        return self.head(self.forward(batch))

    def parameters(self):
        out = [("node_embed." + n, t) for n, t in self.node_embed.parameters()]
        out.extend(("edge_embed." + n, t) for n, t in self.edge_embed.parameters())
        for i, cp in enumerate(self.conv):
            out.extend((f"pass{i}.{n}", t) for n, t in cp.parameters())
        out.extend(("head." + n, t) for n, t in self.head.parameters())
        return out

    def spec(self) -> dict:
        return {"kind": self.kind, "feature_width": self.feature_width,
                "edge_feature_width": self.edge_feature_width,
                "node_state_size": self.node_state_size,
                "edge_state_size": self.edge_state_size, "passes": self.passes,
                "head_activation": self.head_activation, "seed": self.seed}


def graphconv_forward(model: GraphConvModel, g: UGraph) -> np.ndarray:
    return model.forward(GraphBatch([PackedGraph(g)])).data


# ---------------------------------------------------------------------------
# shared helpers


def readout(head: DenseLayer, states: Tensor) -> Tensor:
    return head(states)


def parameter_count(model) -> int:
    return sum(t.data.size for _, t in model.parameters())


def model_from_spec(spec: dict):
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind == "wave":
        return WaveModel(**spec)
    if kind == "gconv":
        return GraphConvModel(**spec)
    raise ValueError(f"unknown model kind {kind!r}")
