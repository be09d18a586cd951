import numpy as np
import pytest

from wavegraph import numcore as nc
from wavegraph.graphcore import (EDGE_CROSS, EDGE_TREE, UGraph, bfs_schedule,
                                 grid_graph)
from wavegraph.models import (DenseTanhCell, GraphBatch, GraphConvModel,
                              MiniGruCell, MixNetwork, PackedGraph, WaveModel,
                              dynamic_sweep_count, graphconv_forward,
                              minigru_step, mix_message, parameter_count,
                              wave_forward)
from wavegraph.numcore import DenseLayer, Tensor, grad_check


def _path_graph(n, features=None):
    return UGraph(n, [(i, i + 1) for i in range(n - 1)],
                  node_features=features if features is not None
                  else np.zeros((n, 1)))


# ---------------------------------------------------------------------------
# mix network


def test_mix_empty_incoming_is_bias():
    mix = MixNetwork(4, 0, np.random.default_rng(0))
    mix.b.data[...] = np.array([1.0, -2.0, 3.0, 4.0])
    out = mix_message(mix, np.ones(4), [])
    assert np.array_equal(out, mix.b.data)


def test_mix_single_incoming_softmax_weight_is_one():
    mix = MixNetwork(3, 0, np.random.default_rng(1))
    _, weights = mix_message(mix, np.ones(3), [(np.zeros(0), np.ones(3), EDGE_TREE)],
                             return_weights=True)
    assert np.allclose(weights, 1.0, atol=1e-15)


def test_mix_identical_inputs_give_half_weights():
    mix = MixNetwork(3, 0, np.random.default_rng(2))
    sv = np.array([0.3, -0.5, 0.9])
    incoming = [(np.zeros(0), sv, EDGE_TREE), (np.zeros(0), sv, EDGE_TREE)]
    _, weights = mix_message(mix, np.ones(3), incoming, return_weights=True)
    assert np.allclose(weights, 0.5, atol=1e-12)


def test_mix_softmax_weights_sum_to_one_random():
    rng = np.random.default_rng(3)
    mix = MixNetwork(5, 2, rng)
    incoming = [(rng.normal(size=2), rng.normal(size=5),
                 EDGE_TREE if rng.random() < 0.5 else EDGE_CROSS)
                for _ in range(6)]
    _, weights = mix_message(mix, rng.normal(size=5), incoming, return_weights=True)
    assert np.all(np.abs(weights.sum(axis=0) - 1.0) < 1e-12)


def test_mix_width_mismatch_rejected():
    mix = MixNetwork(3, 0, np.random.default_rng(4))
    with pytest.raises(ValueError):
        mix_message(mix, np.ones(2), [])
    with pytest.raises(ValueError):
        mix_message(mix, np.ones(3), [(np.zeros(1), np.ones(3), EDGE_TREE)])


def test_mix_message_is_weighted_sum_of_incoming_states():
    # with n2 silenced and w = 1, b = 0, the message is exactly the
    # softmax-weighted mean of incoming states
    rng = np.random.default_rng(5)
    mix = MixNetwork(3, 0, rng)
    mix.b.data[...] = 0.0
    mix.w.data[...] = 1.0
    for layer in (mix.n2_tree, mix.n2_cross):
        layer.weight.data[...] = 0.0
        layer.bias.data[...] = 0.0
    s1, s2 = rng.normal(size=3), rng.normal(size=3)
    out, weights = mix_message(mix, rng.normal(size=3),
                               [(np.zeros(0), s1, EDGE_TREE),
                                (np.zeros(0), s2, EDGE_TREE)],
                               return_weights=True)
    expected = weights[0] * s1 + weights[1] * s2
    assert np.allclose(out, expected, atol=1e-12)


# ---------------------------------------------------------------------------
# cells


def test_minigru_zero_weights_halves_state():
    cell = MiniGruCell(3, 3, np.random.default_rng(0))
    for _, t in cell.parameters():
        t.data[...] = 0.0
    s0 = np.array([2.0, -4.0, 1.0])
    out = minigru_step(cell, np.zeros(3), s0)
    assert np.allclose(out, 0.5 * s0, atol=1e-15)


def test_minigru_gate_limits():
    cell = MiniGruCell(2, 2, np.random.default_rng(1))
    for _, t in cell.parameters():
        t.data[...] = 0.0
    s0 = np.array([0.7, -0.3])
    x = np.array([1.0, 2.0])
    cell.b1.data[...] = -60.0  # gate closed: pure carry
    assert np.allclose(minigru_step(cell, x, s0), s0, atol=1e-12)
    cell.b1.data[...] = 60.0   # gate open: pure overwrite with o = elu(0) = 0
    assert np.allclose(minigru_step(cell, x, s0), 0.0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_minigru_convex_combination_bound(seed):
    rng = np.random.default_rng(seed)
    cell = MiniGruCell(4, 4, rng)
    x = Tensor(rng.normal(size=(6, 4)))
    s = Tensor(rng.normal(size=(6, 4)))
    u = nc.sigmoid(x @ cell.W1 + s @ cell.W2 + cell.b1).data
    o = nc.elu(x @ cell.W3 + s @ cell.W4 + cell.b2).data
    out = cell(x, s).data
    lo = np.minimum(s.data, o)
    hi = np.maximum(s.data, o)
    assert np.all(out >= lo - 1e-12) and np.all(out <= hi + 1e-12)


def test_minigru_grad_check():
    rng = np.random.default_rng(7)
    cell = MiniGruCell(3, 3, rng)
    x = rng.normal(size=(4, 3))
    s = rng.normal(size=(4, 3))

    def fn():
        out = cell(Tensor(x), Tensor(s))
        return nc.sum_all(out * out)

    report = grad_check(fn, cell.parameters())
    assert report.max_rel_error < 1e-4, str(report)


def test_mix_grad_check():
    rng = np.random.default_rng(8)
    mix = MixNetwork(3, 1, rng)
    s_u = rng.normal(size=(5, 3))
    s_v = rng.normal(size=(5, 3))
    ef = rng.normal(size=(5, 1))
    seg = np.array([0, 0, 1, 1, 1])

    def fn():
        m = mix.message(Tensor(s_u), Tensor(s_v), ef, seg, 2, 2)
        return nc.sum_all(m * m)

    report = grad_check(fn, mix.parameters())
    assert report.max_rel_error < 1e-4, str(report)


# ---------------------------------------------------------------------------
# wave model


def test_wave_single_node_graph_applies_cell_twice():
    g = UGraph(1, np.zeros((0, 2)), node_features=np.array([[0.4]]))
    model = WaveModel(1, 0, 3, passes=1, seed=2)
    sched = bfs_schedule(g, 0)
    states = wave_forward(model, g, sched)

    s0 = model.embed(Tensor(np.array([[0.4]])))
    sw = model.sweeps[0]
    b_fwd = Tensor(np.tile(sw.fwd_mix.b.data, (1, 1)))
    b_bwd = Tensor(np.tile(sw.bwd_mix.b.data, (1, 1)))
    s1 = sw.fwd_cell(b_fwd, s0)
    s2 = sw.bwd_cell(b_bwd, s1)
    assert np.allclose(states, s2.data, atol=1e-15)


def test_wave_forward_sweep_reaches_last_node_from_first():
    # one directional pass on a path rooted at node 0 already carries the
    # first node's input to the last node
    n = 8
    feats = np.zeros((n, 1))
    g = _path_graph(n, feats)
    model = WaveModel(1, 0, 5, passes=1, seed=4)
    sched = bfs_schedule(g, 0)
    base = wave_forward(model, g, sched)

    feats2 = feats.copy()
    feats2[0, 0] = 2.0
    pert = wave_forward(model, g.with_attributes(node_features=feats2), sched)
    assert abs(base[n - 1] - pert[n - 1]).max() > 1e-12


def test_wave_reach_one_sweep_touches_all_pairs_on_end_rooted_path():
    n = 20
    g = _path_graph(n)
    model = WaveModel(1, 0, 6, passes=1, seed=5)
    sched = bfs_schedule(g, 0)
    base = model.predict(GraphBatch([PackedGraph(g, sched)])).data
    for j in [0, 3, 11, 19]:
        feats = np.zeros((n, 1))
        feats[j, 0] = 1.0
        pert = model.predict(GraphBatch([PackedGraph(
            g.with_attributes(node_features=feats), sched)])).data
        assert np.all(np.abs(base - pert) > 1e-12), f"node {j} not reaching all"


def test_wave_dynamic_sweep_rule():
    assert dynamic_sweep_count(49) == 4   # 7x7 image
    assert dynamic_sweep_count(25) == 3
    assert dynamic_sweep_count(1) == 1
    with pytest.raises(ValueError):
        dynamic_sweep_count(30)


def test_wave_dynamic_equals_fixed_with_tied_parameters():
    g = grid_graph(5, 5)
    g = g.with_attributes(node_features=np.linspace(0, 1, 25).reshape(-1, 1))
    dyn = WaveModel(1, 0, 4, passes=1, dynamic=True, seed=9)
    fixed = WaveModel(1, 0, 4, passes=3, dynamic=False, seed=10)
    # tie every fixed sweep to the dynamic parameter set
    src = dict(dyn.parameters())
    for i in range(3):
        for name, t in fixed.sweeps[i].parameters():
            t.data[...] = src[f"sweep0.{name}"].data
    for part in ("embed", "head"):
        for name, t in getattr(fixed, part).parameters():
            t.data[...] = src[f"{part}.{name}"].data
    batch = GraphBatch([PackedGraph(g)])
    assert dyn.sweep_count(batch) == 3
    assert np.array_equal(dyn.predict(batch).data, fixed.predict(batch).data)


def test_wave_batched_matches_single(seed=0):
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(3):
        n = int(rng.integers(4, 9))
        edges = [(i, int(rng.integers(0, i))) for i in range(1, n)]
        graphs.append(UGraph(n, edges, node_features=rng.normal(size=(n, 1))))
    model = WaveModel(1, 0, 4, passes=2, seed=1)
    batch = GraphBatch([PackedGraph(g) for g in graphs])
    merged = model.predict(batch).data
    parts = batch.split_nodes(merged)
    for g, part in zip(graphs, parts):
        single = model.predict(GraphBatch([PackedGraph(g)])).data
        assert np.allclose(single, part, atol=1e-12)


def test_wave_grad_check_on_grid():
    g = grid_graph(3, 3)
    g = g.with_attributes(node_features=np.linspace(-1, 1, 9).reshape(-1, 1))
    model = WaveModel(1, 0, 3, passes=1, seed=6)
    t = np.tile([0.0, 1.0, 1.0], 3).reshape(-1, 1)

    def fn():
        pred = model.predict(GraphBatch([PackedGraph(g)]))
        return nc.cross_entropy_loss(pred, t, np.ones((9, 1)))

    report = grad_check(fn, model.parameters())
    assert report.max_rel_error < 1e-4, str(report)


def test_wave_minigru_grad_check():
    g = grid_graph(2, 3)
    g = g.with_attributes(node_features=np.linspace(-1, 1, 6).reshape(-1, 1))
    model = WaveModel(1, 0, 3, passes=1, cell_kind="minigru",
                      head_activation="identity", seed=13)

    def fn():
        pred = model.predict(GraphBatch([PackedGraph(g)]))
        return nc.mse_loss(pred, np.zeros((6, 1)), np.ones((6, 1)))

    report = grad_check(fn, model.parameters())
    assert report.max_rel_error < 1e-4, str(report)


# ---------------------------------------------------------------------------
# graph convolution


def test_gconv_isolated_node_keeps_empty_message():
    g = UGraph(1, np.zeros((0, 2)), node_features=np.array([[0.3]]))
    model = GraphConvModel(1, 0, 3, 2, passes=2, seed=3)
    states = graphconv_forward(model, g)
    # hand-rolled: message is the zero vector at every pass
    s = model.node_embed(Tensor(np.array([[0.3]])))
    for cp in model.conv:
        s = cp.r1(nc.concat([s, Tensor(np.zeros((1, 3)))], axis=1))
    assert np.allclose(states, s.data, atol=1e-15)


def test_gconv_edge_messages_symmetric():
    rng = np.random.default_rng(4)
    model = GraphConvModel(1, 0, 3, 2, passes=1, seed=5)
    su = Tensor(rng.normal(size=(1, 3)))
    sv = Tensor(rng.normal(size=(1, 3)))
    cp = model.conv[0]
    m_uv = cp.c2(nc.concat([su, sv], axis=1)).data + cp.c2(nc.concat([sv, su], axis=1)).data
    m_vu = cp.c2(nc.concat([sv, su], axis=1)).data + cp.c2(nc.concat([su, sv], axis=1)).data
    assert np.array_equal(m_uv, m_vu)


@pytest.mark.parametrize("passes", [1, 2, 3])
def test_gconv_locality_bound(passes):
    n = 10
    g = _path_graph(n)
    model = GraphConvModel(1, 0, 4, 3, passes=passes, seed=7)
    base = model.predict(GraphBatch([PackedGraph(g)])).data
    feats = np.zeros((n, 1))
    feats[n - 1, 0] = 3.0
    pert = model.predict(GraphBatch([PackedGraph(
        g.with_attributes(node_features=feats))])).data
    dist_from_pert = np.abs(np.arange(n) - (n - 1))
    for u in range(n):
        if dist_from_pert[u] > passes:
            assert base[u, 0] == pert[u, 0], f"node {u} changed beyond {passes} hops"
    assert base[n - 1, 0] != pert[n - 1, 0]


def test_gconv_grad_check():
    g = grid_graph(3, 3)
    g = g.with_attributes(node_features=np.linspace(-1, 1, 9).reshape(-1, 1))
    model = GraphConvModel(1, 0, 3, 2, passes=2, seed=8)
    t = np.tile([1.0, 0.0, 0.0], 3).reshape(-1, 1)

    def fn():
        pred = model.predict(GraphBatch([PackedGraph(g)]))
        return nc.cross_entropy_loss(pred, t, np.ones((9, 1)))

    report = grad_check(fn, model.parameters())
    assert report.max_rel_error < 1e-4, str(report)


# ---------------------------------------------------------------------------
# readout and parameter counts


def test_readout_zero_state_gives_half_probability_and_zero_volts():
    head_sig = DenseLayer(4, 1, "sigmoid")
    head_sig.weight.data[...] = 0.0
    assert np.allclose(head_sig(Tensor(np.zeros((3, 4)))).data, 0.5)
    head_lin = DenseLayer(4, 1, "identity")
    head_lin.weight.data[...] = 0.0
    assert np.allclose(head_lin(Tensor(np.zeros((3, 4)))).data, 0.0)


def test_parameter_count_formulas():
    assert parameter_count(DenseLayer(10, 5)) == 55
    assert parameter_count(MiniGruCell(10, 10)) == 420
    assert parameter_count(DenseTanhCell(10, 10)) == 210


def test_parameter_count_paper_configurations():
    # reported figures, not asserted against the paper's exact counts
    wave_paths = WaveModel(1, 0, 10, passes=1, seed=0)
    gconv_paths = GraphConvModel(1, 0, 5, 5, passes=10, seed=0)
    wave_circ = WaveModel(5, 2, 20, passes=1, cell_kind="minigru",
                          head_activation="identity", seed=0)
    counts = {
        "wave_paths": parameter_count(wave_paths),
        "gconv_paths_10": parameter_count(gconv_paths),
        "wave_circuits_1": parameter_count(wave_circ),
    }
    print("parameter counts:", counts)
    # shape arithmetic for this implementation
    mix = 4 * (20 + 1) * 10 + 20
    cell = (20 + 1) * 10
    assert counts["wave_paths"] == 2 * (mix + cell) + 2 * 10 + 11


def test_model_spec_roundtrip():
    from wavegraph.models import model_from_spec

    for m in (WaveModel(2, 1, 5, passes=2, cell_kind="minigru", seed=42),
              GraphConvModel(2, 1, 4, 3, passes=3, seed=9)):
        clone = model_from_spec(m.spec())
        for (n1, t1), (n2, t2) in zip(m.parameters(), clone.parameters()):
            assert n1 == n2
            assert np.array_equal(t1.data, t2.data)
