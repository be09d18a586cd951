"""The core contrast: one wave sweep moves information across the whole
graph, while P graph-convolution passes only reach P hops."""

import numpy as np

from wavegraph.graphcore import UGraph, bfs_schedule
from wavegraph.models import GraphBatch, GraphConvModel, PackedGraph, WaveModel

N = 20
g = UGraph(N, [(i, i + 1) for i in range(N - 1)], node_features=np.zeros((N, 1)))


def output_delta(model, packs_base, feats):
    base = model.predict(packs_base).data
    pert = model.predict(GraphBatch([PackedGraph(
        g.with_attributes(node_features=feats), packs_base.packs[0].sched)])).data
    return np.abs(base - pert).reshape(-1)


print(f"path graph with {N} nodes; perturb node 0's input feature\n")

sched = bfs_schedule(g, 0)  # wave rooted at one end
wave = WaveModel(1, 0, 6, passes=1, seed=3)
feats = np.zeros((N, 1))
feats[0, 0] = 1.0
dw = output_delta(wave, GraphBatch([PackedGraph(g, sched)]), feats)
print("wave, ONE forward-backward sweep:")
print("  |output change| per node:", np.array2string(dw, precision=1))
print(f"  every node moved: {bool(np.all(dw > 1e-12))}\n")

for passes in (3, 5):
    gconv = GraphConvModel(1, 0, 4, 3, passes=passes, seed=5)
    base = gconv.predict(GraphBatch([PackedGraph(g)])).data
    pert = gconv.predict(GraphBatch([PackedGraph(
        g.with_attributes(node_features=feats))])).data
    moved = np.abs(base - pert).reshape(-1) > 0
    print(f"graph convolution, {passes} passes:")
    print("  nodes affected:", "".join("x" if m else "." for m in moved),
          f"(exactly the first {passes + 1})")

print("\nBit-identical outputs beyond P hops are a structural property of")
print("local aggregation, not a numerical accident.")
