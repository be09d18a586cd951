"""How wave orders a graph: breadth-first levels from the center,
tree vs cross edges, and the incoming lists that drive each update."""

import numpy as np

from wavegraph.graphcore import (EDGE_CROSS, EDGE_TREE, bfs_schedule,
                                 graph_center, grid_graph)

g = grid_graph(5, 5)
root = graph_center(g)
sched = bfs_schedule(g, root)

print(f"5x5 grid: {g.n_nodes} nodes, {g.n_edges} edges")
print(f"center (wave root): node {root}\n")

print("BFS levels (the wave front):")
for r in range(5):
    print("  " + " ".join(f"{sched.level[r * 5 + c]}" for c in range(5)))

n_tree = int((sched.edge_class == EDGE_TREE).sum())
n_cross = int((sched.edge_class == EDGE_CROSS).sum())
print(f"\n{n_tree} tree edges (the BFS spanning tree), {n_cross} cross edges")
print("cross edges connect nodes whose levels differ by at most 1:")
for eid in np.where(sched.edge_class == EDGE_CROSS)[0][:6]:
    u, v = g.edges[eid]
    print(f"  ({u}, {v}) levels {sched.level[u]}/{sched.level[v]}")

u = 12 + 1  # a node next to the center
fwd = sched.forward_incoming[u]
bwd = sched.backward_incoming[u]
print(f"\nnode {u} (level {sched.level[u]}):")
print(f"  forward pass reads from {[(v, 'same level' if s else 'ancestor') for v, _, s in fwd]}")
print(f"  backward pass reads from {[(v, 'same level' if s else 'descendant') for v, _, s in bwd]}")
print("\nforward sweeps walk levels 0, 1, 2, ...; backward sweeps walk back down.")
print("Same-level neighbors contribute their state from the previous half-sweep.")
