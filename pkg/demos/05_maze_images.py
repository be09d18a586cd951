"""Mazes as images: rasterize a spanning tree into a pixel grid, look at
the dynamic pass-count rule, and watch a short training run move the loss."""

import numpy as np

from wavegraph.models import GraphBatch, PackedGraph, WaveModel, dynamic_sweep_count
from wavegraph.taskgen import example_seed, generate_example, rasterize_maze
from wavegraph.training import TrainConfig, train

maze = rasterize_maze(generate_example("paths", 4, seed=8))
print(f"a size-4 maze rasterizes to {maze.side}x{maze.side} pixels "
      f"('o' marks the target path, 'G' the goals):\n")
print(maze.ascii_art())

print("\npixel graphs connect ALL adjacent pixels; walls are only features,")
print("so the wave can propagate over the whole image.")

print("\ndynamic wave chooses ceil((N+1)/2) sweeps for an NxN image:")
for cells in (2, 3, 5, 7):
    side = 2 * cells + 1
    print(f"  {side:2d}x{side} pixels -> {dynamic_sweep_count(side * side)} sweeps")

model = WaveModel(3, 0, 6, dynamic=True, seed=0)
batch = GraphBatch([PackedGraph(maze.graph)])
print(f"\nthis maze runs {model.sweep_count(batch)} forward-backward sweeps")

print("\nshort training run (dynamic wave, mazes of size 3):")
data = {3: [generate_example("maze-image", 3, example_seed(55, i))
            for i in range(120)]}
spec = {"kind": "wave", "feature_width": 3, "edge_feature_width": 0,
        "state_size": 10, "passes": 1, "dynamic": True}
config = TrainConfig(task="maze-image", model=spec, iterations=300,
                     batch_size=20, curriculum_interval=1500, seed=4)
result = train(config, data)
for it, loss, _, _ in result.metrics:
    print(f"  iteration {it:4d}: loss {loss:.4f}")
