"""Pilot run for the scaled path-finding comparison (acceptance criterion 5)."""
import time

import numpy as np

from wavegraph.evaluation import accuracy_by_size
from wavegraph.models import parameter_count
from wavegraph.taskgen import generate_example, example_seed
from wavegraph.training import TrainConfig, train

TRAIN_SIZES = [3, 4, 5, 6]
TEST_SIZES = [3, 4, 5, 6, 7, 8]
TRAIN_PER_SIZE = 600
TEST_PER_SIZE = 250
ITERS = 10000

t0 = time.time()
train_data = {}
idx = 0
for s in TRAIN_SIZES:
    train_data[s] = []
    for _ in range(TRAIN_PER_SIZE):
        train_data[s].append(generate_example("paths", s, example_seed(555, idx)))
        idx += 1
test_data = []
idx = 0
for s in TEST_SIZES:
    for _ in range(TEST_PER_SIZE):
        test_data.append(generate_example("paths", s, example_seed(777000, idx)))
        idx += 1
print(f"datasets ready in {time.time()-t0:.1f}s", flush=True)

for name, spec in [
    ("wave", {"kind": "wave", "feature_width": 1, "edge_feature_width": 0,
              "state_size": 10, "passes": 1, "cell_kind": "dense-tanh"}),
    ("gconv", {"kind": "gconv", "feature_width": 1, "edge_feature_width": 0,
               "node_state_size": 5, "edge_state_size": 5, "passes": 5}),
]:
    t0 = time.time()
    config = TrainConfig(task="paths", model=spec, iterations=ITERS,
                         batch_size=50, learning_rate=1e-3,
                         curriculum_interval=1500, seed=42)
    result = train(config, train_data)
    dt = time.time() - t0
    print(f"{name}: {ITERS} iters in {dt/60:.1f} min, "
          f"final loss {result.final_loss:.4f}, params {parameter_count(result.model)}",
          flush=True)
    losses = [m[1] for m in result.metrics]
    print(f"  loss trace: {losses[0]:.3f} -> {losses[len(losses)//2]:.3f} -> {losses[-1]:.4f}")
    rows = accuracy_by_size(result.model, test_data)
    for r in rows:
        print(f"  {name} size {r['size']}: acc {r['value']:.3f} (n={r['n']})", flush=True)
