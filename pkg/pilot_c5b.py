"""Measure gconv's true small-size accuracy with a large held-out set."""
import time

import numpy as np

from wavegraph.evaluation import accuracy_by_size
from wavegraph.taskgen import generate_example, example_seed
from wavegraph.training import TrainConfig, train

train_data = {}
idx = 0
for s in (3, 4, 5, 6):
    train_data[s] = [generate_example("paths", s, example_seed(9155, idx + k))
                     for k in range(600)]
    idx += 600

spec = {"kind": "gconv", "feature_width": 1, "edge_feature_width": 0,
        "node_state_size": 5, "edge_state_size": 5, "passes": 5}
config = TrainConfig(task="paths", model=spec, iterations=10_000, batch_size=50,
                     learning_rate=1e-3, curriculum_interval=1500, seed=42)
t0 = time.time()
result = train(config, train_data)
print(f"gconv retrained in {(time.time()-t0)/60:.1f} min", flush=True)

for size, count in ((3, 4000), (4, 2000)):
    test = [generate_example("paths", size, example_seed(888000 + size, i))
            for i in range(count)]
    rows = accuracy_by_size(result.model, test)
    acc = rows[0]["value"]
    print(f"gconv size {size}: acc {acc:.5f} over {count} -> "
          f"{int(round((1 - acc) * count))} errors", flush=True)
