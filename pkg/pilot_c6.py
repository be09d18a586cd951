"""Pilot for the scaled circuit-regression comparison (criterion 6)."""
import time

import numpy as np

from wavegraph.evaluation import circuit_error_rows, predict_probs
from wavegraph.models import parameter_count
from wavegraph.taskgen import example_seed, make_circuit_example
from wavegraph.training import TrainConfig, train

t0 = time.time()
train_data = {}
idx = 0
for s, b in ((2, 100), (3, 90), (4, 80), (5, 70)):
    pool = 50 * b
    train_data[s] = [make_circuit_example(s, example_seed(61155, idx + k))
                     for k in range(pool)]
    idx += pool
test_data = []
idx = 0
for s in (4, 5, 6):
    for _ in range(100):
        test_data.append(make_circuit_example(s, example_seed(46800, idx)))
        idx += 1
print(f"datasets ready in {time.time()-t0:.1f}s "
      f"({sum(len(v) for v in train_data.values())} train examples)", flush=True)

for name, spec in [
    ("wave", {"kind": "wave", "feature_width": 5, "edge_feature_width": 2,
              "state_size": 20, "passes": 2, "cell_kind": "minigru",
              "head_activation": "identity"}),
    ("gconv", {"kind": "gconv", "feature_width": 5, "edge_feature_width": 2,
               "node_state_size": 15, "edge_state_size": 5, "passes": 5,
               "head_activation": "identity"}),
]:
    t0 = time.time()
    config = TrainConfig(task="circuits", model=spec, iterations=10_000,
                         batch_size={2: 100, 3: 90, 4: 80, 5: 70},
                         learning_rate=1e-3, curriculum_interval=1500, seed=7)
    result = train(config, train_data)
    rows = circuit_error_rows(test_data, predict_probs(result.model, test_data))
    rmse = {r["size"]: round(r["value"], 4) for r in rows if r["metric"] == "rmse"}
    pear = {r["size"]: round(r["value"], 3) for r in rows
            if r["metric"] == "mae_distance_pearson_r"}
    print(f"{name}: {(time.time()-t0)/60:.1f} min, params {parameter_count(result.model)}, "
          f"final loss {result.final_loss:.4f}", flush=True)
    print(f"  rmse: {rmse}; pearson(MAE, dist): {pear}", flush=True)
    losses = [m[1] for m in result.metrics]
    print(f"  loss trace: {losses[0]:.2f} -> {losses[len(losses)//2]:.3f} -> {losses[-1]:.4f}",
          flush=True)
