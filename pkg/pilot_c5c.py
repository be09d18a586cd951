"""gconv size-3 accuracy across training seeds: is perfection robust?"""
from wavegraph.evaluation import accuracy_by_size
from wavegraph.taskgen import generate_example, example_seed
from wavegraph.training import TrainConfig, train

train_data = {}
idx = 0
for s in (3, 4, 5, 6):
    train_data[s] = [generate_example("paths", s, example_seed(9155, idx + k))
                     for k in range(600)]
    idx += 600
test3 = [generate_example("paths", 3, example_seed(888003, i)) for i in range(4000)]
test4 = [generate_example("paths", 4, example_seed(888004, i)) for i in range(1500)]

spec = {"kind": "gconv", "feature_width": 1, "edge_feature_width": 0,
        "node_state_size": 5, "edge_state_size": 5, "passes": 5}
for seed in (1, 7, 123):
    config = TrainConfig(task="paths", model=spec, iterations=10_000, batch_size=50,
                         learning_rate=1e-3, curriculum_interval=1500, seed=seed)
    result = train(config, train_data)
    a3 = accuracy_by_size(result.model, test3)[0]["value"]
    a4 = accuracy_by_size(result.model, test4)[0]["value"]
    print(f"seed {seed}: size3 {a3:.5f}  size4 {a4:.5f}", flush=True)
