"""Maze smoke variants: which faithful config reaches a 10x loss drop in 3000 iters?"""
import time
import numpy as np
from wavegraph.taskgen import generate_example, example_seed
from wavegraph.training import TrainConfig, train, batch_loss

def run(tag, sizes, spec, iters=3000, interval=1500, lr=1e-3, batch=50):
    data = {}
    idx = 0
    for s in sizes:
        data[s] = [generate_example("maze-image", s, example_seed(31311, idx + k))
                   for k in range(200)]
        idx += 200
    # probe: fixed held-out batch per size, equal parts
    probe = [generate_example("maze-image", s, example_seed(91911, 10 * s + i))
             for s in sizes for i in range(10)]
    from wavegraph.models import model_from_spec
    cfg = TrainConfig(task="maze-image", model=spec, iterations=iters,
                      batch_size=batch, learning_rate=lr,
                      curriculum_interval=interval, seed=11, log_every=1)
    t0 = time.time()
    res = train(cfg, data)
    losses = [m[1] for m in res.metrics]
    init, final = losses[0], float(np.mean(losses[-100:]))
    pl = batch_loss(res.model, probe, "maze-image").item()
    print(f"{tag}: init {init:.4f} final(train,100) {final:.4f} "
          f"ratio {init/final:.1f}x | probe loss {pl:.4f} ratio {losses[0]/pl:.1f}x "
          f"[{(time.time()-t0)/60:.1f} min]", flush=True)

dyn = {"kind": "wave", "feature_width": 3, "edge_feature_width": 0,
       "state_size": 10, "passes": 1, "cell_kind": "dense-tanh", "dynamic": True}
fixed3 = {"kind": "wave", "feature_width": 3, "edge_feature_width": 0,
          "state_size": 10, "passes": 3, "cell_kind": "dense-tanh"}

run("A dyn {3}", [3], dyn)
run("B dyn {3,4}", [3, 4], dyn)
run("E fix3 {3,4,5}", [3, 4, 5], fixed3)
run("C dyn {3,4,5} lr2e-3", [3, 4, 5], dyn, lr=2e-3)
