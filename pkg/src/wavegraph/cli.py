"""Command-line frontend: gen / train / eval / oracle / gradcheck.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
WAVEGRAPH_SEED is the fallback seed when --seed is omitted.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import evaluation, models, numcore as nc, serialize, taskgen, training

GRADCHECK_TOLERANCE = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_size_range(text: str):
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError as err:
        raise UsageError(f"bad size range {text!r}, expected e.g. 3..10") from err
    if lo < 2 or hi < lo:
        raise UsageError(f"bad size range {text!r}")
    return list(range(lo, hi + 1))


def _default_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("WAVEGRAPH_SEED")
    return int(env) if env else 0


def build_parser() -> _Parser:
    parser = _Parser(prog="wavegraph")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a dataset")
    gen.add_argument("task", choices=["paths", "multipath", "maze-image", "circuits"])
    gen.add_argument("--size-range", default="3..6")
    gen.add_argument("--count", type=int, default=None,
                     help="examples per size (paths/multipath/maze-image)")
    gen.add_argument("--batches", type=int, default=500,
                     help="training mini-batches per size (circuits)")
    gen.add_argument("--test", action="store_true",
                     help="circuits: 100 examples per size, test deletion rates")
    gen.add_argument("--generator", choices=["dfs", "prim"], default="dfs")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", required=True)

    tr = sub.add_parser("train", help="train a model on a dataset")
    tr.add_argument("--task", choices=list(training.TASK_LOSSES), required=True)
    tr.add_argument("--model", choices=["wave", "wave-dynamic", "gconv"], default="wave")
    tr.add_argument("--passes", type=int, default=None)
    tr.add_argument("--state-size", type=int, default=None)
    tr.add_argument("--edge-state-size", type=int, default=5)
    tr.add_argument("--cell", choices=list(models.CELL_KINDS), default=None)
    tr.add_argument("--iters", type=int, default=None)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--batch", type=int, default=None)
    tr.add_argument("--interval", type=int, default=training.DEFAULT_INTERVAL)
    tr.add_argument("--seed", type=int, default=None)
    tr.add_argument("--data", required=True)
    tr.add_argument("--out", required=True, help="output prefix")

    ev = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    ev.add_argument("--model-file", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--out", required=True)
    ev.add_argument("--seed", type=int, default=None)

    orc = sub.add_parser("oracle", help="solve a netlist for node voltages")
    orc.add_argument("--netlist", required=True)
    orc.add_argument("--out", default=None)
    orc.add_argument("--seed", type=int, default=None)

    gc = sub.add_parser("gradcheck", help="finite-difference gradient check")
    gc.add_argument("--model", default="wave",
                    help="wave | gconv | minigru | mix | dense, or a checkpoint path")
    gc.add_argument("--state-size", type=int, default=4)
    gc.add_argument("--seed", type=int, default=None)
    return parser


# ---------------------------------------------------------------------------
# gen


def _task_defaults(task, model_name):
    # paper configurations per task
    if task in ("paths", "multipath"):
        wave = {"passes": 1 if task == "paths" else 3, "state_size": 10,
                "cell": "dense-tanh", "head": "sigmoid"}
        gconv = {"passes": 5, "node_state": 5, "edge_state": 5, "head": "sigmoid"}
    elif task == "maze-image":
        wave = {"passes": 3, "state_size": 10, "cell": "dense-tanh", "head": "sigmoid"}
        gconv = {"passes": 5, "node_state": 5, "edge_state": 5, "head": "sigmoid"}
    else:  # circuits
        wave = {"passes": 2, "state_size": 20, "cell": "minigru", "head": "identity"}
        gconv = {"passes": 5, "node_state": 15, "edge_state": 5, "head": "identity"}
    return wave if model_name.startswith("wave") else gconv


def cmd_gen(args) -> int:
    sizes = _parse_size_range(args.size_range)
    seed = _default_seed(args)
    examples = []
    index = 0
    if args.task == "circuits":
        if args.test:
            per_size = {s: 100 for s in sizes}
        else:
            for s in sizes:
                if s not in taskgen.CIRCUIT_TABLE:
                    raise UsageError(f"circuit training sizes are 2..10, got {s}")
            per_size = {s: args.batches * taskgen.circuit_batch_size(s) for s in sizes}
        for s in sizes:
            delete_prob = taskgen.circuit_delete_prob(s)
            for _ in range(per_size[s]):
                ex = taskgen.make_circuit_example(
                    s, taskgen.example_seed(seed, index), delete_prob=delete_prob)
                examples.append(ex)
                index += 1
    else:
        count = args.count if args.count is not None else 1000
        for s in sizes:
            for _ in range(count):
                examples.append(taskgen.generate_example(
                    args.task, s, taskgen.example_seed(seed, index), args.generator))
                index += 1
    serialize.write_dataset(args.out, examples)
    print(f"wrote {len(examples)} examples to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# train


def _model_spec(args, feature_width, edge_feature_width):
    defaults = _task_defaults(args.task, args.model)
    passes = args.passes if args.passes is not None else defaults["passes"]
    if args.model in ("wave", "wave-dynamic"):
        return {"kind": "wave", "feature_width": feature_width,
                "edge_feature_width": edge_feature_width,
                "state_size": args.state_size or defaults["state_size"],
                "passes": passes, "cell_kind": args.cell or defaults["cell"],
                "head_activation": defaults["head"],
                "dynamic": args.model == "wave-dynamic"}
    return {"kind": "gconv", "feature_width": feature_width,
            "edge_feature_width": edge_feature_width,
            "node_state_size": args.state_size or defaults["node_state"],
            "edge_state_size": args.edge_state_size,
            "passes": passes, "head_activation": defaults["head"]}


def cmd_train(args) -> int:
    examples = serialize.read_dataset(args.data)
    if not examples:
        raise serialize.DataFormatError("empty dataset")
    tasks = {ex.task for ex in examples}
    if tasks != {args.task}:
        raise serialize.DataFormatError(
            f"dataset tasks {sorted(tasks)} do not match --task {args.task}")
    by_bin = {}
    for ex in examples:
        by_bin.setdefault(ex.size, []).append(ex)
    feature_width = examples[0].graph.node_features.shape[1]
    edge_feature_width = examples[0].graph.edge_features.shape[1]
    if args.task == "circuits":
        batch = {s: taskgen.circuit_batch_size(s) if s in taskgen.CIRCUIT_TABLE else 100
                 for s in by_bin}
        if args.batch is not None:
            batch = args.batch
    else:
        batch = args.batch if args.batch is not None else 50
    iters = args.iters if args.iters is not None else (
        60000 if args.task == "maze-image" else 30000)
    config = training.TrainConfig(
        task=args.task, model=_model_spec(args, feature_width, edge_feature_width),
        iterations=iters, batch_size=batch, learning_rate=args.lr,
        curriculum_interval=args.interval, seed=_default_seed(args),
        out_prefix=args.out)
    result = training.train(config, by_bin)
    print(f"trained {args.model} for {iters} iterations; "
          f"final loss {result.final_loss}; "
          f"parameters {models.parameter_count(result.model)}")
    print(f"checkpoint: {args.out}.ckpt.json  metrics: {args.out}.metrics.csv")
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    model, _iteration, _rng = serialize.load_checkpoint(args.model_file)
    examples = serialize.read_dataset(args.data)
    if examples:
        width = examples[0].graph.node_features.shape[1]
        if width != model.feature_width:
            raise serialize.DataFormatError(
                f"dataset feature width {width} does not match model "
                f"feature width {model.feature_width}")
    report = evaluation.evaluate(model, examples,
                                 params=models.parameter_count(model),
                                 seed=_default_seed(args))
    evaluation.emit_report(report, args.out)
    print(f"parameters: {report.params}")
    for row in sorted(report.rows, key=lambda r: (r["task"], r["generator"],
                                                  r["size"], r["metric"])):
        print(f"{row['task']:10s} {row['generator']:5s} size={row['size']:<3d} "
              f"{row['metric']}={row['value']:.6g} (n={row['n']})")
    print(f"report: {args.out}")
    return 0


# ---------------------------------------------------------------------------
# oracle / gradcheck


def cmd_oracle(args) -> int:
    from .circuit_oracle import kcl_residual, solve_dc

    net = serialize.load_netlist(args.netlist)
    voltages = solve_dc(net)
    residual = kcl_residual(net, voltages)
    for i, v in enumerate(voltages):
        print(f"node {i}: {v:.9g} V")
    print(f"max KCL residual: {residual:.3e} A")
    if args.out:
        import json
        with open(args.out, "w") as fh:
            json.dump({"voltages": voltages.tolist(), "kcl_residual": residual}, fh)
    return 0


def _gradcheck_target(args, rng_seed):
    from .graphcore import UGraph, grid_graph
    from .models import GraphBatch, PackedGraph

    d = args.state_size
    grid = grid_graph(3, 3)
    feats = np.linspace(-1.0, 1.0, grid.n_nodes).reshape(-1, 1)
    g = UGraph(grid.n_nodes, grid.edges, node_features=feats)
    targets = np.tile([0.0, 1.0], grid.n_nodes)[:grid.n_nodes].reshape(-1, 1)
    mask = np.ones((grid.n_nodes, 1))

    name = args.model
    if name.endswith(".json") or os.path.exists(name):
        model, _, _ = serialize.load_checkpoint(name)
    elif name == "wave":
        model = models.WaveModel(1, 0, d, passes=1, seed=rng_seed)
    elif name == "gconv":
        model = models.GraphConvModel(1, 0, d, max(d - 1, 1), passes=2, seed=rng_seed)
    elif name == "minigru":
        cell = models.MiniGruCell(d, d, np.random.default_rng(rng_seed))
        x = np.linspace(-1, 1, 3 * d).reshape(3, d)
        s0 = np.linspace(1, -1, 3 * d).reshape(3, d)

        def fn():
            out = cell(nc.Tensor(x), nc.Tensor(s0))
            return nc.sum_all(out * out)

        return fn, cell.parameters()
    elif name == "mix":
        mix = models.MixNetwork(d, 0, np.random.default_rng(rng_seed))
        rng = np.random.default_rng(rng_seed + 1)
        s_u = rng.normal(size=(4, d))
        s_v = rng.normal(size=(4, d))
        seg = np.array([0, 0, 1, 1])

        def fn():
            m = mix.message(nc.Tensor(s_u), nc.Tensor(s_v), np.zeros((4, 0)),
                            seg, 2, 2)
            return nc.sum_all(m * m)

        return fn, mix.parameters()
    elif name == "dense":
        layer = nc.DenseLayer(3, 2, "elu", np.random.default_rng(rng_seed))
        x = np.linspace(-1, 1, 12).reshape(4, 3)

        def fn():
            out = layer(nc.Tensor(x))
            return nc.sum_all(out * out)

        return fn, layer.parameters()
    else:
        raise UsageError(f"unknown gradcheck model {name!r}")

    if model.feature_width != 1:
        raise serialize.DataFormatError(
            "gradcheck expects a model with feature width 1")

    def fn():
        pred = model.predict(GraphBatch([PackedGraph(g)]))
        if model.head_activation == "sigmoid":
            return nc.cross_entropy_loss(pred, targets, mask)
        return nc.mse_loss(pred, targets, mask)

    return fn, model.parameters()


def cmd_gradcheck(args) -> int:
    seed = _default_seed(args)
    fn, params = _gradcheck_target(args, seed)
    report = nc.grad_check(fn, params)
    print(report)
    if not report.passed(GRADCHECK_TOLERANCE):
        print(f"FAIL: max relative error {report.max_rel_error:.3e} "
              f">= {GRADCHECK_TOLERANCE}")
        raise FloatingPointError("gradient check failed")
    print(f"OK: max relative error {report.max_rel_error:.3e} "
          f"< {GRADCHECK_TOLERANCE}")
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "oracle": cmd_oracle,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (serialize.DataFormatError, FileNotFoundError, ValueError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2
    except (FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
