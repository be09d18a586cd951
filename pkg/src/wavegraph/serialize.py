"""Dataset (JSON lines) and checkpoint (JSON) formats.

Floats serialize as shortest round-trip decimals, so a save/load cycle is
bit-exact. One dataset line per example:

    {task, generator, size, seed, nodes: [{id, features, target, mask}],
     edges: [{u, v, features}], extras: {...}}
"""

from __future__ import annotations

import json

import numpy as np

from .graphcore import UGraph
from .models import model_from_spec
from .taskgen import (CircuitExample, CircuitNetlist, Component, MazeImage,
                      PathExample)

CHECKPOINT_FORMAT = "wavegraph-checkpoint-v1"


class DataFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# netlists


def netlist_to_dict(net: CircuitNetlist) -> dict:
    return {
        "n_nodes": net.n_nodes,
        "ground": net.ground,
        "components": [
            {"a": c.a, "b": c.b, "kind": c.kind, "resistance": c.resistance,
             "voltage": c.voltage, "positive_terminal": c.positive_terminal}
            for c in net.components],
    }


def netlist_from_dict(d: dict) -> CircuitNetlist:
    try:
        comps = [Component(a=int(c["a"]), b=int(c["b"]), kind=str(c["kind"]),
                           resistance=float(c.get("resistance", 0.0)),
                           voltage=float(c.get("voltage", 0.0)),
                           positive_terminal=int(c.get("positive_terminal", -1)))
                 for c in d["components"]]
        return CircuitNetlist(n_nodes=int(d["n_nodes"]), components=comps,
                              ground=int(d["ground"]))
    except (KeyError, TypeError) as err:
        raise DataFormatError(f"malformed netlist: {err}") from err


def load_netlist(path: str) -> CircuitNetlist:
    with open(path) as fh:
        text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as err:
        raise DataFormatError(
            f"netlist JSON parse error at line {err.lineno}: {err.msg}") from err
    return netlist_from_dict(d)


# ---------------------------------------------------------------------------
# dataset records


def example_record(ex) -> dict:
    g = ex.graph
    record = {
        "task": ex.task,
        "generator": ex.generator,
        "size": int(ex.size),
        "seed": int(ex.seed),
        "nodes": [
            {"id": i,
             "features": g.node_features[i].tolist(),
             "target": g.node_targets[i].tolist(),
             "mask": float(g.target_mask[i])}
            for i in range(g.n_nodes)],
        "edges": [
            {"u": int(u), "v": int(v), "features": g.edge_features[k].tolist()}
            for k, (u, v) in enumerate(g.edges)],
        "extras": {},
    }
    if ex.task in ("paths", "multipath"):
        record["extras"] = {"goals": list(ex.goals), "path_count": ex.path_count}
    elif ex.task == "maze-image":
        record["extras"] = {"goals": list(ex.goal_pixels), "cell_size": ex.size}
    elif ex.task == "circuits":
        record["extras"] = {"ground": ex.netlist.ground,
                            "netlist": netlist_to_dict(ex.netlist)}
    return record


def _graph_from_record(record: dict) -> UGraph:
    nodes = record["nodes"]
    edges = record["edges"]
    n = len(nodes)
    return UGraph(
        n,
        np.asarray([(e["u"], e["v"]) for e in edges], dtype=np.int64).reshape(-1, 2),
        node_features=np.asarray([nd["features"] for nd in nodes]).reshape(n, -1),
        edge_features=(np.asarray([e["features"] for e in edges]).reshape(len(edges), -1)
                       if edges else None),
        node_targets=np.asarray([nd["target"] for nd in nodes]).reshape(n, -1),
        target_mask=np.asarray([nd["mask"] for nd in nodes], dtype=np.float64))


def example_from_record(record: dict):
    try:
        task = record["task"]
        g = _graph_from_record(record)
        size = int(record["size"])
        seed = int(record["seed"])
        extras = record.get("extras", {})
        if task in ("paths", "multipath"):
            path = frozenset(np.where(g.node_targets.reshape(-1) > 0.5)[0].tolist())
            return PathExample(graph=g, goals=tuple(extras["goals"]),
                               path_nodes=path, generator=record["generator"],
                               size=size, seed=seed,
                               path_count=int(extras.get("path_count", 1)),
                               task=task)
        if task == "maze-image":
            side = int(round(np.sqrt(g.n_nodes)))
            classes = np.argmax(g.node_features, axis=1).reshape(side, side)
            path = frozenset(np.where(g.node_targets.reshape(-1) > 0.5)[0].tolist())
            return MazeImage(graph=g, classes=classes,
                             goal_pixels=tuple(extras["goals"]),
                             path_pixels=path, generator=record["generator"],
                             size=int(extras["cell_size"]), seed=seed)
        if task == "circuits":
            net = netlist_from_dict(extras["netlist"])
            return CircuitExample(netlist=net, graph=g,
                                  voltages=g.node_targets.reshape(-1).copy(),
                                  size=size, seed=seed)
        raise DataFormatError(f"unknown task {task!r}")
    except (KeyError, TypeError, IndexError) as err:
        raise DataFormatError(f"malformed dataset record: {err}") from err


def write_dataset(path: str, examples) -> None:
    with open(path, "w") as fh:
        for ex in examples:
            fh.write(json.dumps(example_record(ex)) + "\n")


def read_dataset(path: str) -> list:
    examples = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataFormatError(
                    f"{path}: JSON parse error on line {lineno}: {err.msg}") from err
            examples.append(example_from_record(record))
    return examples


# ---------------------------------------------------------------------------
# checkpoints


def rng_state_to_json(rng: np.random.Generator | None):
    if rng is None:
        return None
    state = rng.bit_generator.state
    return json.loads(json.dumps(state, default=int))


def save_checkpoint(model, path: str, iteration: int = 0,
                    rng: np.random.Generator | None = None) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "spec": model.spec(),
        "iteration": int(iteration),
        "rng_state": rng_state_to_json(rng),
        "parameters": {name: t.data.tolist() for name, t in model.parameters()},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path: str):
    """Returns (model, iteration, rng_state); forward outputs of the loaded
    model are bit-identical to the saved one."""
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as err:
            raise DataFormatError(
                f"{path}: checkpoint parse error at line {err.lineno}: {err.msg}"
            ) from err
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise DataFormatError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    try:
        model = model_from_spec(payload["spec"])
        params = dict(model.parameters())
        saved = payload["parameters"]
        if set(saved) != set(params):
            missing = set(params) ^ set(saved)
            raise DataFormatError(f"checkpoint parameter mismatch: {sorted(missing)}")
        for name, tensor in params.items():
            arr = np.asarray(saved[name], dtype=np.float64)
            if arr.shape != tensor.data.shape:
                raise DataFormatError(
                    f"checkpoint shape mismatch for {name}: "
                    f"{arr.shape} vs {tensor.data.shape}")
            tensor.data[...] = arr
    except (KeyError, TypeError) as err:
        raise DataFormatError(f"malformed checkpoint: {err}") from err
    return model, int(payload.get("iteration", 0)), payload.get("rng_state")
