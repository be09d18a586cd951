"""Task metrics: greedy argmax path tracing, accuracy by size, and circuit
RMSE / MAE-by-hop-distance reports."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .graphcore import hop_distances
from .training import batch_of, prepare_examples


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)  # dicts: task, generator, size, n, metric, value
    params: int = 0
    seed: int = 0

    def add(self, task, generator, size, n, metric, value):
        self.rows.append({"task": task, "generator": generator, "size": size,
                          "n": n, "metric": metric, "value": float(value)})

    def value(self, metric, size=None):
        for row in self.rows:
            if row["metric"] == metric and (size is None or row["size"] == size):
                return row["value"]
        raise KeyError(f"no row for metric={metric} size={size}")


def trace_greedy(graph, probs, start: int, goal: int):
    """Greedy walk from ``start``: repeatedly move to the unvisited neighbor
    of maximum probability. Returns the node list on success, None when
    stuck, looping past n steps, or hitting an exact probability tie."""
    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    current = start
    visited = {start}
    path = [start]
    for _ in range(graph.n_nodes):
        if current == goal:
            return path
        candidates = [v for v in graph.neighbors(current) if v not in visited]
        if not candidates:
            return None
        scores = probs[candidates]
        best = float(scores.max())
        ties = [v for v, s in zip(candidates, scores) if s == best]
        if len(ties) != 1:
            return None
        current = ties[0]
        visited.add(current)
        path.append(current)
    return path if current == goal else None


def argmax_path_correct(example, probs) -> bool:
    """Correct iff the greedy trace from the lower-id goal reaches the other
    goal; multipath examples additionally require the traced length to equal
    the (unique) shortest path length."""
    start, goal = sorted(example.goals)
    path = trace_greedy(example.graph, probs, start, goal)
    if path is None:
        return False
    if example.task == "multipath" and len(path) != example.shortest_length:
        return False
    return True


def predict_probs(model, examples) -> list:
    """Per-example prediction vectors, batching graphs of equal node count
    together (dynamic wave models require uniform sizes per batch)."""
    prepare_examples(examples)
    groups = {}
    for i, ex in enumerate(examples):
        groups.setdefault(ex.graph.n_nodes, []).append(i)
    out = [None] * len(examples)
    for indices in groups.values():
        batch = batch_of([examples[i] for i in indices])
        pred = model.predict(batch).data
        for i, p in zip(indices, batch.split_nodes(pred)):
            out[i] = p.reshape(-1)
    return out


def accuracy_by_size(model, examples) -> list:
    """Fraction argmax-correct per (generator, size) group."""
    groups = {}
    for ex, probs in zip(examples, predict_probs(model, examples)):
        groups.setdefault((ex.generator, ex.size, ex.task), []).append(
            argmax_path_correct(ex, probs))
    rows = []
    for (generator, size, task), flags in sorted(groups.items()):
        rows.append({"task": task, "generator": generator, "size": size,
                     "n": len(flags), "metric": "argmax_accuracy",
                     "value": float(np.mean(flags))})
    return rows


def circuit_error_rows(examples, predictions) -> list:
    """RMSE per size plus MAE bucketed by hop distance from ground (computed
    on the component graph, wires included) and the Pearson correlation of
    bucket MAE against distance."""
    by_size = {}
    for ex, pred in zip(examples, predictions):
        by_size.setdefault(ex.size, []).append((ex, np.asarray(pred).reshape(-1)))
    rows = []
    for size, items in sorted(by_size.items()):
        sq, buckets = [], {}
        for ex, pred in items:
            err = pred - ex.voltages
            sq.append(err * err)
            dist = hop_distances(ex.netlist.component_graph(), ex.netlist.ground)
            for d, e in zip(dist, np.abs(err)):
                buckets.setdefault(int(d), []).append(float(e))
        n = len(items)
        rows.append({"task": "circuits", "generator": "grid", "size": size,
                     "n": n, "metric": "rmse",
                     "value": float(np.sqrt(np.concatenate(sq).mean()))})
        dists = sorted(buckets)
        maes = [float(np.mean(buckets[d])) for d in dists]
        for d, mae in zip(dists, maes):
            rows.append({"task": "circuits", "generator": "grid", "size": size,
                         "n": len(buckets[d]), "metric": f"mae_hop{d}",
                         "value": mae})
        if len(dists) > 1 and np.std(maes) > 0:
            r = float(np.corrcoef(dists, maes)[0, 1])
        else:
            r = 0.0
        rows.append({"task": "circuits", "generator": "grid", "size": size,
                     "n": n, "metric": "mae_distance_pearson_r", "value": r})
    return rows


def circuit_errors(model, examples) -> list:
    return circuit_error_rows(examples, predict_probs(model, examples))


def evaluate(model, examples, params: int = 0, seed: int = 0) -> EvalReport:
    report = EvalReport(params=params, seed=seed)
    tasks = {ex.task for ex in examples}
    if not tasks:
        return report
    if tasks <= {"paths", "multipath", "maze-image"}:
        report.rows = accuracy_by_size(model, examples)
    elif tasks == {"circuits"}:
        report.rows = circuit_errors(model, examples)
    else:
        raise ValueError(f"mixed or unknown tasks {tasks}")
    return report


REPORT_COLUMNS = ["task", "generator", "size", "n", "metric", "value", "params", "seed"]


def report_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    rows = sorted(report.rows, key=lambda r: (r["task"], r["generator"],
                                              r["size"], r["metric"]))
    for r in rows:
        writer.writerow([r["task"], r["generator"], r["size"], r["n"],
                         r["metric"], f"{r['value']:.6g}",
                         report.params, report.seed])
    return buf.getvalue()


def emit_report(report: EvalReport, path: str) -> None:
    """Deterministic CSV: fixed column order, sorted rows, 6 significant digits."""
    with open(path, "w") as fh:
        fh.write(report_csv(report))
