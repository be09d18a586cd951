"""Curriculum-scheduled mini-batch training.

Examples are binned by size. Bin probabilities start as [1, 0, ...] and
every ``curriculum_interval`` iterations decay toward uniform via
p_i <- p_i * eta + (1 - eta) / phi for i <= phi, phi being the first
empty bin (or the bin count once all bins are open). Each batch is drawn
entirely from one bin.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import numcore as nc
from .models import GraphBatch, PackedGraph, model_from_spec

CURRICULUM_DECAY = 0.25
DEFAULT_INTERVAL = 1500

TASK_LOSSES = {
    "paths": "cross-entropy",
    "multipath": "cross-entropy",
    "maze-image": "cross-entropy",
    "circuits": "mse",
}


@dataclass
class CurriculumState:
    probabilities: np.ndarray
    decay: float = CURRICULUM_DECAY
    interval: int = DEFAULT_INTERVAL
    seed: int = 0

    @classmethod
    def initial(cls, n_bins: int, decay: float = CURRICULUM_DECAY,
                interval: int = DEFAULT_INTERVAL, seed: int = 0):
        p = np.zeros(n_bins)
        p[0] = 1.0
        return cls(probabilities=p, decay=decay, interval=interval, seed=seed)


def entropy(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def curriculum_update(state: CurriculumState) -> CurriculumState:
    """One decay step toward uniform; returns a new state."""
    p = state.probabilities.copy()
    zeros = np.where(p == 0.0)[0]
    phi = int(zeros[0]) + 1 if zeros.size else p.size
    p[:phi] = p[:phi] * state.decay + (1.0 - state.decay) / phi
    return replace(state, probabilities=p)


def sample_batch(state: CurriculumState, datasets_by_bin: dict, batch_size,
                 rng: np.random.Generator):
    """Pick a bin by the curriculum probabilities, then draw a whole batch
    from it. ``batch_size`` may be an int or a per-bin dict."""
    bins = sorted(datasets_by_bin)
    if len(bins) != state.probabilities.size:
        raise ValueError("bin count does not match curriculum state")
    i = int(rng.choice(len(bins), p=state.probabilities))
    key = bins[i]
    pool = datasets_by_bin[key]
    if not pool:
        raise ValueError(f"selected bin {key} is empty")
    size = batch_size[key] if isinstance(batch_size, dict) else int(batch_size)
    if size <= len(pool):
        picks = rng.choice(len(pool), size=size, replace=False)
    else:
        picks = rng.choice(len(pool), size=size, replace=True)
    return key, [pool[int(j)] for j in picks]


@dataclass
class TrainConfig:
    task: str
    model: dict
    iterations: int
    batch_size: object = 50            # int, or dict size -> int for circuits
    learning_rate: float = 1e-3
    curriculum_interval: int = DEFAULT_INTERVAL
    seed: int = 0
    log_every: int = 100
    checkpoint_every: int = 5000
    out_prefix: str | None = None      # writes <prefix>.ckpt.json / .metrics.csv


@dataclass
class TrainResult:
    model: object
    metrics: list = field(default_factory=list)   # (iteration, loss, bin, lr)
    curriculum: CurriculumState | None = None
    final_loss: float | None = None


def _loss_fn(task: str):
    kind = TASK_LOSSES.get(task)
    if kind is None:
        raise ValueError(f"unknown task {task!r}")
    return nc.cross_entropy_loss if kind == "cross-entropy" else nc.mse_loss


def prepare_examples(examples) -> list:
    """Attach a PackedGraph to each example once; reused across batches."""
    packed = []
    for ex in examples:
        if not hasattr(ex, "_pack"):
            ex._pack = PackedGraph(ex.graph)
        packed.append(ex)
    return packed


def batch_of(examples) -> GraphBatch:
    return GraphBatch([ex._pack for ex in prepare_examples(examples)])


def batch_loss(model, examples, task: str):
    batch = batch_of(examples)
    pred = model.predict(batch)
    mask = batch.mask.reshape(-1, 1)
    return _loss_fn(task)(pred, batch.targets, mask)


def _prebuild_batches(datasets_by_bin: dict, batch_size) -> dict:
    """Group each bin's examples into fixed mini-batches once; training then
    draws whole batches, which keeps per-iteration packing cost at zero."""
    batches = {}
    for key in sorted(datasets_by_bin):
        pool = prepare_examples(datasets_by_bin[key])
        if not pool:
            raise ValueError(f"bin {key} is empty")
        size = batch_size[key] if isinstance(batch_size, dict) else int(batch_size)
        size = min(size, len(pool))  # tiny pools train as a single full batch
        batches[key] = [GraphBatch([ex._pack for ex in pool[i:i + size]])
                        for i in range(0, len(pool) - size + 1, size)]
    return batches


def train(config: TrainConfig, datasets_by_bin: dict) -> TrainResult:
    """Run the sample -> forward -> loss -> backward -> Adam loop with
    curriculum updates every ``curriculum_interval`` iterations.

    Each bin's pool is chunked into fixed mini-batches up front; an
    iteration samples a bin by the curriculum probabilities and a batch
    uniformly within it. A non-finite loss aborts with the last-good
    parameters checkpointed (when an output prefix is configured).
    """
    ss = np.random.SeedSequence(config.seed)
    model_seed, sample_seed = ss.spawn(2)
    spec = dict(config.model)
    spec.setdefault("seed", int(model_seed.generate_state(1)[0]))
    model = model_from_spec(spec)
    rng = np.random.default_rng(sample_seed)

    batches_by_bin = _prebuild_batches(datasets_by_bin, config.batch_size)
    bins = sorted(batches_by_bin)

    curriculum = CurriculumState.initial(
        len(datasets_by_bin), interval=config.curriculum_interval, seed=config.seed)
    optimizer = nc.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = _loss_fn(config.task)
    metrics = []
    last_good = None
    final_loss = None

    for iteration in range(1, config.iterations + 1):
        bin_key = bins[int(rng.choice(len(bins), p=curriculum.probabilities))]
        options = batches_by_bin[bin_key]
        batch = options[int(rng.integers(0, len(options)))]
        pred = model.predict(batch)
        loss = loss_fn(pred, batch.targets, batch.mask.reshape(-1, 1))
        loss_value = loss.item()
        if not np.isfinite(loss_value):
            if config.out_prefix and last_good is not None:
                from .serialize import save_checkpoint
                for (_, t), data in zip(model.parameters(), last_good):
                    t.data[...] = data
                save_checkpoint(model, f"{config.out_prefix}.ckpt.json",
                                iteration=iteration - 1, rng=rng)
            raise FloatingPointError(
                f"non-finite loss {loss_value} at iteration {iteration} "
                f"(bin {bin_key}); last good checkpoint "
                f"{'written' if config.out_prefix else 'not configured'}")
        nc.backward(loss)
        optimizer.step()
        optimizer.zero_grad()
        last_good = [t.data.copy() for _, t in model.parameters()]
        final_loss = loss_value

        if iteration % config.curriculum_interval == 0:
            before = entropy(curriculum.probabilities)
            curriculum = curriculum_update(curriculum)
            after = entropy(curriculum.probabilities)
            assert after >= before - 1e-12, "curriculum entropy decreased"
            total = curriculum.probabilities.sum()
            assert abs(total - 1.0) < 1e-12, "curriculum probabilities unnormalized"

        if iteration % config.log_every == 0 or iteration == config.iterations:
            metrics.append((iteration, loss_value, bin_key, config.learning_rate))
        if config.out_prefix and (iteration % config.checkpoint_every == 0
                                  or iteration == config.iterations):
            from .serialize import save_checkpoint
            save_checkpoint(model, f"{config.out_prefix}.ckpt.json",
                            iteration=iteration, rng=rng)

    if config.out_prefix:
        write_metrics(metrics, f"{config.out_prefix}.metrics.csv")
    return TrainResult(model=model, metrics=metrics, curriculum=curriculum,
                       final_loss=final_loss)


def metrics_csv(metrics) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "loss", "bin", "lr"])
    for iteration, loss, bin_key, lr in metrics:
        writer.writerow([iteration, repr(float(loss)), bin_key, repr(float(lr))])
    return buf.getvalue()


def write_metrics(metrics, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(metrics_csv(metrics))
