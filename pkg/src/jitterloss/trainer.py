"""Mini-batch momentum SGD with a loss wrapper applied per batch."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
import json
import logging
from pathlib import Path

import numpy as np

from . import losses, nn
from .analysis import jensen_check
from .data import Dataset, build_datasets
from .losses import LossWrapper, wrapper_from_config
from .samplers import STREAM_INIT, STREAM_JITTER, STREAM_SHUFFLE, RngStream

log = logging.getLogger(__name__)

CSV_HEADER = [
    "run_id", "seed", "epoch", "raw_train_loss", "wrapped_train_loss",
    "test_loss", "test_accuracy", "alpha_mean", "alpha_min", "alpha_max",
]


class TrainingError(RuntimeError):
    def __init__(self, msg, epoch=None, batch=None):
        super().__init__(msg)
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.001
    momentum: float = 0.95
    weight_decay: float = 0.0005
    batch_size: int = 128

    def __post_init__(self):
        if not self.learning_rate >= 0:
            # lr = 0 is allowed so a run can be frozen for checks
            raise ValueError("learning_rate must be >= 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if not self.weight_decay >= 0:
            raise ValueError("weight_decay must be >= 0")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ValueError("batch_size must be a positive integer")


@dataclass
class EpochMetrics:
    epoch: int
    raw_train_loss: float
    wrapped_train_loss: float
    per_batch_risks: list  # (R_m, alpha_m); alpha_m is None for the original loss
    grad_signs: list
    test_loss: float
    test_accuracy: float
    alpha_stats: dict | None
    jensen: dict | None = None

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "raw_train_loss": self.raw_train_loss,
            "wrapped_train_loss": self.wrapped_train_loss,
            "test_loss": self.test_loss,
            "test_accuracy": self.test_accuracy,
            "alpha_stats": self.alpha_stats,
            "jensen": self.jensen,
            "n_batches": len(self.per_batch_risks),
            "n_ascent_steps": sum(1 for s in self.grad_signs if s < 0),
        }

    def csv_row(self, run_id: str, seed: int) -> list[str]:
        a = self.alpha_stats
        alpha = [fmt(a["mean"]), fmt(a["min"]), fmt(a["max"])] if a else ["", "", ""]
        return [
            run_id, str(seed), str(self.epoch), fmt(self.raw_train_loss),
            fmt(self.wrapped_train_loss), fmt(self.test_loss), fmt(self.test_accuracy), *alpha,
        ]


@dataclass
class RunRecord:
    run_id: str
    config: dict
    seed: int
    epochs: list = field(default_factory=list)
    duration: float = 0.0
    model: nn.MlpModel | None = None


def fmt(x: float) -> str:
    return f"{x:.9g}"


def make_batches(n: int, batch_size: int, rng: RngStream) -> list[np.ndarray]:
    if not 1 <= batch_size:
        raise ValueError("batch_size must be >= 1")
    perm = rng.permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def sgd_step(params, grads, velocity, opt: OptimizerConfig):
    """Coupled weight decay: v <- mu*v + g + wd*p;  p <- p - lr*v."""
    new_p, new_v = [], []
    for p, g, v in zip(params, grads, velocity):
        v = opt.momentum * v + g + opt.weight_decay * p
        new_v.append(v)
        new_p.append(p - opt.learning_rate * v)
    return new_p, new_v


def evaluate(model: nn.MlpModel, dataset: Dataset) -> dict:
    logits, _ = nn.forward(model, dataset.features)
    loss, _ = nn.cross_entropy(logits, dataset.labels)
    acc = float((logits.argmax(axis=1) == dataset.labels).mean())
    return {"test_loss": loss, "test_accuracy": acc}


def train_epoch(model, dataset, wrapper: LossWrapper, opt, velocity, batch_rng, jitter_rng, epoch=0, test_set=None):
    """One pass over ``dataset``. Returns ``(model, velocity, EpochMetrics)``."""
    if dataset.dim != model.sizes[0]:
        raise nn.ShapeError(f"dataset has {dataset.dim} features, model expects {model.sizes[0]}")
    risks, signs, raws, wrapped = [], [], [], []
    params = model.params
    for m, idx in enumerate(make_batches(len(dataset), opt.batch_size, batch_rng)):
        x, y = dataset.features[idx], dataset.labels[idx]
        with np.errstate(over="ignore", invalid="ignore"):
            logits, cache = nn.forward(model, x)
            raw, _ = nn.cross_entropy(logits, y)
        if not math.isfinite(raw):
            raise TrainingError(f"non-finite loss at epoch {epoch}, batch {m}", epoch, m)
        w = losses.apply(wrapper, raw, jitter_rng)
        grads = nn.backward(model, cache, y, w.grad_sign)
        params, velocity = sgd_step(params, grads, velocity, opt)
        model = nn.MlpModel(params)
        risks.append((w.raw, w.alpha))
        signs.append(w.grad_sign)
        raws.append(w.raw)
        wrapped.append(w.wrapped)
    alphas = [a for _, a in risks if a is not None]
    stats = {"mean": float(np.mean(alphas)), "min": min(alphas), "max": max(alphas)} if alphas else None
    ev = evaluate(model, test_set if test_set is not None else dataset)
    metrics = EpochMetrics(
        epoch, float(np.mean(raws)), float(np.mean(wrapped)), risks, signs,
        ev["test_loss"], ev["test_accuracy"], stats, jensen_check(risks),
    )
    if not metrics.jensen["pass"]:
        log.warning("Jensen bound violated at epoch %d: %r", epoch, metrics.jensen)
    return model, velocity, metrics


def write_csv_header(fh):
    csv.writer(fh, lineterminator="\n").writerow(CSV_HEADER)


def run_training(model, train, test, wrapper, opt, epochs, seed, run_id="run", csv_path=None, config=None):
    """Fixed-budget training loop; appends one CSV row per epoch when ``csv_path`` is set."""
    start = time.perf_counter()
    batch_rng = RngStream(seed, STREAM_SHUFFLE)
    jitter_rng = RngStream(seed, STREAM_JITTER)
    velocity = [np.zeros_like(p) for p in model.params]
    record = RunRecord(run_id, config or {}, seed)
    fh = open(csv_path, "w", newline="") if csv_path else io.StringIO()
    try:
        write_csv_header(fh)
        fh.flush()
        writer = csv.writer(fh, lineterminator="\n")
        for epoch in range(epochs):
            model, velocity, m = train_epoch(model, train, wrapper, opt, velocity, batch_rng, jitter_rng, epoch, test)
            record.epochs.append(m)
            writer.writerow(m.csv_row(run_id, seed))
            fh.flush()
    finally:
        fh.close()
    record.model = model
    record.duration = time.perf_counter() - start
    return record


def record_json(record: RunRecord) -> str:
    """RunRecord echo. Wall-clock duration is left out so reruns are byte-identical."""
    body = {
        "run_id": record.run_id,
        "seed": record.seed,
        "config": record.config,
        "epochs": [m.to_dict() for m in record.epochs],
    }
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def run_experiment(config: dict, output_dir=None) -> RunRecord:
    """Train from a normalized run config; writes ``<run_id>.csv`` and ``<run_id>.json``.

    Pass ``output_dir=False`` to skip writing files.
    """
    from .config import run_id as make_run_id

    rid = make_run_id(config)
    seed = config["seed"]
    train, test = build_datasets(config["dataset"], seed)
    sizes = [train.dim, *config["model"]["hidden"], train.num_classes]
    model = nn.init_mlp(sizes, RngStream(seed, STREAM_INIT))
    wrapper = wrapper_from_config(config["wrapper"])
    opt = OptimizerConfig(**config["optimizer"])

    out = None
    if output_dir is not False:
        out = Path(output_dir if output_dir is not None else config["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
    record = run_training(
        model, train, test, wrapper, opt, config["epochs"], seed, rid,
        csv_path=out / f"{rid}.csv" if out else None, config=config,
    )
    if out:
        (out / f"{rid}.json").write_text(record_json(record))
    return record
