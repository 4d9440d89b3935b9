"""MAE + L1 loss, ADAM, plateau LR halving, and the training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, merge_batch
from . import model as gnn


class TrainingDivergedError(RuntimeError):
    pass


def mae_loss(predictions: np.ndarray, targets: np.ndarray):
    """Mean |error| over every supervised entry; returns (value, d/dpred)."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ValueError(f"prediction shape {predictions.shape} != target {targets.shape}")
    diff = predictions - targets
    value = np.abs(diff).mean()
    grad = np.sign(diff) / diff.size
    return value, grad


def l1_penalty(parameters, coefficient: float):
    """lambda * sum |theta|; returns (value, per-parameter gradients)."""
    value = coefficient * sum(np.abs(p).sum() for p in parameters)
    grads = [coefficient * np.sign(p) for p in parameters]
    return value, grads


def loss(predictions, targets, parameters, l1_coefficient: float):
    data, _ = mae_loss(predictions, targets)
    reg, _ = l1_penalty(parameters, l1_coefficient)
    return data + reg


@dataclass
class AdamState:
    m: list = None
    v: list = None
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_parameters(cls, parameters, **kwargs) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in parameters],
                   v=[np.zeros_like(p) for p in parameters], t=0, **kwargs)


def adam_step(parameters, gradients, state: AdamState, lr: float):
    """Standard bias-corrected ADAM update, in place; returns (params, state)."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(parameters, gradients, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return parameters, state


@dataclass
class PlateauSchedule:
    """Halve the LR when the loss stops improving for `patience` epochs."""

    lr: float
    factor: float = 0.5
    patience: int = 50
    min_delta: float = 1e-5      # relative improvement threshold
    lr_min: float = 0.0
    best: float = np.inf
    bad_epochs: int = 0

    def update(self, epoch_loss: float) -> float:
        if epoch_loss < self.best * (1.0 - self.min_delta):
            self.best = epoch_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                self.lr = max(self.lr * self.factor, self.lr_min)
                self.bad_epochs = 0
        return self.lr


@dataclass
class TrainConfig:
    epochs: int = 2000
    batch_size: int = 16
    initial_lr: float = 5e-4
    l1_coefficient: float = 1e-5
    plateau_patience: int = 50
    plateau_factor: float = 0.5
    plateau_min_delta: float = 1e-5
    lr_min: float | None = None       # default initial_lr / 64
    seed: int = 0
    task: str = "node_level"          # or "graph_level"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.initial_lr <= 0 or not (0.0 < self.plateau_factor < 1.0):
            raise ValueError("bad learning-rate configuration")
        if self.l1_coefficient < 0:
            raise ValueError("l1_coefficient must be >= 0")
        if self.task not in ("node_level", "graph_level"):
            raise ValueError(f"unknown task {self.task!r}")


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    lr: float
    wall_time: float


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)

    def losses(self):
        return [r.mean_loss for r in self.records]


def _batch_loss_and_grads(mdl, batch, task, lam):
    y_node, y_graph, tape = gnn.forward(mdl, batch)
    if task == "node_level":
        targets = batch.graph.node_targets
        value, gpred = mae_loss(y_node, targets)
        grads = gnn.backward(mdl, tape, grad_node_out=gpred)
    else:
        targets = batch.graph_targets
        value, gpred = mae_loss(y_graph, targets)
        grads = gnn.backward(mdl, tape, grad_graph_out=gpred)
    params = mdl.parameters()
    reg, reg_grads = l1_penalty(params, lam)
    for g, rg in zip(grads, reg_grads):
        g += rg
    return value + reg, grads, targets.size


def fit(mdl, graphs: list[Graph], config: TrainConfig,
        adam_state: AdamState | None = None,
        schedule: PlateauSchedule | None = None,
        start_epoch: int = 0) -> TrainLog:
    """Train in place. adam_state/schedule/start_epoch allow resumption."""
    if not graphs:
        raise ValueError("empty training set")
    params = mdl.parameters()
    if adam_state is None:
        adam_state = AdamState.for_parameters(params)
    if schedule is None:
        lr_min = config.lr_min if config.lr_min is not None else config.initial_lr / 64
        schedule = PlateauSchedule(lr=config.initial_lr, factor=config.plateau_factor,
                                   patience=config.plateau_patience,
                                   min_delta=config.plateau_min_delta, lr_min=lr_min)
    log = TrainLog()
    n = len(graphs)
    t0 = time.perf_counter()
    for epoch in range(start_epoch, start_epoch + config.epochs):
        order = np.random.default_rng((config.seed, epoch)).permutation(n)
        total, weight = 0.0, 0
        for b0 in range(0, n, config.batch_size):
            members = [graphs[i] for i in order[b0:b0 + config.batch_size]]
            batch = merge_batch(members)
            value, grads, count = _batch_loss_and_grads(
                mdl, batch, config.task, config.l1_coefficient)
            if not np.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite loss {value} at epoch {epoch}, batch {b0 // config.batch_size}")
            adam_step(params, grads, adam_state, schedule.lr)
            total += value * count
            weight += count
        mean_loss = total / weight
        lr_used = schedule.lr
        schedule.update(mean_loss)
        log.records.append(EpochRecord(epoch=epoch, mean_loss=mean_loss, lr=lr_used,
                                       wall_time=time.perf_counter() - t0))
    return log
