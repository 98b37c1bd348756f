"""Training loop for the shared-weight deep GCN classifier, built on the
tape engine, plus the layer-wise energy profile of a trained model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape
from .graph import Graph, normalized_operator
from .harness import init_weights
from .measures import dirichlet_measure
from .series import MeasureSeries


@dataclass
class TrainConfig:
    """Configuration of one supervised run; masks select labeled nodes."""

    depth: int
    width: int
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    shared_weights: bool = True
    bias: bool = True
    lr: float = 1e-2
    epochs: int = 200
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1 or self.width < 1:
            raise ValueError("depth and width must be at least 1")
        if self.lr < 0:
            raise ValueError("learning rate must be non-negative")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")
        self.train_mask = np.asarray(self.train_mask, dtype=bool)
        self.val_mask = np.asarray(self.val_mask, dtype=bool)
        self.test_mask = np.asarray(self.test_mask, dtype=bool)
        for a, b in (("train", "val"), ("train", "test"), ("val", "test")):
            if np.any(getattr(self, f"{a}_mask") & getattr(self, f"{b}_mask")):
                raise ValueError(f"{a} and {b} masks overlap")


@dataclass
class ModelParams:
    """Hidden-layer weights (one matrix if shared) plus the linear readout."""

    w: list[np.ndarray]
    b: list[np.ndarray] | None
    w_out: np.ndarray
    b_out: np.ndarray

    def copy(self) -> "ModelParams":
        return ModelParams([w.copy() for w in self.w],
                           None if self.b is None else [b.copy() for b in self.b],
                           self.w_out.copy(), self.b_out.copy())

    def flat(self) -> list[np.ndarray]:
        out = list(self.w) + ([] if self.b is None else list(self.b))
        return out + [self.w_out, self.b_out]


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    train_acc: float
    val_acc: float
    test_acc: float


def init_model(config: TrainConfig, n_classes: int) -> ModelParams:
    """Glorot hidden weights, zero biases, glorot readout; seed-deterministic."""
    root = np.random.SeedSequence(config.seed)
    n_mats = 1 if config.shared_weights else config.depth
    seqs = root.spawn(n_mats + 1)
    m = config.width
    w = [init_weights((m, m), int(s.generate_state(1, np.uint64)[0]))
         for s in seqs[:n_mats]]
    b = [np.zeros(m) for _ in range(n_mats)] if config.bias else None
    w_out = init_weights((m, n_classes),
                         int(seqs[-1].generate_state(1, np.uint64)[0]))
    return ModelParams(w, b, w_out, np.zeros(n_classes))


def _layer_param(params: ModelParams, n: int) -> tuple[np.ndarray, np.ndarray | None]:
    i = 0 if len(params.w) == 1 else n
    return params.w[i], None if params.b is None else params.b[i]


def forward_hidden(params: ModelParams, config: TrainConfig, g: Graph,
                   x0: np.ndarray) -> list[np.ndarray]:
    """Plain forward pass; returns features at every layer 0..depth."""
    op = normalized_operator(g)
    feats = [np.asarray(x0, dtype=np.float64)]
    for n in range(config.depth):
        w, b = _layer_param(params, n)
        h = op @ feats[-1] @ w
        if b is not None:
            h = h + b
        feats.append(np.maximum(h, 0.0))
    return feats


def predict_logits(params: ModelParams, config: TrainConfig, g: Graph,
                   x0: np.ndarray) -> np.ndarray:
    return forward_hidden(params, config, g, x0)[-1] @ params.w_out + params.b_out


def accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return float("nan")
    pred = logits[mask].argmax(axis=1)
    return float(np.mean(pred == labels[mask]))


def loss_and_grad(params: ModelParams, config: TrainConfig, g: Graph,
                  x0: np.ndarray, labels: np.ndarray,
                  mask: np.ndarray) -> tuple[float, ModelParams]:
    """Masked cross-entropy after depth shared-weight GCN steps plus readout.

    Returns the scalar loss and gradients in ModelParams layout; with shared
    weights the per-layer contributions accumulate on the single matrix.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("loss needs a non-empty mask")
    op = normalized_operator(g)
    tape = Tape()
    w_slots = [tape.leaf(w) for w in params.w]
    b_slots = [tape.leaf(b) for b in params.b] if params.b is not None else None
    w_out_slot = tape.leaf(params.w_out)
    b_out_slot = tape.leaf(params.b_out)

    h = tape.leaf(x0)
    for n in range(config.depth):
        i = 0 if len(params.w) == 1 else n
        h = tape.matmul(tape.sparse_apply(op, h), w_slots[i])
        if b_slots is not None:
            h = tape.add_bias(h, b_slots[i])
        h = tape.relu(h)
    logits = tape.add_bias(tape.matmul(h, w_out_slot), b_out_slot)
    probs = tape.row_softmax(logits)
    loss_slot = tape.cross_entropy(probs, labels, mask)
    loss = float(tape.values[loss_slot])
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite training loss")

    grads = tape.backward(loss_slot)

    def grad_of(slot: int, like: np.ndarray) -> np.ndarray:
        return np.asarray(grads.get(slot, np.zeros_like(like)))

    gw = [grad_of(s, w) for s, w in zip(w_slots, params.w)]
    gb = None if b_slots is None else \
        [grad_of(s, b) for s, b in zip(b_slots, params.b)]
    return loss, ModelParams(gw, gb, grad_of(w_out_slot, params.w_out),
                             grad_of(b_out_slot, params.b_out))


class _Adam:
    def __init__(self, shapes, lr, beta1, beta2, eps):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, tensors, grads):
        self.t += 1
        for i, (p, g) in enumerate(zip(tensors, grads)):
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            mhat = self.m[i] / (1 - self.b1 ** self.t)
            vhat = self.v[i] / (1 - self.b2 ** self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def train(config: TrainConfig, g: Graph, x0: np.ndarray,
          labels: np.ndarray) -> tuple[ModelParams, list[EpochMetrics]]:
    """Full-batch training; deterministic per seed; returns the parameters of
    the best validation epoch together with the per-epoch metric trace."""
    labels = np.asarray(labels)
    n_classes = int(labels[labels >= 0].max()) + 1
    params = init_model(config, n_classes)
    tensors = params.flat()
    opt = _Adam([t.shape for t in tensors], config.lr, config.beta1,
                config.beta2, config.eps) if config.optimizer == "adam" else None

    best = params.copy()
    best_val = -np.inf
    metrics: list[EpochMetrics] = []
    for epoch in range(config.epochs):
        try:
            loss, grads = loss_and_grad(params, config, g, x0, labels,
                                        config.train_mask)
        except FloatingPointError as exc:
            raise RuntimeError(f"training diverged at epoch {epoch}: {exc}") from exc
        gtensors = grads.flat()
        if opt is not None:
            opt.step(tensors, gtensors)
        else:
            for p, gr in zip(tensors, gtensors):
                p -= config.lr * gr
        logits = predict_logits(params, config, g, x0)
        em = EpochMetrics(epoch, loss,
                          accuracy(logits, labels, config.train_mask),
                          accuracy(logits, labels, config.val_mask),
                          accuracy(logits, labels, config.test_mask))
        metrics.append(em)
        if em.val_acc > best_val:
            best_val = em.val_acc
            best = params.copy()
    if not metrics:
        best = params.copy()
    return best, metrics


def trained_energy_profile(params: ModelParams, config: TrainConfig, g: Graph,
                           x0: np.ndarray) -> MeasureSeries:
    """Layer-wise Dirichlet measure of the trained forward pass."""
    feats = forward_hidden(params, config, g, x0)
    vals = [dirichlet_measure(f, g) for f in feats]
    meta = {"depth": config.depth, "width": config.width,
            "bias": config.bias, "seed": config.seed,
            "shared_weights": config.shared_weights}
    return MeasureSeries(np.arange(config.depth + 1), np.array(vals),
                         "dirichlet", meta)
