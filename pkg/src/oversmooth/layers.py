"""Single forward steps of the surveyed message-passing architectures:
GCN, GAT, GraphSAGE and the over-smoothing mitigations built around them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .graph import Graph, build_from_edges, normalized_operator


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def identity(x: np.ndarray) -> np.ndarray:
    return x


@dataclass
class LayerParams:
    """Parameter bundle for one layer step.

    Only the fields used by the chosen architecture need to be set: ``w``/``b``
    for the convolutional core, ``attn`` for attention, ``w_self``/``w_neigh``
    for SAGE, ``gate_w``/``gate_b`` for the gradient gate, and the declared
    scalars for residual mixing, normalization, oscillator coupling, gating
    exponent and edge dropping.
    """

    w: np.ndarray | None = None
    b: np.ndarray | None = None
    attn: np.ndarray | None = None
    w_self: np.ndarray | None = None
    w_neigh: np.ndarray | None = None
    gate_w: np.ndarray | None = None
    gate_b: np.ndarray | None = None
    alpha_n: float = 0.1
    beta_n: float = 1.0
    s: float = 1.0
    gamma: float = 1.0
    alpha: float = 1.0
    dt: float = 1.0
    p: float = 2.0
    drop_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha_n <= 1.0 or not 0.0 <= self.beta_n <= 1.0:
            raise ValueError("alpha_n and beta_n must lie in [0, 1]")
        if self.s <= 0:
            raise ValueError("s must be positive")
        if self.gamma < 0 or self.alpha < 0:
            raise ValueError("gamma and alpha must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.p < 0:
            raise ValueError("p must be non-negative")
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ValueError("drop_rate must lie in [0, 1]")


@dataclass
class GraphconState:
    """Positions X and auxiliary velocities Y of the oscillator update."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.shape != self.y.shape:
            raise ValueError("X and Y must have equal shapes")


def _check_w(x: np.ndarray, w: np.ndarray, what: str = "w") -> None:
    if w is None:
        raise ValueError(f"layer parameter {what!r} is required")
    if w.ndim != 2 or w.shape[0] != x.shape[1]:
        raise ValueError(
            f"{what} of shape {getattr(w, 'shape', None)} does not match "
            f"feature width {x.shape[1]}")


def _gcn_pre(x: np.ndarray, g: Graph, w: np.ndarray,
             b: np.ndarray | None) -> np.ndarray:
    _check_w(x, w)
    out = normalized_operator(g) @ x @ w
    if b is not None:
        out = out + b
    return out


def gcn_step(x: np.ndarray, g: Graph, params: LayerParams,
             activation=relu) -> np.ndarray:
    """Graph convolution: activation(P X W + b) with the normalized operator P."""
    return activation(_gcn_pre(x, g, params.w, params.b))


def _augmented_pairs(g: Graph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directed pairs including a self pair per node, grouped by source row."""
    v = g.node_count
    rows = np.repeat(np.arange(v, dtype=np.int64), g.degrees + 1)
    cols = np.empty(g.indices.size + v, dtype=np.int64)
    src, dst = g.directed_pairs()
    cols[np.arange(dst.size) + src] = dst
    cols[g.indptr[1:] + np.arange(v)] = np.arange(v)
    indptr = g.indptr + np.arange(v + 1, dtype=np.int64)
    return rows, cols, indptr


def _gat_pre(x: np.ndarray, g: Graph, params: LayerParams) -> np.ndarray:
    _check_w(x, params.w)
    h = x @ params.w
    k = h.shape[1]
    if params.attn is None or params.attn.shape != (2 * k,):
        raise ValueError("attn must be a vector of length twice the output width")
    rows, cols, indptr = _augmented_pairs(g)
    logits = h @ params.attn[:k]
    logits = logits[rows] + (h @ params.attn[k:])[cols]
    np.multiply(logits, np.where(logits < 0, 0.2, 1.0), out=logits)  # leaky slope 0.2
    starts = indptr[:-1]
    logits -= np.maximum.reduceat(logits, starts)[rows]
    np.exp(logits, out=logits)
    weights = logits / np.add.reduceat(logits, starts)[rows]
    att = sparse.csr_matrix((weights, (rows, cols)),
                            shape=(g.node_count, g.node_count))
    out = att @ h
    if params.b is not None:
        out = out + params.b
    return out


def gat_step(x: np.ndarray, g: Graph, params: LayerParams,
             activation=relu) -> np.ndarray:
    """Single-head attention step; softmax over N(i) plus self, shared W."""
    return activation(_gat_pre(x, g, params))


def sage_step(x: np.ndarray, g: Graph, params: LayerParams,
              activation=relu) -> np.ndarray:
    """Mean-aggregator SAGE step; empty neighborhoods contribute zero."""
    _check_w(x, params.w_self, "w_self")
    _check_w(x, params.w_neigh, "w_neigh")
    agg = g.adjacency() @ x
    nz = g.degrees > 0
    agg[nz] /= g.degrees[nz, None]
    out = x @ params.w_self + agg @ params.w_neigh
    if params.b is not None:
        out = out + params.b
    return activation(out)


def pairnorm_apply(x: np.ndarray, s: float = 1.0) -> np.ndarray:
    """Center rows by the column mean and rescale the mean squared row norm to s^2."""
    if s <= 0:
        raise ValueError("s must be positive")
    x = np.asarray(x, dtype=np.float64)
    centered = x - x.mean(axis=0)
    scale = np.sqrt(np.mean(np.einsum("ij,ij->i", centered, centered)))
    if scale < 1e-300:
        raise ValueError("degenerate input to PairNorm: all rows equal")
    return centered * (s / scale)


_COUPLINGS = {
    "gcn": lambda x, g, params: _gcn_pre(x, g, params.w, params.b),
    "gat": _gat_pre,
}


def graphcon_step(state: GraphconState, g: Graph, params: LayerParams,
                  activation=relu, coupling: str = "gcn") -> GraphconState:
    """One step of the coupled-oscillator update with auxiliary features Y."""
    pre = _COUPLINGS[coupling](state.x, g, params)
    y = state.y + params.dt * (activation(pre) - params.gamma * state.x
                               - params.alpha * state.y)
    x = state.x + params.dt * y
    return GraphconState(x, y)


def g2_step(x: np.ndarray, g: Graph, params: LayerParams,
            activation=relu, coupling: str = "gcn") -> np.ndarray:
    """Gradient-gated step: per node and channel, interpolate between the
    previous features and a message-passing update by tanh of the local
    gate gradient raised to the power p (|0|^0 counts as 1)."""
    _check_w(x, params.gate_w, "gate_w")
    tau_hat = activation(_gcn_pre(x, g, params.gate_w, params.gate_b))
    rows, cols = g.directed_pairs()
    diff = np.abs(tau_hat[cols] - tau_hat[rows])
    if params.p == 0:
        diff = np.ones_like(diff)
    else:
        diff **= params.p
    acc = np.zeros_like(tau_hat)
    np.add.at(acc, rows, diff)
    tau = np.tanh(acc)
    update = activation(_COUPLINGS[coupling](x, g, params))
    return (1.0 - tau) * x + tau * update


def resgcn_step(x: np.ndarray, g: Graph, params: LayerParams,
                activation=relu) -> np.ndarray:
    """Residual graph convolution X + activation(P X W + b); needs square W."""
    if params.w is None or params.w.shape[0] != params.w.shape[1]:
        raise ValueError("residual step requires a square weight matrix")
    return x + gcn_step(x, g, params, activation)


def gcnii_step(x: np.ndarray, x0: np.ndarray, g: Graph, params: LayerParams,
               activation=relu) -> np.ndarray:
    """Initial-residual, identity-mixed convolution:
    activation[((1 - a) P X + a X0)((1 - b) I + b W)]."""
    if x.shape != x0.shape:
        raise ValueError("X and X0 must have equal shapes")
    _check_w(x, params.w)
    core = (1.0 - params.alpha_n) * (normalized_operator(g) @ x) + params.alpha_n * x0
    return activation((1.0 - params.beta_n) * core + params.beta_n * (core @ params.w))


def dropedge_sample(g: Graph, drop_rate: float, seed: int) -> Graph:
    """Keep each undirected edge independently with probability 1 - drop_rate."""
    if not 0.0 <= drop_rate <= 1.0:
        raise ValueError("drop_rate must lie in [0, 1]")
    edges = g.undirected_edges()
    rng = np.random.default_rng(seed)
    kept = edges[rng.random(edges.shape[0]) >= drop_rate]
    return build_from_edges(kept, g.node_count)
