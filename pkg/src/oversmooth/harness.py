"""Propagation protocol: random features, random weights, N layers of a
chosen architecture, every measure recorded per layer, plus a sweep driver."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import layers
from .graph import Graph
from .measures import measure_by_name
from .series import (DEFAULT_FLOOR, DEFAULT_MIN_R2, DEFAULT_MIN_RATE,
                     DecayFit, MeasureSeries, fit_decay)

MODELS = ("gcn", "gat", "sage", "resgcn", "gcnii", "pairnorm-gcn",
          "graphcon-gcn", "g2-gcn", "dropedge-gcn")

ACTIVATIONS = {"relu": layers.relu, "identity": layers.identity}

MEASURES = ("dirichlet", "dirichlet-energy", "mad")

DEFAULT_WIDTH = 128


@dataclass
class RunConfig:
    """Everything one propagation run depends on.

    ``seed`` drives the input features directly and the weight draws through
    spawned child seeds, so layer-0 values match ``init_features`` and are
    independent of the model.
    """

    model: str
    graph: Graph
    depth: int = 128
    width: int = DEFAULT_WIDTH
    seed: int = 0
    weight_mode: str = "per_layer"
    bias: bool = False
    measures: tuple[str, ...] = ("dirichlet",)
    p: float = 2.0
    degree_normalized: bool = False
    activation: str = "relu"
    graph_label: str = ""
    pairnorm_s: float = 1.0
    graphcon_gamma: float = 1.0
    graphcon_alpha: float = 0.25
    graphcon_dt: float = 1.0
    g2_p: float = 6.0
    gcnii_alpha: float = 0.1
    gcnii_lambda: float = 1.0
    dropedge_rate: float = 0.5

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.depth < 1 or self.width < 1:
            raise ValueError("depth and width must be at least 1")
        if self.weight_mode not in ("per_layer", "shared"):
            raise ValueError("weight_mode must be 'per_layer' or 'shared'")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        self.measures = tuple(self.measures)
        for name in self.measures:
            measure_by_name(name)  # raises on unknown names

    @property
    def run_id(self) -> str:
        label = self.graph_label or f"v{self.graph.node_count}"
        return f"{self.model}-{label}-seed{self.seed}"


def init_features(v: int, m: int, seed: int) -> np.ndarray:
    """Standard normal feature matrix, deterministic per seed."""
    if v < 1 or m < 1:
        raise ValueError("v and m must be at least 1")
    return np.random.default_rng(seed).standard_normal((v, m))


def init_weights(shape, seed: int, scheme: str = "glorot_uniform") -> np.ndarray:
    """Random weight matrix, deterministic per seed.

    ``glorot_uniform`` draws from [-sqrt(6/(fan_in+fan_out)), +...];
    ``fan_in_uniform`` from [-1/sqrt(fan_in), +...], the usual dense-layer
    default, which SAGE needs so its two branches do not double the step
    variance.
    """
    shape = tuple(int(s) for s in shape)
    if any(s < 1 for s in shape) or not shape:
        raise ValueError("weight dimensions must be positive")
    fan_in = shape[0]
    fan_out = shape[1] if len(shape) > 1 else 1
    if scheme == "glorot_uniform":
        limit = np.sqrt(6.0 / (fan_in + fan_out))
    elif scheme == "fan_in_uniform":
        limit = 1.0 / np.sqrt(fan_in)
    else:
        raise ValueError(f"unknown init scheme {scheme!r}")
    return np.random.default_rng(seed).uniform(-limit, limit, size=shape)


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, np.uint64)[0])


def _init_bias(m: int, seed: int) -> np.ndarray:
    # uniform +-1/sqrt(m), the usual linear-layer bias range
    bound = 1.0 / np.sqrt(m)
    return np.random.default_rng(seed).uniform(-bound, bound, size=m)


def _layer_params(config: RunConfig, layer_seq: np.random.SeedSequence,
                  layer_index: int) -> layers.LayerParams:
    """Draw the parameter bundle for one layer; slot order is fixed."""
    m = config.width
    slots = layer_seq.spawn(6)
    kw: dict = {}
    if config.model == "sage":
        kw["w_self"] = init_weights((m, m), _seed_int(slots[0]), "fan_in_uniform")
        kw["w_neigh"] = init_weights((m, m), _seed_int(slots[1]), "fan_in_uniform")
    else:
        kw["w"] = init_weights((m, m), _seed_int(slots[0]))
    if config.bias and config.model != "gcnii":
        kw["b"] = _init_bias(m, _seed_int(slots[2]))
    if config.model == "gat":
        kw["attn"] = init_weights((2 * m,), _seed_int(slots[3]))
    if config.model == "g2-gcn":
        kw["gate_w"] = init_weights((m, m), _seed_int(slots[4]))
        if config.bias:
            kw["gate_b"] = _init_bias(m, _seed_int(slots[5]))
        kw["p"] = config.g2_p
    if config.model == "pairnorm-gcn":
        kw["s"] = config.pairnorm_s
    if config.model == "graphcon-gcn":
        kw["gamma"] = config.graphcon_gamma
        kw["alpha"] = config.graphcon_alpha
        kw["dt"] = config.graphcon_dt
    if config.model == "gcnii":
        n = layer_index + 1
        kw["alpha_n"] = config.gcnii_alpha
        kw["beta_n"] = float(np.log(1.0 + config.gcnii_lambda / n))
    return layers.LayerParams(**kw)


def propagate_record(config: RunConfig) -> dict[str, MeasureSeries]:
    """Run the propagation protocol and record every measure at every layer.

    Returns one series per requested measure, each of length depth + 1
    (layer 0 holds the input features).
    """
    g = config.graph
    act = ACTIVATIONS[config.activation]
    x0 = init_features(g.node_count, config.width, config.seed)
    measure_fns = {
        name: measure_by_name(name, config.p, config.degree_normalized)
        for name in config.measures
    }
    values: dict[str, list[float]] = {name: [] for name in config.measures}

    def record(x: np.ndarray) -> None:
        for name, fn in measure_fns.items():
            values[name].append(fn(x, g))

    root = np.random.SeedSequence(config.seed)
    weight_seq, drop_seq = root.spawn(2)
    n_layers = config.depth if config.weight_mode == "per_layer" else 1
    layer_seqs = weight_seq.spawn(n_layers)
    params = [_layer_params(config, layer_seqs[min(i, n_layers - 1)],
                            layer_index=i)
              for i in range(config.depth)]
    drop_seeds = [_seed_int(s) for s in drop_seq.spawn(config.depth)]

    record(x0)
    x = x0
    state = layers.GraphconState(x0, np.zeros_like(x0)) \
        if config.model == "graphcon-gcn" else None
    for n in range(config.depth):
        pr = params[n]
        if config.model == "gcn":
            x = layers.gcn_step(x, g, pr, act)
        elif config.model == "gat":
            x = layers.gat_step(x, g, pr, act)
        elif config.model == "sage":
            x = layers.sage_step(x, g, pr, act)
        elif config.model == "resgcn":
            x = layers.resgcn_step(x, g, pr, act)
        elif config.model == "gcnii":
            x = layers.gcnii_step(x, x0, g, pr, act)
        elif config.model == "pairnorm-gcn":
            x = layers.pairnorm_apply(layers.gcn_step(x, g, pr, act),
                                      config.pairnorm_s)
        elif config.model == "graphcon-gcn":
            state = layers.graphcon_step(state, g, pr, act, coupling="gcn")
            x = state.x
        elif config.model == "g2-gcn":
            x = layers.g2_step(x, g, pr, act, coupling="gcn")
        elif config.model == "dropedge-gcn":
            g_n = layers.dropedge_sample(g, config.dropedge_rate, drop_seeds[n])
            x = layers.gcn_step(x, g_n, pr, act)
        record(x)

    index = np.arange(config.depth + 1, dtype=np.int64)
    meta = {
        "run_id": config.run_id,
        "model": config.model,
        "graph": config.graph_label or f"v{g.node_count}",
        "seed": config.seed,
        "depth": config.depth,
        "width": config.width,
        "weight_mode": config.weight_mode,
        "bias": config.bias,
    }
    return {
        name: MeasureSeries(index, np.array(vals), name, dict(meta))
        for name, vals in values.items()
    }


@dataclass
class SweepRow:
    """Outcome of one sweep entry; failures are recorded, not raised."""

    run_id: str
    config: RunConfig
    series: dict[str, MeasureSeries] = field(default_factory=dict)
    fits: dict[str, DecayFit] = field(default_factory=dict)
    error: str | None = None


def _run_one(config: RunConfig, floor: float, min_rate: float,
             min_r2: float) -> SweepRow:
    row = SweepRow(config.run_id, config)
    try:
        row.series = propagate_record(config)
        row.fits = {name: fit_decay(s, floor, min_rate, min_r2)
                    for name, s in row.series.items()}
    except Exception as exc:  # per-row isolation
        row.error = f"{type(exc).__name__}: {exc}"
        row.series = {}
        row.fits = {}
    return row


def sweep(configs, floor: float = DEFAULT_FLOOR,
          min_rate: float = DEFAULT_MIN_RATE, min_r2: float = DEFAULT_MIN_R2,
          max_workers: int | None = None) -> list[SweepRow]:
    """Run many configs and fit every recorded measure; rows keep input order.

    Parallelism is bounded by ``max_workers`` or the OVERSMOOTH_THREADS
    environment variable (default: machine cores).
    """
    configs = list(configs)
    if not configs:
        raise ValueError("sweep needs at least one config")
    if max_workers is None:
        max_workers = int(os.environ.get("OVERSMOOTH_THREADS",
                                         os.cpu_count() or 1))
    max_workers = max(1, max_workers)
    if max_workers == 1:
        return [_run_one(c, floor, min_rate, min_r2) for c in configs]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(_run_one, c, floor, min_rate, min_r2)
                   for c in configs]
        return [f.result() for f in futures]
