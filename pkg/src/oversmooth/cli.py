"""Command-line surface: propagate, sweep, fit-decay, axioms, train, ct
and plot subcommands over the library, with reproducible file outputs."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import graph as graphs
from . import io as gio
from .harness import (ACTIVATIONS, MEASURES, MODELS, RunConfig,
                      init_features, propagate_record, sweep)
from .measures import (measure_by_name, gaussian_sampler, positive_sampler,
                       verify_axioms)
from .ode import FIELDS, INTEGRATORS, OdeConfig, detect_ct_oversmoothing, \
    integrate_record
from .series import (DEFAULT_FLOOR, DEFAULT_MIN_R2, DEFAULT_MIN_RATE,
                     fit_decay)
from .train import (TrainConfig, accuracy, predict_logits, train,
                    trained_energy_profile)


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", help="edge-list file")
    src.add_argument("--synthetic",
                     help="generator spec, e.g. grid:10x10, ring:50, "
                          "complete:20, star:12, barbell:8")


def _resolve_graph(args) -> tuple[graphs.Graph, str, dict | None]:
    """Returns (graph, label, id_map)."""
    if args.synthetic:
        g = graphs.generate(args.synthetic)
        return g, args.synthetic.replace(":", ""), None
    g, id_map = gio.load_graph(args.graph)
    import pathlib
    label = pathlib.Path(args.graph).stem
    return g, label, id_map


def _bool_flag(value: str) -> bool:
    return {"on": True, "off": False}[value]


def _maybe_write_idmap(id_map, out_path) -> None:
    if id_map is None:
        return
    path = str(out_path) + ".idmap.json"
    with open(path, "w", encoding="utf-8", newline="") as f:
        json.dump(id_map, f, indent=2, sort_keys=True)
        f.write("\n")


def _config_from_args(args, g, label) -> RunConfig:
    return RunConfig(
        model=args.model, graph=g, depth=args.layers, width=args.dim,
        seed=args.seed, weight_mode=args.weights.replace("-", "_"),
        bias=_bool_flag(args.bias),
        measures=tuple(args.measure.split(",")),
        p=args.p, degree_normalized=args.degree_normalized,
        activation=args.activation, graph_label=label,
        pairnorm_s=args.pairnorm_s, graphcon_gamma=args.graphcon_gamma,
        graphcon_alpha=args.graphcon_alpha, graphcon_dt=args.graphcon_dt,
        g2_p=args.g2_p, gcnii_alpha=args.gcnii_alpha,
        gcnii_lambda=args.gcnii_lambda, dropedge_rate=args.dropedge_rate,
    )


def _run_metadata(config: RunConfig) -> dict:
    return {
        "model": config.model,
        "graph": config.graph_label,
        "graph_hash": graphs.graph_hash(config.graph),
        "seed": config.seed,
        "layers": config.depth,
        "dim": config.width,
        "weights": config.weight_mode,
        "bias": "on" if config.bias else "off",
    }


def cmd_propagate(args) -> int:
    g, label, id_map = _resolve_graph(args)
    config = _config_from_args(args, g, label)
    out = propagate_record(config)
    gio.write_series(out.values(), args.out, _run_metadata(config))
    _maybe_write_idmap(id_map, args.out)
    return 0


def cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="utf-8") as f:
        spec = json.load(f)
    defaults = spec.get("defaults", {})
    runs = spec.get("runs")
    if not runs:
        raise ValueError(f"{args.config}: no runs defined")
    configs = []
    for entry in runs:
        merged = dict(defaults, **entry)
        if "synthetic" in merged:
            g = graphs.generate(merged["synthetic"])
            label = merged["synthetic"].replace(":", "")
        elif "graph" in merged:
            g, _ = gio.load_graph(merged["graph"])
            import pathlib
            label = pathlib.Path(merged["graph"]).stem
        else:
            raise ValueError("sweep run needs 'graph' or 'synthetic'")
        configs.append(RunConfig(
            model=merged["model"], graph=g, depth=merged.get("layers", 128),
            width=merged.get("dim", 128), seed=merged.get("seed", 0),
            weight_mode=merged.get("weights", "per_layer").replace("-", "_"),
            bias=bool(merged.get("bias", False)),
            measures=tuple(merged.get("measures", ["dirichlet"])),
            p=merged.get("p", 2.0),
            degree_normalized=bool(merged.get("degree_normalized", False)),
            activation=merged.get("activation", "relu"), graph_label=label,
            pairnorm_s=merged.get("pairnorm_s", 1.0),
            graphcon_gamma=merged.get("graphcon_gamma", 1.0),
            graphcon_alpha=merged.get("graphcon_alpha", 0.25),
            graphcon_dt=merged.get("graphcon_dt", 1.0),
            g2_p=merged.get("g2_p", 6.0),
            gcnii_alpha=merged.get("gcnii_alpha", 0.1),
            gcnii_lambda=merged.get("gcnii_lambda", 1.0),
            dropedge_rate=merged.get("dropedge_rate", 0.5),
        ))
    rows = sweep(configs, floor=spec.get("floor", DEFAULT_FLOOR),
                 min_rate=spec.get("min_rate", DEFAULT_MIN_RATE),
                 min_r2=spec.get("min_r2", DEFAULT_MIN_R2))
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        f.write(f"# config: {args.config}\n")
        f.write(f"# runs: {len(rows)}\n")
        f.write("run_id,model,graph,seed,measure,c1,c2,r2_exp,r2_alg,"
                "classification,floor_index,error\n")
        for row in rows:
            base = (f"{row.run_id},{row.config.model},"
                    f"{row.config.graph_label},{row.config.seed}")
            if row.error is not None:
                f.write(f"{base},,,,,,,,{row.error}\n")
                continue
            for name in sorted(row.fits):
                fit = row.fits[name]
                fi = "" if fit.floor_truncation_index is None \
                    else fit.floor_truncation_index
                f.write(f"{base},{name},{fit.c1:.12e},{fit.c2:.12e},"
                        f"{fit.r_squared_exp:.12e},{fit.r_squared_alg:.12e},"
                        f"{fit.classification},{fi},\n")
    if args.series_dir:
        import pathlib
        d = pathlib.Path(args.series_dir)
        d.mkdir(parents=True, exist_ok=True)
        for row in rows:
            if row.error is None:
                gio.write_series(row.series.values(),
                                 d / f"{row.run_id}.csv",
                                 _run_metadata(row.config))
    return 0


def cmd_fit_decay(args) -> int:
    series = gio.read_series(args.infile)
    if args.measure:
        series = [s for s in series if s.measure_name == args.measure]
    if args.run_id:
        series = [s for s in series if s.metadata.get("run_id") == args.run_id]
    if not series:
        raise ValueError("no series left after filtering")
    fits = {}
    for s in series:
        if args.from_index is not None:
            s = s.since(args.from_index)
        key = f"{s.metadata.get('run_id', '')}/{s.measure_name}"
        fits[key] = fit_decay(s, floor=args.floor, min_rate=args.min_rate,
                              min_r2=args.min_r2)
    if args.out:
        gio.write_fit_json(fits, args.out)
    for key in sorted(fits):
        fit = fits[key]
        print(f"{key}: {fit.classification} c1={fit.c1:.6g} c2={fit.c2:.6g} "
              f"r2_exp={fit.r_squared_exp:.4f} r2_alg={fit.r_squared_alg:.4f}")
    return 0


def cmd_axioms(args) -> int:
    g, label, _ = _resolve_graph(args)
    measure = measure_by_name(args.measure, args.p, args.degree_normalized)
    sampler = positive_sampler if args.positive else gaussian_sampler
    report = verify_axioms(measure, g, trials=args.trials, tol=args.tol,
                           m=args.dim, seed=args.seed, sampler=sampler)
    print(f"measure={args.measure} graph={label} trials={report.trials} "
          f"tol={report.tol}")
    print(report.summary())
    for chk in report.checks():
        if not chk.passed and chk.first_failed_trial is not None:
            print(f"  first {chk.name!r} counterexample at trial "
                  f"{chk.first_failed_trial}")
    if args.out:
        payload = {
            "measure": args.measure,
            "graph": label,
            "trials": report.trials,
            "tol": report.tol,
            "passed": report.passed,
            "checks": {c.name: {"passed": c.passed, "failures": c.failures,
                                "first_failed_trial": c.first_failed_trial}
                       for c in report.checks()},
        }
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    return 0


def cmd_train(args) -> int:
    g, label, id_map = _resolve_graph(args)
    v = g.node_count
    labels, masks, _ = gio.load_labels(args.labels, v, id_map)
    if args.splits:
        masks = gio.load_splits(args.splits, v, id_map)
    if masks is None:
        raise ValueError("no train/val/test split: add a split column to the "
                         "label file or pass --splits")
    if np.any((labels < 0) & (masks["train"] | masks["val"] | masks["test"])):
        raise ValueError("split contains unlabeled nodes")
    depths = [int(d) for d in args.depths.split(",")]
    x0 = init_features(v, args.dim, args.seed)
    acc_rows = []
    energy_series = []
    epoch_rows = []
    for depth in depths:
        config = TrainConfig(depth=depth, width=args.dim,
                             train_mask=masks["train"], val_mask=masks["val"],
                             test_mask=masks["test"],
                             shared_weights=(args.weights == "shared"),
                             bias=_bool_flag(args.bias), lr=args.lr,
                             epochs=args.epochs, optimizer=args.optimizer,
                             seed=args.seed)
        best, metrics = train(config, g, x0, labels)
        run_id = (f"gcn-{label}-d{depth}-bias{args.bias}-seed{args.seed}")
        logits = predict_logits(best, config, g, x0)
        acc_rows.append((depth,
                         accuracy(logits, labels, masks["train"]),
                         accuracy(logits, labels, masks["val"]),
                         accuracy(logits, labels, masks["test"]), run_id))
        profile = trained_energy_profile(best, config, g, x0)
        profile.metadata["run_id"] = run_id
        energy_series.append(profile)
        for em in metrics:
            epoch_rows.append((run_id, em.epoch, em.loss, em.train_acc,
                               em.val_acc, em.test_acc))
    meta = {"graph": label, "graph_hash": graphs.graph_hash(g),
            "dim": args.dim, "seed": args.seed, "bias": args.bias,
            "weights": args.weights, "epochs": args.epochs, "lr": args.lr}
    prefix = args.out_prefix
    with open(f"{prefix}_accuracy.csv", "w", encoding="utf-8", newline="") as f:
        for key in sorted(meta):
            f.write(f"# {key}: {meta[key]}\n")
        f.write("depth,train_acc,val_acc,test_acc,run_id\n")
        for depth, a, b, c, run_id in acc_rows:
            f.write(f"{depth},{a:.12e},{b:.12e},{c:.12e},{run_id}\n")
    gio.write_series(energy_series, f"{prefix}_energy.csv", meta)
    with open(f"{prefix}_epochs.csv", "w", encoding="utf-8", newline="") as f:
        for key in sorted(meta):
            f.write(f"# {key}: {meta[key]}\n")
        f.write("run_id,epoch,loss,train_acc,val_acc,test_acc\n")
        for run_id, epoch, loss, ta, va, te in epoch_rows:
            f.write(f"{run_id},{epoch},{loss:.12e},{ta:.12e},{va:.12e},"
                    f"{te:.12e}\n")
    _maybe_write_idmap(id_map, prefix)
    return 0


def cmd_ct(args) -> int:
    g, label, id_map = _resolve_graph(args)
    field = {"heat": "heat_diffusion", "graphcon": "graphcon_ode",
             "gcn": "gcn_field"}[args.dynamics]
    config = OdeConfig(field=field, t_end=args.t_end, dt=args.dt,
                       sample_stride=args.stride, integrator=args.integrator,
                       seed=args.seed, gamma=args.gamma, alpha=args.alpha,
                       activation=args.activation, measure=args.measure,
                       p=args.p, degree_normalized=args.degree_normalized)
    x0 = init_features(g.node_count, args.dim, args.seed)
    series = integrate_record(config, g, x0)
    series.metadata["run_id"] = f"{field}-{label}-seed{args.seed}"
    meta = {"dynamics": field, "graph": label,
            "graph_hash": graphs.graph_hash(g), "integrator": args.integrator,
            "dt": args.dt, "t_end": args.t_end, "dim": args.dim,
            "seed": args.seed}
    gio.write_series([series], args.out, meta)
    _maybe_write_idmap(id_map, args.out)
    if args.fit:
        fit = detect_ct_oversmoothing(series, warmup=args.warmup)
        print(f"{series.metadata['run_id']}: {fit.classification} "
              f"c2={fit.c2:.6g} r2_exp={fit.r_squared_exp:.4f}")
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_series_csv
    plot_series_csv(args.infile, args.out, axes=args.axes)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oversmooth",
        description="measure and mitigate over-smoothing in graph "
                    "message passing")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propagate", help="propagate random features and "
                                         "record measures per layer")
    _add_graph_args(p)
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--layers", type=int, default=128)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bias", choices=("on", "off"), default="off")
    p.add_argument("--weights", choices=("per-layer", "shared"),
                   default="per-layer")
    p.add_argument("--measure", default="dirichlet",
                   help=f"comma list from {', '.join(MEASURES)}")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--degree-normalized", action="store_true")
    p.add_argument("--activation", choices=tuple(ACTIVATIONS), default="relu")
    p.add_argument("--pairnorm-s", type=float, default=1.0)
    p.add_argument("--graphcon-gamma", type=float, default=1.0)
    p.add_argument("--graphcon-alpha", type=float, default=0.25)
    p.add_argument("--graphcon-dt", type=float, default=1.0)
    p.add_argument("--g2-p", type=float, default=6.0)
    p.add_argument("--gcnii-alpha", type=float, default=0.1)
    p.add_argument("--gcnii-lambda", type=float, default=1.0)
    p.add_argument("--dropedge-rate", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("sweep", help="run a batch of propagate configs from "
                                     "a JSON file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--series-dir")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit-decay", help="fit and classify decay of series "
                                         "in a CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.add_argument("--measure")
    p.add_argument("--run-id")
    p.add_argument("--floor", type=float, default=DEFAULT_FLOOR)
    p.add_argument("--min-rate", type=float, default=DEFAULT_MIN_RATE)
    p.add_argument("--min-r2", type=float, default=DEFAULT_MIN_R2)
    p.add_argument("--from-index", type=float, default=None,
                   help="drop samples with index below this before fitting")
    p.set_defaults(func=cmd_fit_decay)

    p = sub.add_parser("axioms", help="randomized node-similarity axiom check")
    _add_graph_args(p)
    p.add_argument("--measure", required=True,
                   help=f"one of {', '.join(MEASURES)}")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--degree-normalized", action="store_true")
    p.add_argument("--positive", action="store_true",
                   help="sample strictly positive features")
    p.add_argument("--out")
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("train", help="train shared-weight GCN classifiers "
                                     "over a depth sweep")
    _add_graph_args(p)
    p.add_argument("--labels", required=True)
    p.add_argument("--splits")
    p.add_argument("--depths", default="2,8,32,64")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bias", choices=("on", "off"), default="on")
    p.add_argument("--weights", choices=("shared", "per-layer"),
                   default="shared")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ct", help="integrate continuous-time dynamics and "
                                  "record the measure over time")
    _add_graph_args(p)
    p.add_argument("--dynamics", choices=("heat", "graphcon", "gcn"),
                   required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--integrator", choices=INTEGRATORS, default="rk4")
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--activation", choices=("identity", "relu"),
                   default="identity")
    p.add_argument("--measure", default="dirichlet")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--degree-normalized", action="store_true")
    p.add_argument("--fit", action="store_true",
                   help="print the decay classification of the recorded "
                        "series")
    p.add_argument("--warmup", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ct)

    p = sub.add_parser("plot", help="render a series CSV as SVG")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--axes", choices=("loglog", "semilogy"),
                   default="loglog")
    p.set_defaults(func=cmd_plot)

    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
