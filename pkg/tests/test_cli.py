import json

import numpy as np
import pytest

from oversmooth.cli import run_cli
from oversmooth.io import read_series


def run(args):
    return run_cli([str(a) for a in args])


class TestPropagate:
    def test_example_row_count(self, tmp_path):
        out = tmp_path / "s.csv"
        rc = run(["propagate", "--synthetic", "grid:10x10", "--model", "gcn",
                  "--layers", 128, "--dim", 128, "--seed", 1,
                  "--measure", "dirichlet,mad", "--out", out])
        assert rc == 0
        data = [l for l in out.read_text().splitlines()
                if not l.startswith("#")]
        assert len(data) == 1 + 258  # header + 2 measures x 129 samples

    def test_metadata_comments_present(self, tmp_path):
        out = tmp_path / "s.csv"
        run(["propagate", "--synthetic", "ring:6", "--model", "gcn",
             "--layers", 4, "--dim", 4, "--out", out])
        text = out.read_text()
        assert "# model: gcn" in text
        assert "# graph_hash: " in text

    def test_unknown_model_exit_2(self, tmp_path):
        rc = run(["propagate", "--synthetic", "ring:5", "--model", "nosuch",
                  "--out", tmp_path / "x.csv"])
        assert rc == 2

    def test_unknown_subcommand_exit_2(self):
        assert run(["frobnicate"]) == 2

    def test_runtime_failure_exit_1(self, tmp_path):
        rc = run(["propagate", "--graph", tmp_path / "missing.txt",
                  "--model", "gcn", "--out", tmp_path / "x.csv"])
        assert rc == 1

    def test_graph_file_with_idmap(self, tmp_path):
        gpath = tmp_path / "g.txt"
        gpath.write_text("a b\nb c\n")
        out = tmp_path / "s.csv"
        rc = run(["propagate", "--graph", gpath, "--model", "gcn",
                  "--layers", 3, "--dim", 4, "--out", out])
        assert rc == 0
        idmap = json.loads((tmp_path / "s.csv.idmap.json").read_text())
        assert idmap == {"a": 0, "b": 1, "c": 2}


class TestFitDecay:
    def test_grid_gcn_dirichlet_exponential(self, tmp_path):
        scsv = tmp_path / "s.csv"
        run(["propagate", "--synthetic", "grid:10x10", "--model", "gcn",
             "--layers", 128, "--dim", 128, "--seed", 1,
             "--measure", "dirichlet,mad", "--out", scsv])
        fout = tmp_path / "fit.json"
        rc = run(["fit-decay", "--in", scsv, "--out", fout])
        assert rc == 0
        fits = json.loads(fout.read_text())
        key = [k for k in fits if k.endswith("/dirichlet")][0]
        assert fits[key]["classification"] == "exponential"

    def test_single_series_flat_json(self, tmp_path):
        scsv = tmp_path / "s.csv"
        run(["propagate", "--synthetic", "ring:12", "--model", "gcn",
             "--layers", 16, "--dim", 8, "--out", scsv])
        fout = tmp_path / "fit.json"
        rc = run(["fit-decay", "--in", scsv, "--out", fout,
                  "--measure", "dirichlet"])
        assert rc == 0
        assert "classification" in json.loads(fout.read_text())

    def test_filter_everything_fails(self, tmp_path):
        scsv = tmp_path / "s.csv"
        run(["propagate", "--synthetic", "ring:12", "--model", "gcn",
             "--layers", 16, "--dim", 8, "--out", scsv])
        rc = run(["fit-decay", "--in", scsv, "--measure", "nothere"])
        assert rc == 1


class TestAxioms:
    def test_dirichlet_passes(self, capsys, tmp_path):
        out = tmp_path / "ax.json"
        rc = run(["axioms", "--measure", "dirichlet", "--synthetic",
                  "complete:4", "--trials", 200, "--out", out])
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["passed"] is True

    def test_mad_counterexample_found(self, tmp_path):
        out = tmp_path / "ax.json"
        rc = run(["axioms", "--measure", "mad", "--synthetic", "ring:6",
                  "--trials", 100, "--dim", 1, "--positive", "--out", out])
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["passed"] is False


class TestSweep:
    def test_sweep_runs_and_writes_table(self, tmp_path):
        cfg = {
            "defaults": {"layers": 8, "dim": 4,
                         "measures": ["dirichlet", "mad"]},
            "runs": [
                {"model": "gcn", "synthetic": "ring:8", "seed": 0},
                {"model": "gat", "synthetic": "ring:8", "seed": 1},
            ],
        }
        cpath = tmp_path / "sweep.json"
        cpath.write_text(json.dumps(cfg))
        out = tmp_path / "table.csv"
        rc = run(["sweep", "--config", cpath, "--out", out,
                  "--series-dir", tmp_path / "series"])
        assert rc == 0
        lines = [l for l in out.read_text().splitlines()
                 if not l.startswith("#")]
        assert len(lines) == 1 + 4  # header + 2 runs x 2 measures
        assert list((tmp_path / "series").glob("*.csv"))

    def test_empty_config_rejected(self, tmp_path):
        cpath = tmp_path / "sweep.json"
        cpath.write_text(json.dumps({"runs": []}))
        assert run(["sweep", "--config", cpath,
                    "--out", tmp_path / "t.csv"]) == 1


class TestTrainCli:
    def test_train_outputs(self, tmp_path, sample_edge_path,
                           sample_label_path):
        prefix = tmp_path / "run"
        rc = run(["train", "--graph", sample_edge_path, "--labels",
                  sample_label_path, "--depths", "1,2", "--dim", 8,
                  "--epochs", 3, "--out-prefix", prefix])
        assert rc == 0
        acc = (tmp_path / "run_accuracy.csv").read_text().splitlines()
        data = [l for l in acc if not l.startswith("#")]
        assert data[0] == "depth,train_acc,val_acc,test_acc,run_id"
        assert len(data) == 3
        energy = read_series(tmp_path / "run_energy.csv")
        assert {s.metadata["run_id"] for s in energy} == {
            f"gcn-sample_edges-d{d}-biason-seed0" for d in (1, 2)}
        epochs = (tmp_path / "run_epochs.csv").read_text().splitlines()
        assert len([l for l in epochs if not l.startswith("#")]) == 1 + 2 * 3

    def test_missing_split_is_error(self, tmp_path):
        gpath = tmp_path / "g.txt"
        gpath.write_text("0 1\n1 2\n")
        lpath = tmp_path / "l.txt"
        lpath.write_text("0 0\n1 1\n2 0\n")
        rc = run(["train", "--graph", gpath, "--labels", lpath,
                  "--depths", "1", "--out-prefix", tmp_path / "x"])
        assert rc == 1


class TestCt:
    def test_heat_series_written(self, tmp_path):
        out = tmp_path / "ct.csv"
        rc = run(["ct", "--dynamics", "heat", "--synthetic", "ring:10",
                  "--t-end", "2.0", "--dt", "0.01", "--dim", 16, "--out", out])
        assert rc == 0
        series = read_series(out)
        assert len(series) == 1
        assert series[0].index[0] == 0.0

    def test_invalid_dt_exit_1(self, tmp_path):
        rc = run(["ct", "--dynamics", "heat", "--synthetic", "ring:10",
                  "--t-end", "1.0", "--dt", "2.0",
                  "--out", tmp_path / "x.csv"])
        assert rc == 1


class TestPlot:
    def test_svg_written(self, tmp_path):
        scsv = tmp_path / "s.csv"
        run(["propagate", "--synthetic", "ring:12", "--model", "gcn",
             "--layers", 16, "--dim", 8, "--out", scsv])
        out = tmp_path / "p.svg"
        assert run(["plot", "--in", scsv, "--out", out]) == 0
        assert out.read_text().startswith("<?xml")

    def test_semilogy_axes(self, tmp_path):
        scsv = tmp_path / "s.csv"
        run(["propagate", "--synthetic", "ring:12", "--model", "gcn",
             "--layers", 16, "--dim", 8, "--out", scsv])
        out = tmp_path / "p.svg"
        assert run(["plot", "--in", scsv, "--out", out,
                    "--axes", "semilogy"]) == 0


class TestDeterminism:
    def assert_identical(self, args_fn, tmp_path, names):
        for tag in ("a", "b"):
            rc = run(args_fn(tmp_path / tag))
            assert rc == 0
        for name in names:
            fa = (tmp_path / "a").with_name("a" + name)
            fb = (tmp_path / "b").with_name("b" + name)
            assert fa.read_bytes() == fb.read_bytes(), name

    def test_propagate_bytes(self, tmp_path):
        def args(base):
            return ["propagate", "--synthetic", "grid:5x5", "--model",
                    "dropedge-gcn", "--layers", 12, "--dim", 8, "--seed", 3,
                    "--out", str(base) + ".csv"]
        self.assert_identical(args, tmp_path, [".csv"])

    def test_ct_bytes(self, tmp_path):
        def args(base):
            return ["ct", "--dynamics", "gcn", "--synthetic", "ring:8",
                    "--t-end", "1.0", "--dt", "0.01", "--dim", 8,
                    "--out", str(base) + ".csv"]
        self.assert_identical(args, tmp_path, [".csv"])

    def test_plot_bytes(self, tmp_path):
        scsv = tmp_path / "s.csv"
        run(["propagate", "--synthetic", "ring:12", "--model", "gcn",
             "--layers", 16, "--dim", 8, "--out", scsv])

        def args(base):
            return ["plot", "--in", scsv, "--out", str(base) + ".svg"]
        self.assert_identical(args, tmp_path, [".svg"])
