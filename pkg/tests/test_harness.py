import math

import numpy as np
import pytest

from oversmooth import (LayerParams, MODELS, RunConfig, dirichlet_measure,
                        fit_decay, grid2d, init_features, init_weights,
                        propagate_record, resgcn_step, ring, star, sweep)
from oversmooth.layers import identity

GRID = grid2d(10, 10)


class TestInitFeatures:
    def test_deterministic(self):
        assert np.array_equal(init_features(50, 8, 3), init_features(50, 8, 3))

    def test_different_seeds_differ(self):
        assert not np.array_equal(init_features(50, 8, 3),
                                  init_features(50, 8, 4))

    def test_moments(self):
        x = init_features(10000, 128, 0)
        assert abs(x.mean()) < 0.01
        assert abs(x.std() - 1.0) < 0.01

    def test_validation(self):
        with pytest.raises(ValueError):
            init_features(0, 4, 0)


class TestInitWeights:
    def test_glorot_bound(self):
        w = init_weights((128, 128), 0)
        limit = math.sqrt(6.0 / 256.0)
        assert np.all(np.abs(w) <= limit)
        assert np.abs(w).max() > 0.9 * limit

    def test_deterministic(self):
        assert np.array_equal(init_weights((16, 16), 5), init_weights((16, 16), 5))

    def test_zero_mean_monte_carlo(self):
        w = init_weights((1000, 1000), 1)
        limit = math.sqrt(6.0 / 2000.0)
        sigma = limit / math.sqrt(3.0)
        assert abs(w.mean()) < 3.0 * sigma / 1000.0

    def test_fan_in_scheme(self):
        w = init_weights((64, 64), 2, scheme="fan_in_uniform")
        assert np.all(np.abs(w) <= 1.0 / 8.0)

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            init_weights((4, 4), 0, scheme="nope")


class TestPropagateRecord:
    def test_series_lengths(self):
        cfg = RunConfig(model="gcn", graph=GRID, depth=12, width=8, seed=0,
                        measures=("dirichlet", "mad"))
        out = propagate_record(cfg)
        assert set(out) == {"dirichlet", "mad"}
        assert all(len(s) == 13 for s in out.values())

    def test_layer0_independent_of_model(self):
        vals = []
        for model in MODELS:
            cfg = RunConfig(model=model, graph=GRID, depth=2, width=8, seed=7)
            vals.append(propagate_record(cfg)["dirichlet"].values[0])
        assert np.allclose(vals, vals[0])

    def test_layer0_matches_init_features(self):
        cfg = RunConfig(model="gcn", graph=GRID, depth=2, width=8, seed=5)
        out = propagate_record(cfg)["dirichlet"]
        expected = dirichlet_measure(init_features(100, 8, 5), GRID)
        assert out.values[0] == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("model", [m for m in MODELS])
    def test_deterministic_per_config(self, model):
        cfg = RunConfig(model=model, graph=GRID, depth=6, width=8, seed=3)
        a = propagate_record(cfg)["dirichlet"].values
        b = propagate_record(cfg)["dirichlet"].values
        assert np.array_equal(a, b)

    def test_shared_weight_mode(self):
        per = RunConfig(model="gcn", graph=GRID, depth=8, width=8, seed=1,
                        weight_mode="per_layer")
        sh = RunConfig(model="gcn", graph=GRID, depth=8, width=8, seed=1,
                       weight_mode="shared")
        assert not np.array_equal(propagate_record(per)["dirichlet"].values,
                                  propagate_record(sh)["dirichlet"].values)

    def test_gcn_grid_collapse(self):
        cfg = RunConfig(model="gcn", graph=GRID, depth=128, width=128, seed=0,
                        graph_label="grid")
        d = propagate_record(cfg)["dirichlet"]
        fit = fit_decay(d)
        assert fit.classification == "exponential"
        assert d.values[64] < 1e-10 * d.values[0]

    def test_g2_grid_constant(self):
        cfg = RunConfig(model="g2-gcn", graph=GRID, depth=128, width=128,
                        seed=0)
        d = propagate_record(cfg)["dirichlet"]
        fit = fit_decay(d.since(2), constant_band=math.e)
        assert fit.classification == "constant"

    def test_resgcn_zero_weights_constant_series(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((GRID.node_count, 8))
        params = LayerParams(w=np.zeros((8, 8)))
        mu0 = dirichlet_measure(x, GRID)
        for _ in range(10):
            x = resgcn_step(x, GRID, params, identity)
            assert dirichlet_measure(x, GRID) == pytest.approx(mu0, rel=1e-12)

    def test_invalid_configs(self):
        with pytest.raises(ValueError):
            RunConfig(model="nosuch", graph=GRID)
        with pytest.raises(ValueError):
            RunConfig(model="gcn", graph=GRID, depth=0)
        with pytest.raises(ValueError):
            RunConfig(model="gcn", graph=GRID, measures=("bogus",))
        with pytest.raises(ValueError):
            RunConfig(model="gcn", graph=GRID, weight_mode="magic")


class TestSweep:
    def test_cardinality_and_order(self):
        graphs = {"grid": grid2d(4, 4), "ring": ring(12)}
        configs = [RunConfig(model=m, graph=g, depth=8, width=4, seed=s,
                             graph_label=lbl, measures=("dirichlet", "mad"))
                   for m in ("gcn", "gat", "sage")
                   for lbl, g in graphs.items()
                   for s in (0, 1)]
        rows = sweep(configs, max_workers=2)
        assert len(rows) == 12
        assert [r.run_id for r in rows] == [c.run_id for c in configs]
        for row in rows:
            assert row.error is None
            assert set(row.fits) == {"dirichlet", "mad"}

    def test_deterministic_rerun(self):
        configs = [RunConfig(model="gcn", graph=grid2d(3, 3), depth=6,
                             width=4, seed=s) for s in range(3)]
        r1 = sweep(configs, max_workers=1)
        r2 = sweep(configs, max_workers=3)
        for a, b in zip(r1, r2):
            assert np.array_equal(a.series["dirichlet"].values,
                                  b.series["dirichlet"].values)

    def test_row_failure_isolated(self):
        # pairnorm on a single node degenerates after centering
        bad = RunConfig(model="pairnorm-gcn", graph=star(1), depth=5, width=4,
                        seed=0, graph_label="lone")
        good = RunConfig(model="gcn", graph=ring(6), depth=5, width=4, seed=0)
        rows = sweep([bad, good], max_workers=1)
        assert rows[0].error is not None
        assert "degenerate" in rows[0].error
        assert rows[1].error is None

    def test_empty_sweep_rejected(self):
        with pytest.raises(ValueError):
            sweep([])

    def test_thread_env_bound(self, monkeypatch):
        monkeypatch.setenv("OVERSMOOTH_THREADS", "1")
        rows = sweep([RunConfig(model="gcn", graph=ring(5), depth=4, width=4)])
        assert rows[0].error is None
