import math

import pytest

from enetfp.errors import ConfigError
from enetfp.experiments import ExperimentSpec, run_cells, run_experiment, worker_count

NONE = {"kind": "none", "scale": 0.0}


def small_consistency(**over):
    base = dict(n_schedule=(50, 100), seeds=(0, 1, 2), representation_points=512)
    base.update(over)
    return ExperimentSpec.default("consistency", **base)


def test_consistency_smoke_and_report_shape():
    rep = run_experiment(small_consistency())
    assert len(rep.cells) == 6
    assert [(c["n"], c["seed"]) for c in rep.cells] == [(n, s) for n in (50, 100) for s in (0, 1, 2)]
    assert all(c["converged"] for c in rep.cells)
    row = rep.summary["by_eps"][0]["rows"][0]
    assert row["lam"] == pytest.approx(50 ** (-1 / 3))
    assert set(row["error"]) == {"median", "q25", "q75", "iqr"}
    assert rep.provenance["seeds"] == [0, 1, 2] and len(rep.provenance["config_hash"]) == 16
    lines = rep.to_csv().splitlines()
    assert len(lines) == 7 and "error" in lines[0].split(",")


def test_reports_are_reproducible_and_worker_independent():
    spec = small_consistency()
    a = run_experiment(spec).to_json()
    assert run_experiment(spec).to_json() == a
    assert run_experiment(spec, workers=2).to_json() == a
    other = run_experiment(ExperimentSpec.from_dict({**spec.to_dict(), "seed": 1})).to_json()
    assert other != a


def test_noiseless_consistency_is_near_exact():
    spec = small_consistency(noise=NONE, n_schedule=(400,), lambda_scale=1e-4)
    rep = run_experiment(spec)
    assert max(c["error"] for c in rep.cells) <= 1e-2


def test_consistency_trend_has_negative_rank_correlation():
    spec = ExperimentSpec.default("consistency", n_schedule=(100, 400, 1600), seeds=tuple(range(8)),
                                  representation_points=1024)
    entry = run_experiment(spec).summary["by_eps"][0]
    assert entry["spearman_log_n_vs_median_error"] < 0


def _instability(**over):
    base = dict(seeds=(0, 1, 2), noise=NONE)
    base.update(over)
    return ExperimentSpec.default("instability", **base)


def cell(rep, eps, theta, seed=0):
    return next(c for c in rep.cells if c["eps"] == eps and c["seed"] == seed
                and math.isclose(c["theta"], theta))


def test_symmetric_split_at_diagonal():
    rep = run_experiment(_instability(eps_values=(1.0,), theta_count=1))
    for seed in (0, 1, 2):
        c = cell(rep, 1.0, math.pi / 4, seed)
        assert c["support"] == "both"
        assert c["beta_1"] == pytest.approx(c["beta_2"], abs=1e-7)


def test_far_angles_select_one_corner():
    rep = run_experiment(_instability(eps_values=(1.0,), theta_count=1, theta_step=0.5))
    for seed in (0, 1, 2):
        assert cell(rep, 1.0, math.pi / 4 + 0.5, seed)["support"] == "second"
        assert cell(rep, 1.0, math.pi / 4 - 0.5, seed)["support"] == "first"


def test_near_lasso_jumps_while_elastic_net_blends():
    spec = ExperimentSpec.default("instability", seeds=tuple(range(5)))
    rep = run_experiment(spec)
    by_eps = {e["eps"]: e for e in rep.summary["by_eps"]}
    assert by_eps[1.0]["window_seeds"] == 5
    assert by_eps[1e-6]["window_seeds"] == 0
    assert by_eps[1e-6]["delta"]["median"] > 5 * by_eps[1.0]["delta"]["median"]
    assert rep.summary["contrast"]["fraction_ratio_at_least_5"] == 1.0
    assert {c["method"] for c in rep.cells if c["eps"] == 1.0} == {"fixed-point"}


def test_adaptive_noiseless_picks_grid_top():
    spec = ExperimentSpec.default("adaptive", noise=NONE, n_schedule=(200,), seeds=(0, 1),
                                  grid_count=6, representation_points=512)
    rep = run_experiment(spec)
    assert all(c["at_grid_top"] for c in rep.cells)
    assert any("grid top" in f for f in rep.flags)
    assert rep.summary["constants"][0]["A"] > 0


def test_adaptive_cells_are_consistent():
    spec = ExperimentSpec.default("adaptive", n_schedule=(200,), seeds=(0, 1), grid_count=5,
                                  representation_points=512)
    for c in run_experiment(spec).cells:
        assert len(c["errors"]) == 5 and c["errors"][c["min_index"]] == c["min_error"]
        assert c["ratio"] == pytest.approx(c["chosen_error"] / c["min_error"])
        assert c["differences"][0] == 0.0


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec.default("regression")
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({"kind": "consistency", "lambda_exponent": 0.5})
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({"kind": "consistency", "seeds": [1, 1]})
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({"kind": "instability", "theta_step": 0.2, "theta_count": 5})
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({"kind": "adaptive", "bogus": 1})
    spec = ExperimentSpec.default("adaptive", seeds=(3, 4))
    assert ExperimentSpec.from_dict(spec.to_dict()) == spec


def test_worker_count_reads_environment(monkeypatch):
    monkeypatch.setenv("ENET_THREADS", "3")
    assert worker_count() == 3 and worker_count(cap=2) == 2
    monkeypatch.setenv("ENET_THREADS", "zero")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.setenv("ENET_THREADS", "0")
    with pytest.raises(ConfigError):
        worker_count()


def test_run_cells_preserves_order():
    assert run_cells(abs, [-3, 1, -2], workers=2) == [3, 1, 2]
