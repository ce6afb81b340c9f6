import dataclasses
from types import SimpleNamespace

import numpy as np
import pytest

from eval_checker.checker import aggregate_checks, replicate_check
from eval_checker.custom_exception import PreconditionError, YieldShortfallWarning
from eval_checker.eval_checker_constant import GENERATION_STREAM, THETA_DRAW_SUBJECT, TRUTH_DESIGN
from eval_checker.eval_runner import plan, resolve_workers, runner
from eval_checker.eval_runner_helper import (
    SimScenario,
    calibrate_theta_draw_sd,
    draw_theta,
    generate_dataset,
    generate_metrics_csv,
    generate_plot_data,
    is_sparse,
    record_result,
    run_scenario,
    sparsity_yield,
)
from model_handler.constant import SIM_YIELD_TARGET
from model_handler.handler_map import handler_map
from model_handler.probit_gibbs import SamplerConfig
from model_handler.stochastics import RngStream
from model_handler.utils import read_csv


def _handlers(*names, **kwargs):
    return {name: handler_map[name](name, **kwargs) for name in names}


def _frequentist():
    return _handlers("gee", "bootstrap", "erm", resamples=300)


@pytest.mark.parametrize("K", [2, 3, 4, 5])
def test_design_keeps_the_sparse_cell_rare(K):
    scenario = SimScenario(K=K, theta12=0.1)
    assert len(scenario.theta_true) == 2 * K
    assert scenario.theta_true[1] == 0.1
    assert scenario.theta_true[K + 1] == 0.005
    assert scenario.design_rho == pytest.approx(0.095)


def test_scenario_validation():
    with pytest.raises(PreconditionError):
        SimScenario(K=6, theta12=0.1)
    with pytest.raises(PreconditionError):
        SimScenario(K=2, theta12=0.1, theta_true=(0.1, 0.2, 0.3))
    with pytest.raises(PreconditionError):
        SimScenario(K=2, theta12=0.1, theta_draw_sd=-0.01)
    with pytest.raises(PreconditionError):
        SimScenario(K=2, theta12=0.1, theta_draw="cluster")


def test_fixed_theta_reproduces_the_column_rates(rng):
    scenario = SimScenario(K=2, theta12=0.1, n=20000, theta_draw_sd=0.0)
    table = generate_dataset(scenario, rng)
    np.testing.assert_allclose(table.column_means(), scenario.theta_true, atol=0.01)


def test_empty_specialty_column_rate_at_fixed_theta():
    scenario = SimScenario(K=2, theta12=0.1, theta_draw_sd=0.0)
    root = RngStream(1)
    empty = [generate_dataset(scenario, root.child(i)).x[:, 3].sum() == 0 for i in range(2000)]
    assert np.mean(empty) == pytest.approx(0.995**75, abs=0.03)


def test_clamping_puts_mass_at_zero(rng):
    scenario = SimScenario(K=2, theta12=0.1, n=4000, theta_draw_sd=0.05, theta_draw=THETA_DRAW_SUBJECT)
    theta_star = draw_theta(scenario, rng)
    assert theta_star.shape == (4000, 4)
    assert theta_star.min() >= 0.0 and theta_star.max() <= 1.0
    assert np.mean(theta_star[:, 3] == 0.0) == pytest.approx(0.460, abs=0.03)


def test_yield_extremes(rng):
    always = SimScenario(K=2, theta12=0.1, theta_draw_sd=0.0, batch_size=200, theta_true=(0.05, 0.1, 0.25, 0.0))
    assert sparsity_yield(always, 1, rng) == 1.0
    never = SimScenario(K=2, theta12=0.2, theta_draw_sd=0.0, batch_size=500, theta_true=(0.05, 0.2, 0.25, 0.5))
    assert sparsity_yield(never, 1, rng) < 0.01


def test_subject_level_draws_can_be_calibrated_into_the_target_yield(rng):
    scenario = SimScenario(K=2, theta12=0.05, theta_draw=THETA_DRAW_SUBJECT, batch_size=1000)
    chosen, yields = calibrate_theta_draw_sd(scenario, rng)
    assert chosen is not None
    low, high = SIM_YIELD_TARGET
    assert low <= yields[chosen] <= high
    assert yields[0.0] > high


def test_replicates_are_sparse_and_scored_by_every_method(rng):
    scenario = SimScenario(K=2, theta12=0.2, replicates_target=5, batch_size=100, max_batches=2)
    result = run_scenario(scenario, _frequentist(), rng)
    assert len(result.records) == 15
    assert [record["method"] for record in result.records[:3]] == ["gee", "bootstrap", "erm"]
    for record in result.records:
        batch, index = divmod(record["dataset"], scenario.batch_size)
        table = generate_dataset(scenario, rng.child(GENERATION_STREAM, batch, index))
        assert is_sparse(table, scenario.sparse_set)
    for metrics in result.metrics.values():
        assert metrics["replicates"] == 5
        assert 0.0 <= metrics["coverage"] <= 1.0
        assert 0.0 <= metrics["power"] <= 1.0
        assert metrics["width"] >= 0.0


def test_scenarios_replay_exactly(rng):
    scenario = SimScenario(K=2, theta12=0.15, replicates_target=4, batch_size=100)
    first = run_scenario(scenario, _frequentist(), rng)
    second = run_scenario(scenario, _frequentist(), RngStream(rng.seed))
    assert first.records == second.records


def test_design_truth_scores_against_the_design_rho(rng):
    scenario = SimScenario(K=2, theta12=0.15, replicates_target=3, batch_size=100)
    result = run_scenario(scenario, _handlers("gee"), rng, truth=TRUTH_DESIGN)
    assert all(record["truth"] == pytest.approx(scenario.design_rho) for record in result.records)


def test_yield_shortfall_is_reported(rng):
    scenario = SimScenario(
        K=2,
        theta12=0.2,
        theta_draw_sd=0.0,
        replicates_target=5,
        batch_size=50,
        max_batches=1,
        theta_true=(0.05, 0.2, 0.25, 0.5),
    )
    with pytest.warns(YieldShortfallWarning):
        result = run_scenario(scenario, _handlers("gee"), rng)
    assert result.replicates < 5
    assert result.warnings


def test_replicate_check_and_aggregation():
    report = SimpleNamespace(
        model="gee",
        rho_hat=np.array([0.1, 0.05]),
        interval_low=np.array([0.0, 0.01]),
        interval_high=np.array([0.2, 0.09]),
        significant=np.array([False, True]),
    )
    hit = replicate_check(report, 0.04, 1)
    assert hit["covered"] and hit["rejects"]
    assert hit["bias"] == pytest.approx(0.01)
    assert hit["width"] == pytest.approx(0.08)
    miss = replicate_check(report, 0.1, 1)
    metrics = aggregate_checks([hit, miss])
    assert metrics["coverage"] == 0.5
    assert metrics["power"] == 1.0
    assert metrics["replicates"] == 2
    assert np.isnan(aggregate_checks([])["coverage"])


def test_metrics_and_plot_data_files(tmp_path, rng):
    metrics_table = {}
    for theta12 in (0.15, 0.2):
        scenario = SimScenario(K=2, theta12=theta12, replicates_target=3, batch_size=100)
        record_result(metrics_table, run_scenario(scenario, _frequentist(), rng))
    metrics_files = generate_metrics_csv(metrics_table, tmp_path)
    assert [path.rsplit("/", 1)[-1] for path in metrics_files] == [
        "metrics_K2_theta12_0.15.csv",
        "metrics_K2_theta12_0.20.csv",
    ]
    metrics = read_csv(metrics_files[0])
    assert metrics["method"].tolist() == ["gee", "bootstrap", "erm"]
    assert (metrics["replicates"] == 3).all()
    (plot_file,) = generate_plot_data(metrics_table, tmp_path)
    plot = read_csv(plot_file)
    assert len(plot) == 3 * 4 * 2
    assert set(plot["metric"]) == {"coverage", "power", "bias", "width"}


def test_plan_covers_the_grid():
    cells = plan([2, 3, 4, 5], [0.05, 0.1, 0.15, 0.2], replicates_target=10)
    assert len(cells) == 16
    assert {(cell.K, cell.theta12) for cell in cells} == {(K, t) for K in (2, 3, 4, 5) for t in (0.05, 0.1, 0.15, 0.2)}


def test_workers_are_capped_by_the_environment(monkeypatch):
    monkeypatch.setenv("MMP_THREADS", "3")
    assert resolve_workers(8) == 3
    assert resolve_workers(2) == 2
    assert resolve_workers() == 3
    monkeypatch.delenv("MMP_THREADS")
    assert resolve_workers(4) == 1


def test_runner_writes_every_output(tmp_path, rng):
    scenarios = [dataclasses.replace(cell, batch_size=100) for cell in plan([2], [0.2], replicates_target=3)]
    metrics_table, written = runner(scenarios, _handlers("gee", "erm"), rng, str(tmp_path), show_progress=False)
    names = sorted(path.rsplit("/", 1)[-1] for path in written)
    assert names == ["metrics_K2_theta12_0.20.csv", "plot_data_K2.csv", "replicates_K2_theta12_0.20.csv"]
    assert set(metrics_table[(2, 0.2)]) == {"gee", "erm"}


@pytest.mark.slow
def test_scaled_study_reproduces_the_method_ordering(rng):
    config = SamplerConfig(total_iterations=4000, burn_in=2000)
    names = ("naive", "penalized", "mvp", "gee", "bootstrap", "erm")
    handlers = _handlers(*names, sampler_config=config, resamples=2000)
    results = {
        theta12: run_scenario(SimScenario(K=2, theta12=theta12, replicates_target=50), handlers, rng)
        for theta12 in (0.05, 0.20)
    }
    for result in results.values():
        assert result.metrics["mvp"]["replicates"] == 50
        assert result.metrics["mvp"]["coverage"] >= 0.88
        for name in names:
            assert abs(result.metrics[name]["bias"]) <= 0.05
    for name in names:
        assert results[0.20].metrics[name]["power"] >= 0.8
    assert results[0.05].metrics["erm"]["power"] <= results[0.05].metrics["gee"]["power"]
