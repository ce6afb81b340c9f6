import os

from eval_checker.eval_checker_constant import TRUTH_DATASET
from eval_checker.eval_runner_helper import (
    SimScenario,
    generate_metrics_csv,
    generate_plot_data,
    record_result,
    records_frame,
    run_scenario,
)
from model_handler.constant import THREADS_ENV_VAR
from model_handler.utils import write_csv


def resolve_workers(requested=None):
    """Worker count for the replicate pool, capped by MMP_THREADS (default 1)."""
    try:
        cap = int(os.environ.get(THREADS_ENV_VAR, "1"))
    except ValueError:
        print(f"❗️Warning: ignoring non-integer {THREADS_ENV_VAR}={os.environ[THREADS_ENV_VAR]!r}")
        cap = 1
    cap = max(cap, 1)
    return cap if requested is None else max(1, min(requested, cap))


def plan(K_values, theta12_values, **scenario_kwargs):
    return [SimScenario(K=K, theta12=theta12, **scenario_kwargs) for K in K_values for theta12 in theta12_values]


def runner(
    scenarios,
    handlers,
    rng,
    output_path,
    truth=TRUTH_DATASET,
    workers=1,
    metadata=None,
    show_progress=True,
    written=None,
):
    """Runs every scenario, then writes metrics, replicate records and plot data.

    Paths are appended to ``written`` as soon as each file exists. Returns
    (metrics_table, written).
    """
    metrics_table = {}
    written = [] if written is None else written
    for scenario in scenarios:
        print(f"🎲 Scenario: K={scenario.K}, theta12={scenario.theta12:.2f}, {scenario.replicates_target} sparse replicates")
        scenario_rng = rng.child(scenario.K, int(round(scenario.theta12 * 1000)))
        result = run_scenario(scenario, handlers, scenario_rng, truth, workers, show_progress)
        record_result(metrics_table, result)
        records_path = os.path.join(output_path, f"replicates_K{scenario.K}_theta12_{scenario.theta12:.2f}.csv")
        written.append(write_csv(records_frame(result.records), records_path, metadata))
        summary = ", ".join(
            f"{method} cov={metrics['coverage']:.3f} pow={metrics['power']:.3f}" for method, metrics in result.metrics.items()
        )
        print(f"✅ Completed: yield {result.sparse_yield:.3f} over {result.generated} datasets. {summary}")

    written.extend(generate_metrics_csv(metrics_table, output_path, metadata))
    written.extend(generate_plot_data(metrics_table, output_path, metadata))
    print(f"🏁 Simulation completed. See {os.path.abspath(output_path)} for metrics and plot data.")
    return metrics_table, written
