import dataclasses
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from tqdm import tqdm

from eval_checker.checker import aggregate_checks, replicate_check
from eval_checker.custom_exception import PreconditionError, YieldShortfallWarning
from eval_checker.eval_checker_constant import (
    GENERATION_STREAM,
    METHOD_STREAM,
    METRICS,
    SUBSAMPLE_STREAM,
    THETA_DRAW_DATASET,
    THETA_DRAW_MODES,
    THETA_DRAW_SUBJECT,
    TRUTH_DATASET,
    TRUTH_DESIGN,
    TRUTH_MODES,
)
from model_handler.constant import (
    ALL_MODELS,
    DEFAULT_SEED,
    SIM_BATCH_SIZE,
    SIM_CALIBRATION_GRID,
    SIM_MAX_BATCHES,
    SIM_N_SUBJECTS,
    SIM_REPLICATES,
    SIM_SPARSE_SET,
    SIM_THETA_DRAW_SD,
    SIM_THETA_TEMPLATES,
    SIM_YIELD_TARGET,
)
from model_handler.mmp_table import MatchedBinaryTable, paired_counts, sparsity_flags
from model_handler.stochastics import draw_bernoulli_matrix
from model_handler.utils import write_csv

COLUMNS = [
    "method",
    "K",
    "theta12",
    "coverage",
    "power",
    "bias",
    "width",
    "replicates",
    "sparse_yield",
    "theta_draw",
    "theta_draw_sd",
    "truth",
]

RECORD_COLUMNS = [
    "K",
    "theta12",
    "replicate",
    "dataset",
    "method",
    "estimate",
    "lower",
    "upper",
    "truth",
    "covered",
    "rejects",
    "bias",
    "width",
]


@dataclass(frozen=True)
class SimScenario:
    K: int
    theta12: float
    n: int = SIM_N_SUBJECTS
    theta_draw_sd: float = SIM_THETA_DRAW_SD
    theta_draw: str = THETA_DRAW_DATASET
    replicates_target: int = SIM_REPLICATES
    batch_size: int = SIM_BATCH_SIZE
    max_batches: int = SIM_MAX_BATCHES
    sparse_set: int = SIM_SPARSE_SET
    seed: int = DEFAULT_SEED
    theta_true: tuple = None

    def __post_init__(self):
        if self.theta_true is None:
            if self.K not in SIM_THETA_TEMPLATES:
                raise PreconditionError(f"no design theta for K = {self.K}; pass theta_true explicitly")
            theta = tuple(self.theta12 if value is None else value for value in SIM_THETA_TEMPLATES[self.K])
            object.__setattr__(self, "theta_true", theta)
        theta = np.asarray(self.theta_true, dtype=np.float64)
        if theta.shape != (2 * self.K,):
            raise PreconditionError(f"theta_true needs {2 * self.K} entries, got {theta.size}")
        if ((theta < 0) | (theta > 1)).any():
            raise PreconditionError("theta_true entries must lie in [0, 1]")
        if self.theta_draw_sd < 0:
            raise PreconditionError(f"theta_draw_sd must be nonnegative, got {self.theta_draw_sd}")
        if self.theta_draw not in THETA_DRAW_MODES:
            raise PreconditionError(f"theta_draw must be one of {THETA_DRAW_MODES}, got '{self.theta_draw}'")
        if not 0 <= self.sparse_set < self.K:
            raise PreconditionError(f"sparse set index {self.sparse_set} is outside 0..{self.K - 1}")
        if min(self.n, self.replicates_target, self.batch_size, self.max_batches) < 1:
            raise PreconditionError("n, replicates_target, batch_size and max_batches must be positive")
        object.__setattr__(self, "theta_true", tuple(float(value) for value in theta))

    @property
    def set_labels(self):
        return tuple(f"set{k + 1}" for k in range(self.K))

    def rho(self, theta):
        theta = np.asarray(theta)
        return float(theta[self.sparse_set] - theta[self.K + self.sparse_set])

    @property
    def design_rho(self):
        return self.rho(self.theta_true)


def draw_theta(scenario, rng):
    """theta* ~ MVN(theta_true, sd^2 I) clamped to [0, 1]: one vector, or one row per subject."""
    theta = np.asarray(scenario.theta_true)
    shape = (scenario.n, theta.size) if scenario.theta_draw == THETA_DRAW_SUBJECT else theta.shape
    draw = theta + scenario.theta_draw_sd * rng.generator.standard_normal(shape)
    return np.clip(draw, 0.0, 1.0)


def generate_replicate(scenario, rng):
    """A dataset and the theta that generated it (the subject average in subject mode)."""
    theta_star = draw_theta(scenario, rng)
    probabilities = np.broadcast_to(theta_star, (scenario.n, 2 * scenario.K))
    table = MatchedBinaryTable(draw_bernoulli_matrix(probabilities, rng), scenario.set_labels)
    truth = theta_star if theta_star.ndim == 1 else theta_star.mean(axis=0)
    return table, truth


def generate_dataset(scenario, rng):
    return generate_replicate(scenario, rng)[0]


def is_sparse(table, set_index):
    return bool(sparsity_flags(paired_counts(table))[set_index])


def _dataset_stream(rng, batch, index):
    return rng.child(GENERATION_STREAM, batch, index)


def sparsity_yield(scenario, batches, rng):
    """Fraction of generated datasets sparse on the designed set; streams match run_scenario."""
    flags = [
        is_sparse(generate_dataset(scenario, _dataset_stream(rng, batch, index)), scenario.sparse_set)
        for batch in range(batches)
        for index in range(scenario.batch_size)
    ]
    return float(np.mean(flags))


def calibrate_theta_draw_sd(scenario, rng, grid=SIM_CALIBRATION_GRID, batches=1, target=SIM_YIELD_TARGET):
    """Picks the grid sd whose sparse yield is inside ``target``, closest to its midpoint.

    Returns (sd or None, {sd: yield}).
    """
    yields = {}
    for sd in grid:
        yields[sd] = sparsity_yield(dataclasses.replace(scenario, theta_draw_sd=sd), batches, rng)
    low, high = target
    inside = [sd for sd, value in yields.items() if low <= value <= high]
    if not inside:
        return None, yields
    midpoint = 0.5 * (low + high)
    return min(inside, key=lambda sd: abs(yields[sd] - midpoint)), yields


def collect_sparse_datasets(scenario, rng, show_progress=False):
    """Batches of datasets until enough are sparse on the designed set or the cap is hit."""
    sparse = []
    generated = 0
    batches_used = 0
    for batch in tqdm(range(scenario.max_batches), desc="Generating batches", disable=not show_progress, leave=False):
        batches_used += 1
        for index in range(scenario.batch_size):
            table, theta_star = generate_replicate(scenario, _dataset_stream(rng, batch, index))
            generated += 1
            if is_sparse(table, scenario.sparse_set):
                sparse.append((generated - 1, table, theta_star))
        if len(sparse) >= scenario.replicates_target:
            break
    return sparse, generated, batches_used


def score_replicate(handlers, replicate, dataset, table, truth, set_index, rng):
    """Runs every method on one replicate; each method draws from its own stream."""
    checks = []
    for name, handler in handlers.items():
        report = handler.inference(table, rng.child(METHOD_STREAM, replicate, ALL_MODELS.index(name)))
        check = replicate_check(report, truth, set_index)
        check.update({"replicate": replicate, "dataset": dataset})
        checks.append(check)
    return checks


@dataclass
class ScenarioResult:
    scenario: SimScenario
    truth_mode: str
    metrics: dict
    records: list
    generated: int
    sparse_found: int
    batches_used: int
    warnings: list = field(default_factory=list)

    @property
    def sparse_yield(self):
        return self.sparse_found / self.generated if self.generated else 0.0

    @property
    def replicates(self):
        return min(self.sparse_found, self.scenario.replicates_target)


def run_scenario(scenario, handlers, rng, truth=TRUTH_DATASET, workers=1, show_progress=False):
    if not handlers:
        raise PreconditionError("at least one method is required")
    if truth not in TRUTH_MODES:
        raise PreconditionError(f"truth must be one of {TRUTH_MODES}, got '{truth}'")

    sparse, generated, batches_used = collect_sparse_datasets(scenario, rng, show_progress)
    issued = []
    if len(sparse) < scenario.replicates_target:
        shortfall = YieldShortfallWarning(len(sparse), scenario.replicates_target, batches_used)
        warnings.warn(shortfall)
        issued.append(str(shortfall))
        chosen = np.arange(len(sparse))
    else:
        chosen = np.sort(
            rng.child(SUBSAMPLE_STREAM).generator.choice(len(sparse), size=scenario.replicates_target, replace=False)
        )

    jobs = []
    for replicate, position in enumerate(chosen):
        dataset, table, theta_star = sparse[position]
        target = scenario.design_rho if truth == TRUTH_DESIGN else scenario.rho(theta_star)
        jobs.append((replicate, dataset, table, target))

    if workers > 1 and len(jobs) > 1:
        import ray

        ray.init(num_cpus=workers, ignore_reinit_error=True, include_dashboard=False, log_to_driver=False)
        remote_score = ray.remote(score_replicate)
        handlers_ref = ray.put(handlers)
        futures = [
            remote_score.remote(handlers_ref, replicate, dataset, table, target, scenario.sparse_set, rng)
            for replicate, dataset, table, target in jobs
        ]
        results = [ray.get(future) for future in tqdm(futures, desc="Replicates", disable=not show_progress, leave=False)]
    else:
        results = [
            score_replicate(handlers, replicate, dataset, table, target, scenario.sparse_set, rng)
            for replicate, dataset, table, target in tqdm(jobs, desc="Replicates", disable=not show_progress, leave=False)
        ]

    records = [check for checks in results for check in checks]
    for record in records:
        record.update({"K": scenario.K, "theta12": scenario.theta12})
    records.sort(key=lambda record: (record["replicate"], ALL_MODELS.index(record["method"])))
    metrics = {
        name: aggregate_checks([record for record in records if record["method"] == name]) for name in handlers
    }
    return ScenarioResult(
        scenario=scenario,
        truth_mode=truth,
        metrics=metrics,
        records=records,
        generated=generated,
        sparse_found=len(sparse),
        batches_used=batches_used,
        warnings=issued,
    )


def record_result(metrics_table, result):
    """Files one scenario's metrics under metrics_table[(K, theta12)][method]."""
    scenario = result.scenario
    cell = metrics_table.setdefault((scenario.K, scenario.theta12), {})
    for method, metrics in result.metrics.items():
        cell[method] = dict(
            metrics,
            sparse_yield=result.sparse_yield,
            theta_draw=scenario.theta_draw,
            theta_draw_sd=scenario.theta_draw_sd,
            truth=result.truth_mode,
        )


def metrics_frame(metrics_table, K=None, theta12=None):
    data = []
    for (cell_K, cell_theta12), methods in sorted(metrics_table.items()):
        if (K is not None and cell_K != K) or (theta12 is not None and cell_theta12 != theta12):
            continue
        for method, metrics in methods.items():
            data.append(dict(metrics, method=method, K=cell_K, theta12=cell_theta12))
    return pd.DataFrame(data, columns=COLUMNS)


def records_frame(records):
    return pd.DataFrame(records, columns=RECORD_COLUMNS)


def metrics_file_name(K, theta12):
    return f"metrics_K{K}_theta12_{theta12:.2f}.csv"


def generate_metrics_csv(metrics_table, output_path, metadata=None):
    written = []
    for K, theta12 in sorted(metrics_table):
        path = os.path.join(output_path, metrics_file_name(K, theta12))
        written.append(write_csv(metrics_frame(metrics_table, K, theta12), path, metadata))
    return written


def generate_plot_data(metrics_table, output_path, metadata=None):
    """Long-format coverage/power/bias/width vs. theta12 data, one file per K."""
    frame = metrics_frame(metrics_table)
    written = []
    for K in sorted(frame["K"].unique()):
        part = frame[frame["K"] == K]
        long = part.melt(
            id_vars=["K", "theta12", "method"], value_vars=list(METRICS), var_name="metric", value_name="value"
        ).sort_values(["metric", "method", "theta12"], kind="stable")
        written.append(write_csv(long.reset_index(drop=True), os.path.join(output_path, f"plot_data_K{K}.csv"), metadata))
    return written
