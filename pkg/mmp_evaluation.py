import argparse
import io
import os
import sys
import warnings

import pandas as pd

from analysis.report import compare_to_published, comparison_table, format_posterior_table
from apply_run_config import apply_run_config
from eval_checker.custom_exception import MMPError, RunConfigError
from eval_checker.eval_checker_constant import (
    RED_FONT,
    RESET,
    THETA_DRAW_DATASET,
    THETA_DRAW_MODES,
    TRUTH_DATASET,
    TRUTH_MODES,
)
from eval_checker.eval_runner import plan, resolve_workers, runner
from model_handler.constant import (
    ALL_MODELS,
    DEFAULT_A,
    DEFAULT_BOOTSTRAP_RESAMPLES,
    DEFAULT_BURN_IN,
    DEFAULT_CHAINS,
    DEFAULT_ITERATIONS,
    DEFAULT_L_SCORES,
    DEFAULT_SEED,
    DEFAULT_THINNING,
    DEFAULT_XI,
    FAST_BURN_IN,
    FAST_ITERATIONS,
    SIM_BATCH_SIZE,
    SIM_DEFAULT_MODELS,
    SIM_K_GRID,
    SIM_MAX_BATCHES,
    SIM_REPLICATES,
    SIM_THETA12_GRID,
    SIM_THETA_DRAW_SD,
)
from model_handler.handler_map import handler_map
from model_handler.mmp_table import (
    PATTERN_COUNT_LAYOUT,
    WIDE_LAYOUT,
    ingest_csv,
    load_soc_table,
    paired_counts,
    sparsity_flags,
)
from model_handler.model_style import ModelStyle
from model_handler.posterior import chain_from_frame, summarize
from model_handler.probit_gibbs import SamplerConfig
from model_handler.stochastics import RngStream
from model_handler.utils import ROOT, RunMetadata, read_csv, read_metadata, write_csv, write_json

MODEL_CHOICES = ALL_MODELS + ("all",)


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--out-dir", type=str, default=None, help="Defaults to ./result/<command>.")
    parser.add_argument("--format", type=str, default="csv", choices=("csv", "json"), help="Format of summary files.")
    parser.add_argument("--config", type=str, default=None, help="Flat `key = value` run-config file.")
    parser.add_argument("--no-progress", action="store_true", default=False, help="Hide progress bars.")


def _add_sampler(parser):
    parser.add_argument("--iterations", type=int, default=None, help=f"Total sweeps (default {DEFAULT_ITERATIONS}).")
    parser.add_argument("--burn-in", type=int, default=None, help=f"Discarded sweeps (default {DEFAULT_BURN_IN}).")
    parser.add_argument("--thinning", type=int, default=DEFAULT_THINNING)
    parser.add_argument("--chains", type=int, default=DEFAULT_CHAINS)
    parser.add_argument(
        "--fast",
        action="store_true",
        default=False,
        help=f"Desk-scale schedule: {FAST_ITERATIONS} sweeps, {FAST_BURN_IN} burn-in.",
    )
    parser.add_argument("--A", type=float, default=DEFAULT_A, help="Half-Cauchy scale of sqrt(lambda).")
    parser.add_argument("--xi", type=float, default=DEFAULT_XI, help="Weight of the zeroth-derivative penalty.")
    parser.add_argument("--scores", type=int, default=DEFAULT_L_SCORES, help="Number of FPCA scores.")
    parser.add_argument("--resamples", type=int, default=DEFAULT_BOOTSTRAP_RESAMPLES)
    parser.add_argument("--keep-fpca-blocks", action="store_true", default=False)
    parser.add_argument("--debug", action="store_true", default=False, help="Check the latent sign pattern every sweep.")


def get_parser():
    parser = argparse.ArgumentParser(description="Inference for multivariate matched proportions.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    analyze = subparsers.add_parser("analyze", help="Run methods on a subject-level CSV.")
    analyze.add_argument("--input", type=str, required=True)
    analyze.add_argument("--pattern-counts", action="store_true", default=False, help="Input is pattern rows plus a count column.")
    analyze.add_argument("--model", type=str, nargs="+", default=["mvp"], choices=MODEL_CHOICES)
    _add_sampler(analyze)
    _add_common(analyze)

    soc = subparsers.add_parser("soc-demo", help="Re-analyse the embedded SOC data.")
    soc.add_argument("--model", type=str, nargs="+", default=["mvp"], choices=MODEL_CHOICES)
    _add_sampler(soc)
    _add_common(soc)

    diagnose = subparsers.add_parser("diagnose", help="Summaries and Gelman-Rubin diagnostics of a chain file.")
    diagnose.add_argument("--input", type=str, required=True, help="A *_chain.csv file written by analyze.")
    _add_common(diagnose)

    simulate = subparsers.add_parser("simulate", help="Sparse-response simulation study.")
    simulate.add_argument("--K", type=int, nargs="+", default=list(SIM_K_GRID))
    simulate.add_argument("--theta12", type=float, nargs="+", default=list(SIM_THETA12_GRID))
    simulate.add_argument("--replicates", type=int, default=SIM_REPLICATES)
    simulate.add_argument("--model", type=str, nargs="+", default=list(SIM_DEFAULT_MODELS), choices=MODEL_CHOICES)
    simulate.add_argument("--plan-only", action="store_true", default=False)
    simulate.add_argument("--truth", type=str, default=TRUTH_DATASET, choices=TRUTH_MODES)
    simulate.add_argument("--theta-draw", type=str, default=THETA_DRAW_DATASET, choices=THETA_DRAW_MODES)
    simulate.add_argument("--theta-sd", type=float, default=SIM_THETA_DRAW_SD)
    simulate.add_argument("--batch-size", type=int, default=SIM_BATCH_SIZE)
    simulate.add_argument("--max-batches", type=int, default=SIM_MAX_BATCHES)
    simulate.add_argument("--workers", type=int, default=None, help="Replicate workers, capped by MMP_THREADS.")
    _add_sampler(simulate)
    _add_common(simulate)
    return parser


def model_names(requested):
    return list(ALL_MODELS) if "all" in requested else list(dict.fromkeys(requested))


def build_sampler_config(args, show_progress=True):
    iterations = args.iterations or (FAST_ITERATIONS if args.fast else DEFAULT_ITERATIONS)
    burn_in = args.burn_in if args.burn_in is not None else (FAST_BURN_IN if args.fast else DEFAULT_BURN_IN)
    return SamplerConfig(
        total_iterations=iterations,
        burn_in=burn_in,
        thinning=args.thinning,
        chains=args.chains,
        seed=args.seed,
        debug=args.debug,
        show_progress=show_progress and not args.no_progress,
    )


def build_handlers(names, args, show_progress=True):
    config = build_sampler_config(args, show_progress)
    return {
        name: handler_map[name](
            name,
            sampler_config=config,
            A=args.A,
            xi=args.xi,
            scores=args.scores,
            resamples=args.resamples,
            keep_fpca_blocks=args.keep_fpca_blocks,
        )
        for name in names
    }


def effective_config(args):
    return {key: value for key, value in sorted(vars(args).items()) if key not in ("out_dir", "config", "no_progress")}


def describe_table(table):
    counts = paired_counts(table)
    sparse = sparsity_flags(counts)
    print(f"📄 Data: n={table.n} subjects, K={table.K} sets ({', '.join(table.set_labels)})")
    for k, label in enumerate(table.set_labels):
        n11, n12, n21, n22 = counts.for_set(label)
        flag = "  ❗️sparse" if sparse[k] else ""
        print(f"    {label}: n11={n11} n12={n12} n21={n21} n22={n22}{flag}")
    return counts


def run_analysis(table, args, metadata, written, published=False):
    out_dir = args.out_dir
    counts = describe_table(table)
    written.append(write_json(counts.to_dict(), os.path.join(out_dir, "paired_counts.json"), metadata))

    rng = RngStream(args.seed)
    handlers = build_handlers(model_names(args.model), args)
    reports = []
    for name, handler in handlers.items():
        print(f"🧮 Model: {name}")
        report = handler.inference(table, rng.child(ALL_MODELS.index(name)))
        written.extend(handler.write(report, out_dir, args.format, metadata))
        reports.append(report)
        if handler.model_style == ModelStyle.BAYESIAN:
            print(format_posterior_table(report.rows, title=f"Posterior summary ({name})"))
            if published:
                print(compare_to_published(report.rows).to_string(index=False, float_format=lambda v: f"{v:.3f}"))
        else:
            print(report.to_frame().to_string(index=False, float_format=lambda v: f"{v:.4f}"))
            for row in report.rows:
                if row["degenerate"]:
                    print(f"❗️Warning: {name} estimate for {row['component']} is degenerate (zero variance).")
        print(f"✅ Completed: {name}")

    if len(reports) > 1:
        written.append(write_csv(comparison_table(reports), os.path.join(out_dir, "comparison.csv"), metadata))
    print(f"🏁 Analysis completed. See {os.path.abspath(out_dir)} for results.")
    return reports


def cmd_analyze(args, metadata, written):
    layout = PATTERN_COUNT_LAYOUT if args.pattern_counts else WIDE_LAYOUT
    table = ingest_csv(args.input, layout=layout)
    return run_analysis(table, args, metadata, written)


def cmd_soc_demo(args, metadata, written):
    return run_analysis(load_soc_table(), args, metadata, written, published=True)


def cmd_diagnose(args, metadata, written):
    header = read_metadata(args.input)
    chain = chain_from_frame(read_csv(args.input), model=header.get("model", "unknown"))
    print(f"🔍 Chain: {args.input} ({chain.n_chains} chain(s) x {chain.n_retained} draws)")
    rows = [row.as_dict() for row in summarize(chain)]
    print(format_posterior_table(rows, title=f"Diagnostics ({chain.model})"))
    summary_path = os.path.join(args.out_dir, f"{chain.model}_diagnostics.{args.format}")
    if args.format == "json":
        written.append(write_json({"model": chain.model, "rows": rows}, summary_path, metadata))
    else:
        written.append(write_csv(pd.DataFrame(rows), summary_path, metadata))
    return rows


def cmd_simulate(args, metadata, written):
    scenarios = plan(
        args.K,
        args.theta12,
        replicates_target=args.replicates,
        theta_draw=args.theta_draw,
        theta_draw_sd=args.theta_sd,
        batch_size=args.batch_size,
        max_batches=args.max_batches,
        seed=args.seed,
    )
    if args.plan_only:
        for scenario in scenarios:
            print(f"📋 K={scenario.K} theta12={scenario.theta12:.2f} theta={scenario.theta_true}")
        print(f"{len(scenarios)} planned cells")
        return scenarios
    handlers = build_handlers(model_names(args.model), args, show_progress=False)
    workers = resolve_workers(args.workers)
    metrics_table, _ = runner(
        scenarios,
        handlers,
        RngStream(args.seed),
        args.out_dir,
        truth=args.truth,
        workers=workers,
        metadata=metadata,
        show_progress=not args.no_progress,
        written=written,
    )
    return metrics_table


COMMANDS = {
    "analyze": cmd_analyze,
    "soc-demo": cmd_soc_demo,
    "diagnose": cmd_diagnose,
    "simulate": cmd_simulate,
}


def _print_warning(message, category, filename, lineno, file=None, line=None):
    print(f"❗️Warning: {message}")


def _remove(paths):
    for path in paths:
        try:
            os.remove(path)
        except OSError:
            pass


def _fail(command, message, written):
    print(f"\n{RED_FONT}{'-' * 30} {command} failed {'-' * 30}{RESET}")
    print(f"{RED_FONT}{message}{RESET}")
    print(f"{RED_FONT}Removed {len(written)} partial output file(s).{RESET}\n")
    _remove(written)
    return 1


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = get_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=str, default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            apply_run_config(parser, known.config)
        except (RunConfigError, OSError) as e:
            parser.error(str(e))
    args = parser.parse_args(argv)
    if args.out_dir is None:
        args.out_dir = os.path.join(ROOT, "result", args.command)

    metadata = RunMetadata.start(args.seed, effective_config(args))
    written = []
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        warnings.showwarning = _print_warning
        try:
            COMMANDS[args.command](args, metadata, written)
        except MMPError as e:
            return _fail(args.command, e.message, written)
        except Exception as e:
            return _fail(args.command, f"❗️Unexpected {type(e).__name__}: {e}", written)
    return 0


if __name__ == "__main__":
    # Set UTF-8 encoding for standard output so the status emoji print on any console
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8")
    sys.exit(main())
