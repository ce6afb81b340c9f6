import argparse
import math
import os
import sys

import pandas as pd

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from model_handler.constant import SOC_PUBLISHED_SUMMARY, SOC_SET_NAMES  # noqa: E402
from model_handler.utils import read_csv  # noqa: E402

POSTERIOR_TABLE_HEADER = ("Component", "rho", "2.5%", "97.5%", "P(rho>0)", "R-hat", "Upper 95%")
COMPARISON_COLUMNS = ["method", "component", "rho", "lower_2.5", "upper_97.5", "evidence", "significant", "degenerate"]


def _cell(value, digits=3):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return f"{value:.{digits}f}"


def format_posterior_table(rows, title=None):
    """Aligned text in the layout of the published SOC re-analysis table."""
    lines = []
    body = []
    for row in rows:
        label = row["component"]
        body.append(
            (
                SOC_SET_NAMES.get(label, label),
                _cell(row["rho"]),
                _cell(row["lower_2.5"]),
                _cell(row["upper_97.5"]),
                _cell(row.get("P(rho>0)")),
                _cell(row.get("R_hat")),
                _cell(row.get("R_hat_upper_95")),
            )
        )
    widths = [max(len(POSTERIOR_TABLE_HEADER[i]), *(len(line[i]) for line in body)) for i in range(len(POSTERIOR_TABLE_HEADER))]
    rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
    if title:
        lines.append(title)
    lines.append(rule)
    lines.append("  ".join(name.ljust(widths[0]) if i == 0 else name.rjust(widths[i]) for i, name in enumerate(POSTERIOR_TABLE_HEADER)))
    lines.append(rule)
    for line in body:
        lines.append("  ".join(cell.ljust(widths[0]) if i == 0 else cell.rjust(widths[i]) for i, cell in enumerate(line)))
    lines.append(rule)
    return "\n".join(lines)


def comparison_table(reports):
    """One row per (method, set): Bayesian rows carry P(rho>0), frequentist rows their p-value."""
    data = []
    for report in reports:
        for k, row in enumerate(report.rows):
            data.append(
                {
                    "method": report.model,
                    "component": row["component"],
                    "rho": float(report.rho_hat[k]),
                    "lower_2.5": float(report.interval_low[k]),
                    "upper_97.5": float(report.interval_high[k]),
                    "evidence": row.get("P(rho>0)", row.get("p_value")),
                    "significant": bool(report.significant[k]),
                    "degenerate": bool(row.get("degenerate", False)),
                }
            )
    return pd.DataFrame(data, columns=COMPARISON_COLUMNS)


def compare_to_published(rows):
    """Differences from the published SOC estimates, for the sets that have one."""
    data = []
    for row in rows:
        published = SOC_PUBLISHED_SUMMARY.get(row["component"])
        if published is None:
            continue
        median, lower, upper, prob_positive, _, _ = published
        data.append(
            {
                "component": row["component"],
                "rho": row["rho"],
                "published_rho": median,
                "delta_rho": row["rho"] - median,
                "delta_lower": row["lower_2.5"] - lower,
                "delta_upper": row["upper_97.5"] - upper,
                "delta_P(rho>0)": row["P(rho>0)"] - prob_positive,
            }
        )
    return pd.DataFrame(data)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Print a written summary file as an aligned table.")
    parser.add_argument("--summary_csv", type=str, default="./result/mvp_summary.csv")
    parser.add_argument("--published", action="store_true", help="Also print differences from the published SOC estimates.")
    args = parser.parse_args()

    rows = read_csv(args.summary_csv).to_dict("records")
    print(format_posterior_table(rows, title=os.path.basename(args.summary_csv)))
    if args.published:
        print(compare_to_published(rows).to_string(index=False, float_format=lambda v: f"{v:.3f}"))
