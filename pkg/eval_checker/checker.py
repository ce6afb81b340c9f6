"""Per-replicate scoring of a method's report against the known rho of the
designed sparse set, and aggregation of those checks into scenario metrics."""

import numpy as np

from eval_checker.eval_checker_constant import METRICS


def replicate_check(report, truth, set_index):
    """Scores one method on one replicate: is rho covered, is 0 excluded, how far off."""
    estimate = float(report.rho_hat[set_index])
    lower = float(report.interval_low[set_index])
    upper = float(report.interval_high[set_index])
    return {
        "method": report.model,
        "estimate": estimate,
        "lower": lower,
        "upper": upper,
        "truth": float(truth),
        "covered": bool(lower <= truth <= upper),
        "rejects": bool(report.significant[set_index]),
        "bias": estimate - float(truth),
        "width": upper - lower,
    }


def aggregate_checks(checks):
    if not checks:
        return {metric: float("nan") for metric in METRICS} | {"replicates": 0}
    return {
        "coverage": float(np.mean([check["covered"] for check in checks])),
        "power": float(np.mean([check["rejects"] for check in checks])),
        "bias": float(np.mean([check["bias"] for check in checks])),
        "width": float(np.mean([check["width"] for check in checks])),
        "replicates": len(checks),
    }
