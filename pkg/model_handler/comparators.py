"""Frequentist baselines for the per-set difference rho_k = theta_1k - theta_2k:
a working-independence GEE, a subject bootstrap on pre-differenced outcomes,
and the exponential risk model with its one-half sparsity correction.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from statsmodels.stats.multitest import multipletests

from eval_checker.custom_exception import PreconditionError
from model_handler.constant import (
    BOOTSTRAP_BLOCK_SIZE,
    CONFIDENCE,
    DEFAULT_BOOTSTRAP_RESAMPLES,
    SIGNIFICANCE_LEVEL,
)

GEE, BOOTSTRAP, ERM = "GEE", "Bootstrap", "ERM"

# Bootstrap power is judged by its interval; GEE and ERM by their p-values.
INTERVAL_RULE, P_VALUE_RULE = "interval", "p-value"


@dataclass(frozen=True)
class FrequentistResult:
    method: str
    set_labels: tuple
    rho_hat: np.ndarray
    interval_low: np.ndarray
    interval_high: np.ndarray
    p_value: np.ndarray
    decision_rule: str = P_VALUE_RULE
    degenerate: np.ndarray = None
    details: dict = field(default_factory=dict)

    @property
    def K(self):
        return len(self.set_labels)

    def excludes_zero(self):
        return (self.interval_low > 0) | (self.interval_high < 0)

    def significant(self, alpha=SIGNIFICANCE_LEVEL):
        if self.decision_rule == INTERVAL_RULE:
            return self.excludes_zero()
        return self.p_value < alpha

    def rows(self):
        rows = []
        for k, label in enumerate(self.set_labels):
            row = {
                "component": label,
                "method": self.method,
                "rho": float(self.rho_hat[k]),
                "lower_2.5": float(self.interval_low[k]),
                "upper_97.5": float(self.interval_high[k]),
                "p_value": float(self.p_value[k]),
                "degenerate": bool(self.degenerate[k]) if self.degenerate is not None else False,
            }
            for name, values in self.details.items():
                if np.ndim(values) == 1 and len(values) == self.K:
                    row[name] = values[k].item() if hasattr(values[k], "item") else values[k]
            rows.append(row)
        return rows


def _z_critical(confidence):
    return stats.norm.ppf(0.5 + confidence / 2)


def _wald_p_value(estimate, se):
    """Two-sided normal p-value; a zero standard error decides on the estimate alone."""
    p = np.where(estimate == 0, 1.0, 0.0)
    positive = se > 0
    p[positive] = 2.0 * stats.norm.sf(np.abs(estimate[positive] / se[positive]))
    return p


def _check_subjects(table):
    if table.n < 2:
        raise PreconditionError(f"at least two subjects are required, got {table.n}")


def gee_estimate(table, confidence=CONFIDENCE):
    """Identity link, working independence: theta-hat are the column proportions."""
    _check_subjects(table)
    d = table.differences()
    n, K = d.shape
    rho_hat = d.mean(axis=0)
    variance = d.var(axis=0, ddof=1) / n
    se = np.sqrt(variance)
    z = _z_critical(confidence)

    x = table.x
    flat_column = x.var(axis=0) == 0
    degenerate = flat_column[:K] | flat_column[K:] | (variance == 0)

    covariance = np.atleast_2d(np.cov(d, rowvar=False, ddof=1)) / n
    rank = int(np.linalg.matrix_rank(covariance))
    statistic = float(rho_hat @ np.linalg.pinv(covariance) @ rho_hat)
    joint_p = float(stats.chi2.sf(statistic, rank)) if rank > 0 else float("nan")

    return FrequentistResult(
        method=GEE,
        set_labels=table.set_labels,
        rho_hat=rho_hat,
        interval_low=rho_hat - z * se,
        interval_high=rho_hat + z * se,
        p_value=_wald_p_value(rho_hat, se),
        decision_rule=P_VALUE_RULE,
        degenerate=degenerate,
        details={
            "theta": table.column_means(),
            "se": se,
            "joint_statistic": statistic,
            "joint_df": rank,
            "joint_p_value": joint_p,
        },
    )


def bootstrap_means(d, resamples, rng, block_size=BOOTSTRAP_BLOCK_SIZE):
    """(resamples, K) means of subject resamples; block b draws from ``rng.child(b)``."""
    n = d.shape[0]
    blocks = []
    for block, start in enumerate(range(0, resamples, block_size)):
        size = min(block_size, resamples - start)
        index = rng.child(block).generator.integers(0, n, size=(size, n))
        blocks.append(d[index].mean(axis=1))
    return np.concatenate(blocks, axis=0)


def bootstrap_p_values(means):
    B = means.shape[0]
    far_side = np.minimum((means <= 0).sum(axis=0), (means >= 0).sum(axis=0))
    return np.minimum(1.0, (2.0 * far_side + 1.0) / (B + 1.0))


def bootstrap_estimate(
    table,
    rng,
    resamples=DEFAULT_BOOTSTRAP_RESAMPLES,
    confidence=CONFIDENCE,
    alpha=SIGNIFICANCE_LEVEL,
):
    _check_subjects(table)
    if resamples < 1:
        raise PreconditionError(f"resamples must be positive, got {resamples}")
    d = table.differences().astype(np.float64)
    rho_hat = d.mean(axis=0)
    means = bootstrap_means(d, resamples, rng)
    tail = (1 - confidence) / 2
    low, high = np.quantile(means, [tail, 1 - tail], axis=0, method="inverted_cdf")
    p_value = bootstrap_p_values(means)
    reject, p_adjusted, _, _ = multipletests(p_value, alpha=alpha, method="holm")
    return FrequentistResult(
        method=BOOTSTRAP,
        set_labels=table.set_labels,
        rho_hat=rho_hat,
        interval_low=low,
        interval_high=high,
        p_value=p_value,
        decision_rule=INTERVAL_RULE,
        degenerate=(d.var(axis=0) == 0),
        details={"p_holm": p_adjusted, "holm_reject": reject, "resamples": resamples},
    )


def erm_estimate(counts, confidence=CONFIDENCE):
    n12 = counts.n12.astype(np.float64)
    n21 = counts.n21.astype(np.float64)
    corrected = (counts.n12 == 0) | (counts.n21 == 0)
    half = np.where(corrected, 0.5, 0.0)
    n12c, n21c = n12 + half, n21 + half
    n_total = counts.n + corrected.astype(np.float64)

    # Both discordant cells are positive after the correction.
    risk_ratio = n21c / n12c
    log_rr = np.log(risk_ratio)
    se = np.sqrt(1.0 / n21c + 1.0 / n12c)
    rho_hat = (n21c - n12c) / n_total
    z = _z_critical(confidence)
    discordant = (n12c + n21c) / n_total

    def to_difference(rr):
        return discordant * (rr - 1.0) / (rr + 1.0)

    return FrequentistResult(
        method=ERM,
        set_labels=counts.set_labels,
        rho_hat=rho_hat,
        interval_low=to_difference(np.exp(log_rr - z * se)),
        interval_high=to_difference(np.exp(log_rr + z * se)),
        p_value=_wald_p_value(log_rr, se),
        decision_rule=P_VALUE_RULE,
        degenerate=np.zeros(counts.K, dtype=bool),
        details={"risk_ratio": risk_ratio, "log_rr_se": se, "corrected": corrected},
    )
