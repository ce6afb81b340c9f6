"""Posterior chain storage, per-set summaries and the Gelman-Rubin diagnostic."""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats

from eval_checker.custom_exception import (
    ConvergenceInputError,
    EmptyChainError,
    MissingBlockError,
)
from model_handler.constant import CONFIDENCE

MIN_SPLIT_LENGTH = 10
VARIANCE_RTOL = 1e-12

# Block names that hold one scalar per retained draw (besides rho and beta).
SCALAR_BLOCKS = ("lambda", "sigma_eps2")


@dataclass(frozen=True)
class PosteriorChain:
    """Retained draws with a leading chain axis: rho is (chains, retained, K)."""

    model: str
    set_labels: tuple
    rho: np.ndarray
    beta: np.ndarray
    blocks: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def n_chains(self):
        return self.rho.shape[0]

    @property
    def n_retained(self):
        return self.rho.shape[1]

    @property
    def K(self):
        return self.rho.shape[2]

    def has_block(self, name):
        return name in self.blocks

    def block(self, name):
        if name == "rho":
            return self.rho
        if name == "beta":
            return self.beta
        if name not in self.blocks:
            raise MissingBlockError(name, self.model)
        return self.blocks[name]

    def pooled(self, name="rho"):
        draws = self.block(name)
        return draws.reshape((-1,) + draws.shape[2:])


@dataclass(frozen=True)
class SummaryRow:
    label: str
    median: float
    lower: float
    upper: float
    prob_positive: float
    rhat: float
    rhat_upper: float

    def as_dict(self):
        return {
            "component": self.label,
            "rho": self.median,
            "lower_2.5": self.lower,
            "upper_97.5": self.upper,
            "P(rho>0)": self.prob_positive,
            "R_hat": self.rhat,
            "R_hat_upper_95": self.rhat_upper,
        }


def _chain_matrix(draws):
    """(m, n) chains for R-hat: split a single chain into halves."""
    draws = np.asarray(draws, dtype=np.float64)
    if draws.ndim == 1 or (draws.ndim == 2 and draws.shape[0] == 1):
        draws = draws.ravel()
        half = draws.size // 2
        if half < MIN_SPLIT_LENGTH:
            raise ConvergenceInputError(f"a single chain of {draws.size} draws cannot be split into two halves of >= {MIN_SPLIT_LENGTH}")
        # With an odd count the middle draw is dropped.
        return np.vstack([draws[:half], draws[draws.size - half :]])
    if draws.ndim != 2:
        raise ConvergenceInputError(f"expected chains x draws, got shape {draws.shape}")
    if draws.shape[1] < MIN_SPLIT_LENGTH:
        raise ConvergenceInputError(f"chains of {draws.shape[1]} draws are shorter than {MIN_SPLIT_LENGTH}")
    return draws


def gelman_rubin(draws, confidence=CONFIDENCE):
    """Potential scale reduction factor and its upper confidence bound.

    Follows the classic Gelman and Rubin (1992) construction with the
    degrees-of-freedom correction and an F-quantile bound, as in coda's
    ``gelman.diag``. Chains whose means agree to rounding report exactly 1.
    """
    chains = _chain_matrix(draws)
    m, n = chains.shape
    means = chains.mean(axis=1)
    s2 = chains.var(axis=1, ddof=1)
    w = s2.mean()
    b = n * means.var(ddof=1)
    mu = means.mean()

    # Variances below rounding noise of the draws count as zero.
    floor = VARIANCE_RTOL * max(1.0, mu * mu)
    if w <= floor:
        value = 1.0 if b <= n * floor else np.inf
        return value, value
    if b <= VARIANCE_RTOL * w:
        return 1.0, 1.0

    var_w = s2.var(ddof=1) / m
    var_b = 2.0 * b * b / (m - 1)
    cov_wb = (n / m) * (np.cov(s2, means**2)[0, 1] - 2.0 * mu * np.cov(s2, means)[0, 1])

    V = (n - 1) * w / n + (1 + 1 / m) * b / n
    var_V = ((n - 1) ** 2 * var_w + (1 + 1 / m) ** 2 * var_b + 2 * (n - 1) * (1 + 1 / m) * cov_wb) / n**2
    df_adj = 1.0 if var_V <= 0 else ((2 * V * V / var_V) + 3) / ((2 * V * V / var_V) + 1)

    r2_fixed = (n - 1) / n
    r2_random = (1 + 1 / m) * (1 / n) * (b / w)
    quantile = (1 + confidence) / 2
    if var_w > 0:
        f_quantile = stats.f.ppf(quantile, m - 1, 2 * w * w / var_w)
    else:
        f_quantile = stats.chi2.ppf(quantile, m - 1) / (m - 1)
    rhat = np.sqrt(df_adj * (r2_fixed + r2_random))
    upper = np.sqrt(df_adj * (r2_fixed + f_quantile * r2_random))
    return float(rhat), float(upper)


def summarize(chain, confidence=CONFIDENCE):
    if chain.n_chains * chain.n_retained == 0:
        raise EmptyChainError()
    alpha = (1 - confidence) / 2
    pooled = chain.pooled("rho")
    rows = []
    for k, label in enumerate(chain.set_labels):
        draws = pooled[:, k]
        lower, median, upper = np.quantile(draws, [alpha, 0.5, 1 - alpha], method="linear")
        per_chain = chain.rho[:, :, k]
        try:
            rhat, rhat_upper = gelman_rubin(per_chain if chain.n_chains > 1 else per_chain[0], confidence)
        except ConvergenceInputError:
            rhat, rhat_upper = np.nan, np.nan
        rows.append(
            SummaryRow(
                label=label,
                median=float(median),
                lower=float(lower),
                upper=float(upper),
                prob_positive=float(np.mean(draws > 0)),
                rhat=rhat,
                rhat_upper=rhat_upper,
            )
        )
    return rows


def chain_to_frame(chain):
    """Long trace table: one row per (chain, draw) with every scalar block."""
    chains, retained = chain.n_chains, chain.n_retained
    frame = {
        "chain": np.repeat(np.arange(chains), retained),
        "draw": np.tile(np.arange(retained), chains),
    }
    pooled_rho = chain.pooled("rho")
    pooled_beta = chain.pooled("beta")
    for k, label in enumerate(chain.set_labels):
        frame[f"rho_{label}"] = pooled_rho[:, k]
    for j in (1, 2):
        for k, label in enumerate(chain.set_labels):
            frame[f"beta_j{j}_{label}"] = pooled_beta[:, (j - 1) * chain.K + k]
    for name in SCALAR_BLOCKS:
        if chain.has_block(name):
            frame[name] = chain.pooled(name)
    if chain.has_block("lambda_ell"):
        lambda_ell = chain.pooled("lambda_ell")
        for ell in range(lambda_ell.shape[1]):
            frame[f"lambda_ell_{ell + 1}"] = lambda_ell[:, ell]
    return pd.DataFrame(frame)


def chain_from_frame(frame, model="unknown"):
    """Rebuilds rho and beta draws from a trace table written by ``chain_to_frame``."""
    labels = tuple(column[4:] for column in frame.columns if column.startswith("rho_"))
    chains = sorted(frame["chain"].unique())
    per_chain = [frame[frame["chain"] == c].sort_values("draw") for c in chains]
    lengths = {len(part) for part in per_chain}
    if len(lengths) != 1:
        raise ConvergenceInputError(f"chains have unequal lengths {sorted(lengths)}")
    rho = np.stack([part[[f"rho_{label}" for label in labels]].to_numpy() for part in per_chain])
    beta_columns = [f"beta_j{j}_{label}" for j in (1, 2) for label in labels]
    if all(column in frame.columns for column in beta_columns):
        beta = np.stack([part[beta_columns].to_numpy() for part in per_chain])
    else:
        beta = np.empty(rho.shape[:2] + (0,))
    return PosteriorChain(model=model, set_labels=labels, rho=rho, beta=beta)
