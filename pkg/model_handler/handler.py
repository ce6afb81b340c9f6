import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from model_handler.constant import (
    DEFAULT_A,
    DEFAULT_BOOTSTRAP_RESAMPLES,
    DEFAULT_L_SCORES,
    DEFAULT_XI,
    SIGNIFICANCE_LEVEL,
)
from model_handler.model_style import ModelStyle
from model_handler.probit_gibbs import SamplerConfig
from model_handler.utils import write_csv, write_json


@dataclass
class EstimateReport:
    """What every method hands back: per-set point estimates, 95% intervals,
    the power decision, and the table rows it prints and writes."""

    model: str
    model_style: ModelStyle
    set_labels: tuple
    rho_hat: np.ndarray
    interval_low: np.ndarray
    interval_high: np.ndarray
    significant: np.ndarray
    rows: list
    chain: object = None
    result: object = None
    extra_tables: dict = field(default_factory=dict)

    def to_frame(self):
        return pd.DataFrame(self.rows)

    def to_dict(self):
        return {"method": self.model, "style": self.model_style.value, "rows": self.rows}


class BaseHandler:
    model_name: str
    model_style: ModelStyle

    def __init__(
        self,
        model_name,
        sampler_config=None,
        A=DEFAULT_A,
        xi=DEFAULT_XI,
        scores=DEFAULT_L_SCORES,
        resamples=DEFAULT_BOOTSTRAP_RESAMPLES,
        keep_fpca_blocks=False,
        alpha=SIGNIFICANCE_LEVEL,
    ) -> None:
        self.model_name = model_name
        self.sampler_config = sampler_config or SamplerConfig()
        self.A = A
        self.xi = xi
        self.scores = scores
        self.resamples = resamples
        self.keep_fpca_blocks = keep_fpca_blocks
        self.alpha = alpha

    def inference(self, table, rng):
        # Runs the method on one MatchedBinaryTable and returns an EstimateReport.
        raise NotImplementedError

    def settings(self):
        """The knobs this method actually reads, echoed into the config hash."""
        return {"model": self.model_name}

    def write(self, report, out_dir, file_format="csv", metadata=None):
        os.makedirs(out_dir, exist_ok=True)
        written = []
        if file_format == "json":
            written.append(write_json(report.to_dict(), os.path.join(out_dir, f"{self.model_name}_summary.json"), metadata))
        else:
            written.append(write_csv(report.to_frame(), os.path.join(out_dir, f"{self.model_name}_summary.csv"), metadata))
        for name, frame in report.extra_tables.items():
            written.append(write_csv(frame, os.path.join(out_dir, f"{self.model_name}_{name}.csv"), metadata))
        return written
