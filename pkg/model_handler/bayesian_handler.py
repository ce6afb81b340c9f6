import os

import numpy as np

from model_handler.handler import BaseHandler, EstimateReport
from model_handler.model_style import ModelStyle
from model_handler.posterior import chain_to_frame, summarize
from model_handler.utils import write_csv


class BayesianHandler(BaseHandler):
    def __init__(self, model_name, **kwargs) -> None:
        super().__init__(model_name, **kwargs)
        self.model_style = ModelStyle.BAYESIAN

    def sample(self, table, rng):
        raise NotImplementedError

    def settings(self):
        settings = super().settings()
        settings.update(self.sampler_config.as_dict())
        return settings

    def inference(self, table, rng):
        return self.report(self.sample(table, rng))

    def report(self, chain):
        summary = summarize(chain)
        lower = np.array([row.lower for row in summary])
        upper = np.array([row.upper for row in summary])
        rows = []
        for row in summary:
            entry = row.as_dict()
            entry["method"] = self.model_name
            rows.append(entry)
        return EstimateReport(
            model=self.model_name,
            model_style=self.model_style,
            set_labels=chain.set_labels,
            rho_hat=np.array([row.median for row in summary]),
            interval_low=lower,
            interval_high=upper,
            # A Bayesian method "detects" rho_k when its credible interval excludes 0.
            significant=(lower > 0) | (upper < 0),
            rows=rows,
            chain=chain,
        )

    def write(self, report, out_dir, file_format="csv", metadata=None):
        written = super().write(report, out_dir, file_format, metadata)
        config = self.sampler_config
        written.append(
            write_csv(
                chain_to_frame(report.chain),
                os.path.join(out_dir, f"{self.model_name}_chain.csv"),
                metadata,
                extra={
                    "model": self.model_name,
                    "iterations": config.total_iterations,
                    "burn_in": config.burn_in,
                    "thinning": config.thinning,
                    "chains": config.chains,
                },
            )
        )
        return written
