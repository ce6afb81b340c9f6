import numpy as np
import pandas as pd

from model_handler.bayesian_handler import BayesianHandler
from model_handler.fpca_gibbs import gibbs_fpca, latent_covariance_summary


def _block_frame(draws, row_name, value_name="value"):
    """Long table of a (chains, retained, rows, L) block."""
    chains, retained, rows, scores = draws.shape
    chain, draw, row, score = np.meshgrid(
        np.arange(chains), np.arange(retained), np.arange(rows), np.arange(1, scores + 1), indexing="ij"
    )
    return pd.DataFrame(
        {
            "chain": chain.ravel(),
            "draw": draw.ravel(),
            row_name: row.ravel(),
            "score": score.ravel(),
            value_name: draws.ravel(),
        }
    )


class MvpHandler(BayesianHandler):
    def settings(self):
        settings = super().settings()
        settings.update({"A": self.A, "xi": self.xi, "scores": self.scores, "keep_fpca_blocks": self.keep_fpca_blocks})
        return settings

    def sample(self, table, rng):
        return gibbs_fpca(
            table,
            self.sampler_config,
            rng,
            A=self.A,
            L_scores=self.scores,
            xi=self.xi,
            keep_blocks=self.keep_fpca_blocks,
        )

    def report(self, chain):
        report = super().report(chain)
        labels = [f"j{j}_{label}" for j in (1, 2) for label in chain.set_labels]
        covariance = pd.DataFrame(latent_covariance_summary(chain), columns=labels)
        covariance.insert(0, "row", labels)
        report.extra_tables["latent_covariance"] = covariance
        if self.keep_fpca_blocks:
            report.extra_tables["psi"] = _block_frame(chain.block("psi"), "basis")
            report.extra_tables["scores"] = _block_frame(chain.block("scores"), "subject")
        return report
