from model_handler.bayesian_handler import BayesianHandler
from model_handler.probit_gibbs import gibbs_naive


class NaiveHandler(BayesianHandler):
    """Flat prior on beta. Kept to show how the chain drifts on a sparse column."""

    def sample(self, table, rng):
        return gibbs_naive(table, self.sampler_config, rng)
