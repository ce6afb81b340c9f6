from model_handler.bayesian_handler import BayesianHandler
from model_handler.probit_gibbs import gibbs_penalized


class PenalizedHandler(BayesianHandler):
    def settings(self):
        settings = super().settings()
        settings["A"] = self.A
        return settings

    def sample(self, table, rng):
        return gibbs_penalized(table, self.sampler_config, rng, A=self.A)
