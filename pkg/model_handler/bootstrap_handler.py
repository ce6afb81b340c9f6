from model_handler.comparators import bootstrap_estimate
from model_handler.frequentist_handler import FrequentistHandler


class BootstrapHandler(FrequentistHandler):
    def settings(self):
        settings = super().settings()
        settings["resamples"] = self.resamples
        return settings

    def estimate(self, table, rng):
        return bootstrap_estimate(table, rng, resamples=self.resamples)
