from model_handler.comparators import erm_estimate
from model_handler.frequentist_handler import FrequentistHandler
from model_handler.mmp_table import paired_counts


class ErmHandler(FrequentistHandler):
    def estimate(self, table, rng):
        return erm_estimate(paired_counts(table))
