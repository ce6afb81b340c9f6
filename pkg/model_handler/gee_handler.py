import pandas as pd

from model_handler.comparators import gee_estimate
from model_handler.frequentist_handler import FrequentistHandler


class GeeHandler(FrequentistHandler):
    def estimate(self, table, rng):
        return gee_estimate(table)

    def inference(self, table, rng):
        report = super().inference(table, rng)
        details = report.result.details
        report.extra_tables["joint_test"] = pd.DataFrame(
            [
                {
                    "statistic": details["joint_statistic"],
                    "df": details["joint_df"],
                    "p_value": details["joint_p_value"],
                }
            ]
        )
        return report
