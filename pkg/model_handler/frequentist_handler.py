from model_handler.handler import BaseHandler, EstimateReport
from model_handler.model_style import ModelStyle


class FrequentistHandler(BaseHandler):
    def __init__(self, model_name, **kwargs) -> None:
        super().__init__(model_name, **kwargs)
        self.model_style = ModelStyle.FREQUENTIST

    def estimate(self, table, rng):
        raise NotImplementedError

    def inference(self, table, rng):
        result = self.estimate(table, rng)
        rows = result.rows()
        for row in rows:
            row["method"] = self.model_name
        return EstimateReport(
            model=self.model_name,
            model_style=self.model_style,
            set_labels=result.set_labels,
            rho_hat=result.rho_hat,
            interval_low=result.interval_low,
            interval_high=result.interval_high,
            significant=result.significant(self.alpha),
            rows=rows,
            result=result,
        )
