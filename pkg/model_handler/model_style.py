from enum import Enum


class ModelStyle(Enum):
    BAYESIAN = "bayesian"
    FREQUENTIST = "frequentist"
