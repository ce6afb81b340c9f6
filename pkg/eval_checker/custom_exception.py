class MMPError(Exception):
    def __init__(self, message):
        self.message = message
        super().__init__(self.message)


class DataFormatError(MMPError):
    def __init__(self, detail, row=None, column=None):
        self.row = row
        self.column = column
        location = ""
        if row is not None:
            location += f" (row {row}"
            location += f", column '{column}')" if column is not None else ")"
        super().__init__(f"❗️Malformed MMP data{location}: {detail}")


class DimensionError(MMPError):
    def __init__(self, detail):
        super().__init__(f"❗️Dimension mismatch: {detail}")


class LabelCollisionError(MMPError):
    def __init__(self, labels):
        self.labels = labels
        super().__init__(f"❗️Set labels must be unique, got duplicates: {sorted(labels)}")


class PreconditionError(MMPError):
    def __init__(self, detail):
        super().__init__(f"❗️Precondition failed: {detail}")


class NotPositiveDefiniteError(MMPError):
    def __init__(self, leading_minor):
        # 1-based order of the first leading minor that is not positive.
        self.leading_minor = leading_minor
        super().__init__(
            f"❗️Covariance is not symmetric positive definite: leading minor of order {leading_minor} is not positive."
        )


class SignPatternError(MMPError):
    def __init__(self, sweep, violations):
        self.sweep = sweep
        self.violations = violations
        super().__init__(
            f"❗️Latent sign pattern broken at sweep {sweep}: {violations} cells disagree with the observed responses."
        )


class EmptyChainError(MMPError):
    def __init__(self):
        super().__init__("❗️Cannot summarize an empty chain.")


class MissingBlockError(MMPError):
    def __init__(self, block, model):
        self.block = block
        self.model = model
        super().__init__(f"❗️Chain from model '{model}' has no '{block}' block.")


class ConvergenceInputError(MMPError):
    def __init__(self, detail):
        super().__init__(f"❗️Cannot compute the Gelman-Rubin diagnostic: {detail}")


class RunConfigError(MMPError):
    def __init__(self, path, line, detail):
        self.path = path
        self.line = line
        super().__init__(f"❗️Bad run-config file {path}, line {line}: {detail}")


class NumericalJitterWarning(UserWarning):
    pass


class SplineOrderWarning(UserWarning):
    pass


class YieldShortfallWarning(UserWarning):
    def __init__(self, achieved, requested, batches):
        self.achieved = achieved
        self.requested = requested
        self.batches = batches
        super().__init__(
            f"Only {achieved} / {requested} sparse datasets after {batches} batches; metrics use {achieved} replicates."
        )
