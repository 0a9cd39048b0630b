class RulewiseError(Exception):
    """Base class for every error raised by the estimation pipeline."""


class ArgumentError(RulewiseError, ValueError):
    """A precondition on an argument was violated."""


class SchemaError(RulewiseError):
    """A declared column is missing from an input file."""

    def __init__(self, column, source=None):
        self.column = column
        where = f' in {source}' if source else ''
        super().__init__(f"Missing column '{column}'{where}")


class CohortValueError(RulewiseError, ValueError):
    """A cell value could not be interpreted."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f'row {row}')
        if column is not None:
            location.append(f"column '{column}'")
        prefix = f"{', '.join(location)}: " if location else ''
        super().__init__(prefix + message)


class CohortInputError(RulewiseError):
    """The input file is empty or unreadable."""


class DegenerateStratumError(RulewiseError):
    """A stratum/arm cell has no subjects, so its risk is undefined."""

    def __init__(self, stratum, arm=None):
        self.stratum = stratum
        self.arm = arm
        arm_text = f' (arm {arm:+d})' if arm is not None else ''
        super().__init__(f'Degenerate stratum {stratum}{arm_text}: cell total is zero')


class FitError(RulewiseError):
    """A model could not be fitted on the given data."""


class DegenerateWeightsError(FitError):
    """Every classification weight is zero; fall back to the zero-order rule."""


class UndefinedSplitError(RulewiseError):
    """A survival split has no events on either side."""


class EvaluationError(RulewiseError):
    """A fitted object could not be evaluated."""


class UndefinedValueError(EvaluationError):
    """No subject follows the rule, so its value is undefined."""


class FoldError(RulewiseError):
    """A cross-validation fold failed at a given stage."""

    def __init__(self, fold, stage, learner=None, cause=None):
        self.fold = fold
        self.stage = stage
        self.learner = learner
        self.cause = cause
        learner_text = f", learner '{learner}'" if learner else ''
        super().__init__(f'Fold {fold} failed at stage {stage}{learner_text}: {cause}')

    def __reduce__(self):
        return type(self), (self.fold, self.stage, self.learner, self.cause)
