"""Exception and warning types shared across the package."""


class UQAuditError(ValueError):
    """Base class for input and numerical errors raised by uqaudit."""


class MalformedFile(UQAuditError):
    pass


class InvalidDistribution(UQAuditError):
    def __init__(self, message, example_id=None):
        super().__init__(message)
        self.example_id = example_id


class EmptyInput(UQAuditError):
    pass


class DegenerateComponent(UQAuditError):
    """A Gaussian component with zero variance where a density is needed."""


class InfiniteLoss(UQAuditError):
    """A true-class probability of exactly zero makes the NLL infinite."""


class UnnormalizedStatistic(UQAuditError):
    pass


class NoTailMass(UQAuditError):
    pass


class ArityMismatch(UQAuditError):
    pass


class MissingGroup(UQAuditError):
    pass


class NoiseTooLarge(UQAuditError):
    pass


class DivergedTraining(UQAuditError):
    pass


class DimensionMismatch(UQAuditError):
    pass


class UQAuditWarning(UserWarning):
    pass


class RenormalizedWarning(UQAuditWarning):
    pass


class UndefinedRatio(UQAuditWarning):
    """A ratio whose denominator is zero; the value is reported as ``None``."""


class SingleGroupOnly(UQAuditWarning):
    pass


class UndefinedConditional(UQAuditWarning):
    pass


class UncorrectedMetric(UQAuditWarning):
    pass
