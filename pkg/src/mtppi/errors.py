"""Exception taxonomy for the whole package.

Every failure mode that callers are expected to branch on gets its own
class; all of them derive from MtppiError so a harness can catch one
thing. Data-shape problems, degenerate populations, and configuration
mistakes are deliberately distinct: the CLI maps them to different exit
codes.
"""


class MtppiError(Exception):
    """Base class for all errors raised by mtppi."""


# data model

class LengthMismatchError(MtppiError):
    """Paired vectors have different lengths."""


class MissingLabelError(MtppiError):
    """An index marked labeled carries no ground-truth value."""


class NonFiniteValueError(MtppiError):
    """NaN or infinity where a finite number is required."""


class TooSmallError(MtppiError):
    """Fewer data points than the operation can work with."""


# sampling

class SizeOutOfRangeError(MtppiError):
    """Requested sample size is not within [0, population size]."""


class BadKError(MtppiError):
    """Fold count outside [2, number of items]."""


# recalibration

class NonPositiveWeightError(MtppiError):
    """Weights for a weighted fit must be strictly positive."""


class EmptyFitError(MtppiError):
    """Prediction requested from a fit with no knots."""


class NoAuxiliaryLabelsError(MtppiError):
    """No labeled pairs exist outside the target task."""


# variance theory

class BadSampleSizeError(MtppiError):
    """Labeled-sample size n outside the population constraints."""


class DegenerateSurrogateError(MtppiError):
    """Surrogate scores are constant; their variance is zero."""


class DegenerateOutcomeError(MtppiError):
    """Outcomes are constant; a correlation with them is undefined."""


class TooLargeToEnumerateError(MtppiError):
    """Subset enumeration would exceed the configured guard."""


# estimators

class EmptyLabeledSetError(MtppiError):
    """An estimator was handed zero labeled points."""


class TooFewLabelsError(MtppiError):
    """Labeled set smaller than the method's minimum."""


# inference

class BadProbabilityError(MtppiError):
    """Probability argument outside (0, 1)."""


class BadDofError(MtppiError):
    """Degrees of freedom must be a positive integer."""


class TooFewResidualsError(MtppiError):
    """Interval construction needs at least two residuals."""


class BadAlphaError(MtppiError):
    """Significance level outside (0, 1)."""


class ResidualMismatchError(MtppiError):
    """Stored residuals disagree with the method's definition."""


# experiments / reporting

class BadSpecError(MtppiError):
    """Synthetic-study specification violates its constraints."""


class ParseError(MtppiError):
    """Malformed cell in an input file; message carries row/column."""


class SchemaViolationError(MtppiError):
    """Input file does not match the declared schema."""


class ConfigInvalidError(MtppiError):
    """Run configuration is internally inconsistent."""


class IoError(MtppiError):
    """Report emission failed or had nothing to write."""
