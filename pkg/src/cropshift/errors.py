"""Exception types shared across the package.

Every error raised on a contract violation derives from CropshiftError so
callers (in particular the CLI) can map failures onto exit codes without
enumerating modules.
"""


class CropshiftError(Exception):
    """Base class for all package-specific errors."""


# --- feature construction ---------------------------------------------------

class FeatureBuildError(CropshiftError):
    """Per-pixel feature construction failure, tagged with pixel and band."""

    def __init__(self, message, pixel_id=None, band=None):
        super().__init__(message)
        self.pixel_id = pixel_id
        self.band = band


class InsufficientObservations(FeatureBuildError):
    """Fewer than the required number of distinct observation times."""


class RankDeficient(FeatureBuildError):
    """Design matrix numerically singular for the requested fit."""


# --- classifiers -------------------------------------------------------------

class EmptyClass(CropshiftError):
    """A class in the class list has no training samples."""


class SingularCovariance(CropshiftError):
    """Pooled covariance could not be factorized, even after ridge."""


class DimensionMismatch(CropshiftError):
    """Feature vector length does not match the fitted model."""


class InvalidParams(CropshiftError):
    """Classifier hyperparameters outside their valid range."""


# --- shift adjustment --------------------------------------------------------

class ZeroTrainPrior(CropshiftError):
    """A class present in the test priors has zero training prior."""


class ClassMismatch(CropshiftError):
    """Class lists of two inputs do not agree."""


class AllZeroScores(CropshiftError):
    """Reweighted posterior vector vanished; argmax undefined."""


class ZeroMeanFieldArea(CropshiftError):
    """Mean field area is zero or missing for a class with positive area."""


class AllZeroAreas(CropshiftError):
    """Every class has zero aggregate area; priors undefined."""


# --- baselines ---------------------------------------------------------------

class SmoteInfeasible(CropshiftError):
    """Too few samples in a class for the requested neighbor count."""


class InsufficientData(CropshiftError):
    """Not enough samples to fit the requested statistic."""


# --- evaluation --------------------------------------------------------------

class LengthMismatch(CropshiftError):
    """Paired label sequences have different lengths."""


class UnknownLabel(CropshiftError):
    """A label does not appear in the declared class list."""


class EmptyMatrix(CropshiftError):
    """Metrics requested on a confusion matrix with zero total count."""


class TrainRegionMissingClass(CropshiftError):
    """Designated training region lacks at least one class."""


class MissingPriors(CropshiftError):
    """No priors available for a region that the method requires."""


class TooFewGroups(CropshiftError):
    """A region has fewer distinct groups than cross-validation folds."""


# --- synthetic data / configuration -------------------------------------------

class InvalidSpec(CropshiftError):
    """Synthetic world specification violates its invariants."""


class ParseError(CropshiftError):
    """Malformed input file; carries the offending line when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
