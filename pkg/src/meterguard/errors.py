"""Exception types shared across the package.

Everything derives from ``MeterGuardError``; validation problems (bad input,
bad config) additionally derive from ``ValidationError`` so the CLI can map
them to exit code 2.
"""


class MeterGuardError(Exception):
    pass


class ValidationError(MeterGuardError, ValueError):
    pass


# data pipeline
class MalformedRow(ValidationError):
    def __init__(self, line: int, reason: str = ""):
        self.line = line
        super().__init__(f"malformed row at line {line}" + (f": {reason}" if reason else ""))


class DuplicateTimestamp(ValidationError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"duplicate timestamp for {key}")


class NonMonotonicClock(ValidationError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"timestamps go backwards for {key}")


class RateOutOfRange(ValidationError):
    pass


class EmptySeries(ValidationError):
    pass


class EmptyChannel(ValidationError):
    pass


class SeriesTooShort(ValidationError):
    pass


class InsufficientNormalData(ValidationError):
    pass


# neural core
class ShapeMismatch(ValidationError):
    pass


class AsymmetricAdjacency(ValidationError):
    pass


class EmptySequence(ValidationError):
    pass


class EmptyTrainSet(ValidationError):
    pass


class DivergedLoss(MeterGuardError):
    pass


# detector
class EmptyErrors(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


# tariff / power
class MisalignedSeries(ValidationError):
    pass


class UnavailableUnit(ValidationError):
    pass


class InfeasibleWindow(ValidationError):
    pass


# scenarios
class MissingModel(MeterGuardError):
    pass


class ConfigMismatch(ValidationError):
    pass


class MixedDatasets(ValidationError):
    pass


class IoFailure(MeterGuardError):
    pass
