"""Exception types raised by the statebag pipeline."""


class StatebagError(Exception):
    """Base class for all statebag errors."""


# -- track ingestion -------------------------------------------------------

class MissingColumn(StatebagError):
    def __init__(self, name: str):
        super().__init__(f"required column missing: {name!r}")
        self.name = name


class NonMonotonicFrameIndex(StatebagError):
    def __init__(self, row: int):
        super().__init__(f"frame index not strictly increasing at data row {row}")
        self.row = row


class ValueOutOfRange(StatebagError):
    def __init__(self, column: str, row: int):
        super().__init__(f"value out of range in column {column!r} at data row {row}")
        self.column = column
        self.row = row


class EmptyTrack(StatebagError):
    pass


class TooManyInvalid(StatebagError):
    pass


class ManifestError(StatebagError):
    pass


# -- segmentation / features -----------------------------------------------

class TrackTooShort(StatebagError):
    pass


class SeriesTooShort(StatebagError):
    pass


class SegmentTooShort(StatebagError):
    pass


# -- codebook ----------------------------------------------------------------

class NotEnoughData(StatebagError):
    pass


class TooFewPoints(StatebagError):
    pass


class EmptySegmentList(StatebagError):
    pass


# -- classification ----------------------------------------------------------

class SingleClassTraining(StatebagError):
    pass


class IndexOutOfRange(StatebagError):
    pass


class InvalidProbability(StatebagError):
    pass


class DimensionMismatch(StatebagError):
    pass


# -- metrics -----------------------------------------------------------------

class LengthMismatch(StatebagError):
    pass


class LabelOutOfRange(StatebagError):
    pass


# -- synthetic data ----------------------------------------------------------

class InfeasibleRecipe(StatebagError):
    pass


# -- artifact chains ---------------------------------------------------------

class ConfigMismatch(StatebagError):
    pass
