class IsaError(Exception):
    """base for every error raised on purpose by the analysis pipeline"""


class UsageError(IsaError):
    """bad command line / config; cli exits with 1"""


class DataError(IsaError):
    """
    input data violates a contract; cli exits with 2

    source and row point at the offending file / data row when known
    """
    def __init__(self, message: str, source: str | None = None, row: int | None = None):
        self.source = source
        self.row = row
        location = ''
        if source is not None:
            location = f' [{source}' + (f', row {row}' if row is not None else '') + ']'
        elif row is not None:
            location = f' [row {row}]'
        super().__init__(f'{message}{location}')


# region metadata
class MissingInput(DataError): pass
class MissingOutcome(DataError): pass
class DuplicateIds(DataError): pass
class NonNumericCell(DataError): pass
class NoDataRows(DataError): pass
class NoFeatureColumns(DataError): pass
class NoIdColumn(DataError): pass
# endregion

# region extraction
class MalformedScenario(DataError): pass
class MissingEgoPosition(DataError): pass
class UnsortableTimestep(DataError): pass
class EmptyTimeline(DataError): pass
class UnknownCategory(DataError): pass
class TooFewPoints(DataError): pass
class MalformedPoint(DataError): pass
# endregion

# region preprocess / selection
class AllMissing(DataError): pass
class NothingLeft(DataError): pass
class AllIdentical(DataError): pass
class TooFewFeatures(DataError): pass
class TooFewPerClass(DataError): pass
# endregion

# region projection / geometry
class OptimizerDiverged(DataError): pass
class DimensionMismatch(DataError): pass
class TooManyFeatures(DataError): pass
class DegenerateHull(DataError): pass
class NotSimple(DataError): pass
class DegenerateBoundary(DataError): pass
# endregion

# region prediction
class ClassTooSmall(DataError): pass
class OneClass(DataError): pass
class NonFiniteInput(DataError): pass
class PoolTooSmall(DataError): pass
class UnknownFeature(DataError): pass
# endregion
