"""Exception types raised across the package.

Everything derives from ScsfError so callers can catch the whole family.
Batch drivers (fleet, grid search) catch ScsfError per work item and record
it instead of aborting the run.
"""


class ScsfError(Exception):
    pass


# --- ingest ---------------------------------------------------------------

class UnreadableSourceError(ScsfError):
    pass


class NoParseableRowsError(ScsfError):
    pass


class AmbiguousSchemaError(ScsfError):
    pass


class IntervalInvalidError(ScsfError):
    pass


class SpanTooShortError(ScsfError):
    pass


# --- model ----------------------------------------------------------------

class TauOutOfRangeError(ScsfError):
    pass


class AxisTooShortError(ScsfError):
    pass


class DimensionMismatchError(ScsfError):
    pass


class NonpositiveDenominatorError(ScsfError):
    pass


# --- solver ---------------------------------------------------------------

class RankTooLargeError(ScsfError):
    pass


class SubproblemInfeasibleError(ScsfError):
    pass


class SolverStallError(ScsfError):
    pass


class InfeasibleError(ScsfError):
    pass


class MaxIterationsError(ScsfError):
    pass


# --- baseline / tuning / fleet --------------------------------------------

class TooFewClearDaysError(ScsfError):
    pass


class StepInvalidError(ScsfError):
    pass


class TooFewValuesError(ScsfError):
    pass


class NoSitesError(ScsfError):
    pass


class NothingAcceptedError(ScsfError):
    pass


class EmptyJoinError(ScsfError):
    pass


class InvalidScenarioError(ScsfError):
    pass


class ConfigError(ScsfError):
    pass
