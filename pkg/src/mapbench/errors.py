"""Exception hierarchy shared by all mapbench modules."""


class MapbenchError(Exception):
    """Base class; `code` is the machine-readable identifier used by the API."""

    code = "internal_error"


class LineError(MapbenchError):
    """Parse error tied to a 1-based line number."""

    def __init__(self, line_no: int, message: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message or self.__class__.__name__}")


class MalformedLine(LineError):
    code = "malformed_line"


class NonMonotonicTimestamp(LineError):
    code = "non_monotonic_timestamp"


class ZeroNormQuaternion(LineError):
    code = "zero_norm_quaternion"


class NoMatches(MapbenchError):
    code = "no_matches"


class DegenerateInput(MapbenchError):
    code = "degenerate_input"


class EmptySeries(MapbenchError):
    code = "empty_series"


class TrajectoryTooShort(MapbenchError):
    code = "trajectory_too_short"


class ValidationFailure(MapbenchError):
    code = "validation_failure"


class DuplicateName(MapbenchError):
    code = "duplicate_name"


class ImmutableViolation(MapbenchError):
    code = "immutable_violation"


class GroundtruthUnparseable(MapbenchError):
    code = "groundtruth_unparseable"


class NotFound(MapbenchError):
    code = "not_found"


class ConflictingId(MapbenchError):
    code = "conflicting_id"


class IllegalTransition(MapbenchError):
    code = "illegal_transition"


class BackendUnavailable(MapbenchError):
    code = "backend_unavailable"


class WorkspaceSetupFailed(MapbenchError):
    code = "workspace_setup_failed"


class OutputMissing(MapbenchError):
    code = "output_missing"


class MalformedTrajectory(MapbenchError):
    code = "malformed_trajectory"


class AlreadyTerminal(MapbenchError):
    code = "already_terminal"


class RunNotRunning(MapbenchError):
    code = "run_not_running"


class EmptyProfile(MapbenchError):
    code = "empty_profile"


class NoMatchingRuns(MapbenchError):
    code = "no_matching_runs"


class UnknownParameter(MapbenchError):
    code = "unknown_parameter"


class StoreLocked(MapbenchError):
    code = "store_locked"
