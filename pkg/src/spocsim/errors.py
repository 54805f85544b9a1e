"""Exception hierarchy shared by every stage of the simulator."""


class SpocError(Exception):
    """Base class for all simulator errors."""


class TraceError(SpocError, ValueError):
    pass


class TraceFileMissing(TraceError, FileNotFoundError):
    pass


class MissingSlotDuration(TraceError):
    pass


class MixedSlotDurations(TraceError):
    pass


class NegativeSample(TraceError):
    pass


class RaggedTraces(TraceError):
    pass


class EmptyTraceSet(TraceError):
    pass


class InvalidSynthSpec(TraceError):
    pass


class ConfigError(SpocError, ValueError):
    pass


class StageError(SpocError):
    """Wraps an error raised inside one pipeline stage, naming the stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
