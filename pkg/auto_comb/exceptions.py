class AutoCombError(Exception):
    '''
    Base error for the comb-sign pipeline. exit_code is what the CLI returns.
    '''
    exit_code = 1


class ConfigError(AutoCombError, ValueError):
    exit_code = 2


class NiftiIOError(AutoCombError, OSError):
    exit_code = 3


class NiftiFormatError(NiftiIOError):
    pass


class UnsupportedDatatypeError(NiftiFormatError):
    pass


class AlignmentError(AutoCombError, ValueError):
    exit_code = 4


class InsufficientDataError(AutoCombError):
    exit_code = 5


class EmptyPopulationError(InsufficientDataError):
    pass


class ParameterError(AutoCombError, ValueError):
    exit_code = 6


class PreconditionError(ParameterError):
    pass


class StageError(AutoCombError):
    def __init__(self, stage, cause, last_artifact=None):
        self.stage = stage
        self.cause = cause
        self.last_artifact = last_artifact
        self.exit_code = getattr(cause, 'exit_code', AutoCombError.exit_code)
        msg = "Stage '{}' failed: {}".format(stage, cause)
        if last_artifact is not None:
            msg += " (last artifact written: {})".format(last_artifact)
        super().__init__(msg)
