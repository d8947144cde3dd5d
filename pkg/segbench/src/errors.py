"""Exception hierarchy. Every error carries the exit code the CLI reports for it."""


class BenchError(Exception):
    exit_code = 2


class ParameterError(BenchError, ValueError):
    exit_code = 1


class ConfigError(BenchError, ValueError):
    exit_code = 1


class DimensionError(BenchError, ValueError):
    pass


class DataError(BenchError, ValueError):
    pass


class FormatError(DataError):
    def __init__(self, message, offset=None, path=None):
        self.offset = offset
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"byte offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class MissingFileError(DataError, FileNotFoundError):
    pass


class DegenerateStepError(BenchError, ZeroDivisionError):
    pass


class NumericError(BenchError, ArithmeticError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class StaleCacheError(BenchError, RuntimeError):
    pass


class UndefinedMetricError(BenchError, ValueError):
    pass


class ExperimentError(BenchError, RuntimeError):
    exit_code = 3


class OutputError(BenchError, OSError):
    pass
