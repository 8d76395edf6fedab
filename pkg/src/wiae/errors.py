"""Exception types shared across the package."""


class WiaeError(Exception):
    """Base class for all package errors."""


class DimensionError(WiaeError, ValueError):
    pass


class ContractError(WiaeError, ValueError):
    pass


class GraphLookupError(WiaeError, LookupError):
    pass


class InsufficientHistoryError(WiaeError, ValueError):
    pass


class TrainingError(WiaeError, RuntimeError):
    """Non-finite loss or gradient during optimisation."""

    def __init__(self, message: str, epoch: int | None = None, parameter: str | None = None):
        parts = [message]
        if epoch is not None:
            parts.append(f"epoch={epoch}")
        if parameter is not None:
            parts.append(f"parameter={parameter}")
        super().__init__(" ".join(parts))
        self.epoch = epoch
        self.parameter = parameter


class ConfigurationError(WiaeError, ValueError):
    pass


class UndefinedMetricError(WiaeError, ValueError):
    def __init__(self, metric: str, reason: str):
        super().__init__(f"{metric} is undefined: {reason}")
        self.metric = metric


class DegenerateSequenceError(WiaeError, ValueError):
    pass


class SmallSampleError(WiaeError, ValueError):
    pass


class DegenerateDataError(WiaeError, ValueError):
    pass


class ParseError(WiaeError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class FormatError(WiaeError, ValueError):
    pass


class DataError(WiaeError, ValueError):
    pass


class ConfigError(WiaeError, ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class SchemaError(WiaeError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class IncompatibleVersionError(SchemaError):
    pass
