"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid arguments: wrong shapes, out-of-range parameters, bad indices."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values or failed a self-check."""


class ConvergenceError(NumericError):
    """An iteration hit its budget before reaching tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class TrainingAbort(NumericError):
    """Training produced a non-finite loss; carries the failing step context."""

    def __init__(self, message, step=None, batch_indices=None, param_norm=None):
        super().__init__(message)
        self.step = step
        self.batch_indices = batch_indices
        self.param_norm = param_norm


class ConfigError(ValueError):
    """Configuration text could not be parsed or failed validation."""

    def __init__(self, message, line=None, key=None):
        self.detail = message
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key


class ParseError(ValueError):
    """A columnar data file is malformed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
