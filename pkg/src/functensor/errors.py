"""Exception types shared across the library.

The CLI maps these onto exit codes: usage/configuration problems exit 1,
data problems exit 2, numerical failures exit 3.
"""


class FunctensorError(Exception):
    """Base class for all library errors."""


class ShapeError(FunctensorError, ValueError):
    """Array dimensions do not match what an operation requires."""


class DomainError(FunctensorError, ValueError):
    """An input value is outside an operation's domain (e.g. non-finite)."""


class ConfigError(FunctensorError, ValueError):
    """Invalid configuration: bad hyperparameter, impossible split, ..."""


class DataFormatError(FunctensorError, ValueError):
    """A data file does not parse as the expected numeric table."""


class UnknownCategoryError(FunctensorError, KeyError):
    """A prediction-time category label was never seen during fitting."""

    def __init__(self, variable: int, label: object):
        self.variable = variable
        self.label = label
        super().__init__(f"unknown category {label!r} for variable {variable}")

    def __str__(self) -> str:  # KeyError would repr() the message otherwise
        return self.args[0]


class NumericalError(FunctensorError, RuntimeError):
    """A solver failed for numerical reasons (singularity, divergence)."""
