"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SpinRouterError(Exception):
    """Base class for every error raised by this package."""


class SpecificationError(SpinRouterError, ValueError):
    """A router specification violates one of its structural invariants."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class ConfigurationError(SpinRouterError, ValueError):
    """Field tuning or scheme parameters are inconsistent with a protocol."""


class UnitsError(SpinRouterError, ValueError):
    """Quantities expressed in different energy units were mixed."""


class DomainError(SpinRouterError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NumericalError(SpinRouterError, ArithmeticError):
    """An iterative or step-based numerical method failed."""


class LabelError(SpinRouterError, KeyError):
    """A site label does not exist in the Hamiltonian basis."""

    def __str__(self) -> str:  # KeyError repr-quotes its message otherwise
        return str(self.args[0]) if self.args else ""
