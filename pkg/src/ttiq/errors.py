"""Exception hierarchy shared by every ttiq module.

Each class carries an ``exit_code`` that the CLI maps onto its process
exit status (2 input error, 3 limit exhausted, 4 transport/analytic failure).
"""

from __future__ import annotations


class TTIQError(Exception):
    exit_code = 2


class ParseError(TTIQError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line else ""
        super().__init__(f"{where}{message}")


class TypeFormError(TTIQError, ValueError):
    """A type or term violates a structural invariant (duplicate labels, empty enum...)."""


class SchemaError(TTIQError):
    pass


class UnknownTypeError(SchemaError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class CyclicDefinitionError(SchemaError):
    pass


class TaxonomyCycleError(TTIQError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class DepthExhausted(TTIQError):
    exit_code = 3


class EvalError(TTIQError):
    pass


class CoercionError(TTIQError):
    pass


class DataspaceError(TTIQError):
    pass


class TransportError(TTIQError):
    exit_code = 4


class AnalyticError(TTIQError):
    exit_code = 4


class PreconditionViolated(AnalyticError):
    pass


class PostconditionViolated(AnalyticError):
    pass
