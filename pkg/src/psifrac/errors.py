"""Exception types shared across the package."""

from __future__ import annotations


class PsifracError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PsifracError):
    """An argument lies outside the mathematically admissible range."""


class NonMonotoneError(PsifracError):
    """A weight function fails the increasing / positive-derivative audit."""


class SingularityError(PsifracError):
    """Evaluation requested at a point where the quantity diverges."""


class GridError(PsifracError):
    """A sampled grid cannot support the requested operation."""


class ParseError(PsifracError):
    """Expression source rejected by the parser."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifier(ParseError):
    """Identifier that is neither a declared variable, function nor constant."""

    def __init__(self, name: str, offset: int) -> None:
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class EvalError(PsifracError):
    """Expression evaluation produced a non-finite or undefined value."""

    def __init__(self, message: str, span: tuple[int, int], fragment: str = "") -> None:
        detail = f" in {fragment!r}" if fragment else ""
        super().__init__(f"{message}{detail} (span {span[0]}:{span[1]})")
        self.span = span
        self.fragment = fragment


class NonFiniteIterate(PsifracError):
    """A fixed-point iterate left the space of finite grid functions."""


class NoConvergence(PsifracError):
    """Fixed-point iteration exhausted its budget before meeting tolerance.

    Carries the per-iteration bookkeeping so callers can report it.
    """

    def __init__(self, message: str, iterations: int,
                 update_norms: list[float], ratios: list[float]) -> None:
        super().__init__(message)
        self.iterations = iterations
        self.update_norms = update_norms
        self.ratios = ratios


class ConfigError(PsifracError):
    """Problem-file contents violate the input contract."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"[{field}] {message}")
        self.field = field


class MismatchError(PsifracError):
    """A solution artifact does not correspond to the given problem file."""
