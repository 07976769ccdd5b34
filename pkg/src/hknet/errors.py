"""Exception hierarchy and the violation record used by validators.

Operations that *check* things (structure validation, run validation,
module well-formedness) report lists of :class:`Violation` instead of
raising, so callers can collect every problem at once.  Operations with
preconditions raise.
"""

from __future__ import annotations

from dataclasses import dataclass

from .spans import SourceSpan


class ModelError(Exception):
    """Base class for all kernel errors; optionally carries a source span."""

    def __init__(self, message: str, span: SourceSpan | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message


class ParseError(ModelError):
    """Syntactic or lexical error in a model document."""


class SortError(ModelError):
    """Ill-sorted term, undeclared symbol, or sort inference failure."""


class EvalError(ModelError):
    """Term evaluation failure: unbound variable, missing table entry, elm misuse."""


class CompositionError(ModelError):
    """Modules cannot be composed: incompatible fusion or interface collision."""


class FiringError(ModelError):
    """A transition was fired with a binding that is not enabled."""


class ScriptError(ModelError):
    """A scripted simulation step does not match exactly one enabled binding."""


@dataclass(frozen=True)
class Violation:
    """One validator finding: a short machine-readable code plus detail."""

    code: str
    message: str
    span: SourceSpan | None = None

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.span}: [{self.code}] {self.message}"
        return f"[{self.code}] {self.message}"
