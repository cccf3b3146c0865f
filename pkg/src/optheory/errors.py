"""Exception hierarchy shared by every module."""


class GPTError(Exception):
    """Base class for all errors raised by optheory."""


class TypeMismatch(GPTError, TypeError):
    pass


class TheoryMismatch(GPTError, TypeError):
    pass


class EmptyList(GPTError, ValueError):
    pass


class BadSelector(GPTError, ValueError):
    pass


class UnknownSystem(GPTError, KeyError):
    pass


class UnknownTheory(GPTError, KeyError):
    pass


class BadShape(GPTError, ValueError):
    pass


class UnknownName(GPTError, KeyError):
    pass


class BadParams(GPTError, ValueError):
    pass


class BadArity(GPTError, ValueError):
    pass


class CycleDetected(GPTError, ValueError):
    pass


class OpenCircuit(GPTError, ValueError):
    pass


class BranchOutOfRange(GPTError, IndexError):
    pass


class InvalidState(GPTError, ValueError):
    pass


class InvalidTransformation(GPTError, ValueError):
    pass


class NotPure(GPTError, ValueError):
    pass


class MarginalMismatch(GPTError, ValueError):
    pass


class NotTracePreserving(GPTError, ValueError):
    pass


class BadMatrix(GPTError, ValueError):
    pass


class TooFewProbes(GPTError, ValueError):
    pass


class ProbeNotPure(GPTError, ValueError):
    pass


class UnknownDemo(GPTError, KeyError):
    pass


class DSLError(GPTError):
    """One or more :class:`~optheory.dsl.ast.SourceError` records."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))
