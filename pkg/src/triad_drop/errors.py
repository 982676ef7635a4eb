"""Exception hierarchy shared across the pipeline.

Every error carries a short machine-parsable ``name`` (used by the CLI for
its one-line failure output) and an ``exit_code`` grouping: 2 for missing
artifacts, 3 for invalid configuration, 1 for everything else.
"""

from __future__ import annotations


class TriadError(Exception):
    """Base class for pipeline errors."""

    exit_code = 1

    @property
    def name(self) -> str:
        return type(self).__name__

    def one_liner(self) -> str:
        detail = " ".join(str(a) for a in self.args if a is not None)
        return f"{self.name}: {detail}" if detail else self.name


# dataset
class EmptyFile(TriadError):
    pass


class MissingColumn(TriadError):
    pass


class TypeMismatch(TriadError):
    def __init__(self, line: int, column: str, detail: str = ""):
        super().__init__(f"line {line}, column {column!r}" + (f": {detail}" if detail else ""))
        self.line = line
        self.column = column


class AllMissingColumn(TriadError):
    pass


# features
class ClassTooSmall(TriadError):
    pass


class UnfittedEncoder(TriadError):
    pass


class RankDeficient(TriadError):
    pass


# textpipe
class ProviderUnavailable(TriadError):
    pass


class EmptyIndex(TriadError):
    pass


# resample
class TooFewMinoritySamples(TriadError):
    pass


# models / fusion
class Diverged(TriadError):
    pass


class NoSignal(TriadError):
    pass


class WidthMismatch(TriadError):
    pass


class UnknownVariant(TriadError):
    pass


# evaluation
class LengthMismatch(TriadError):
    pass


class DegenerateLabels(TriadError):
    pass


class NoDiscordantPairs(TriadError):
    pass


class InvalidReps(TriadError):
    pass


# explain
class EmptyBackground(TriadError):
    pass


class UnknownTag(TriadError):
    pass


class IllegalTransition(TriadError):
    pass


# service
class ModelMissing(TriadError):
    exit_code = 2


class CohortMissing(TriadError):
    exit_code = 2


class StaleRevision(TriadError):
    pass


class InvalidConfig(TriadError):
    exit_code = 3
