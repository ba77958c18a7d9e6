"""Exception types shared across the package."""


class BenchgenError(Exception):
    """Base class for all package errors."""


class ParseError(BenchgenError):
    """Malformed input text (parameter space, generator model, value file)."""


class ValidationError(BenchgenError):
    """Structurally valid input that violates a semantic rule."""


class ModelError(BenchgenError):
    """A generator model whose shapes are ill-defined for a configuration."""


class EvalError(BenchgenError):
    """Type mismatch or undefined operation while evaluating an expression."""


class CheckError(BenchgenError):
    """Solution payload that cannot be checked against the problem model."""


class MissingRecord(BenchgenError):
    """A (solver, instance) cell required for score aggregation is absent."""


class DegenerateInput(BenchgenError):
    """Too little data for a statistical test (fewer than 2 blocks or columns)."""


class ArchiveError(BenchgenError):
    """Campaign archive is missing, incomplete, or inconsistent."""
