# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Exceptions and warnings raised by pskt.

All exceptions derive from the builtin class a caller would otherwise expect, so
``except ValueError`` keeps working for shape or degree problems.
"""


class ShapeError(ValueError):
    """Operand shapes do not agree."""


class PrecisionError(ValueError):
    """Operands are stored in different precisions, or the precision is unknown."""


class DegreeError(ValueError):
    """Polynomial degree is not supported, or inconsistent with a feature map."""


class PreconditionError(ValueError):
    """Input violates a documented precondition (e.g. rows not mean-zero)."""


class CapExceededError(ValueError):
    """A naive computation would materialize more than the desk-scale cap allows."""


class PSKMParseError(IOError):
    """Malformed PSKM or PSKC content."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class ZeroDenominatorWarning(RuntimeWarning):
    """Raw polynomial weights hit an exactly zero normalizer."""


class NegativeFeatureDotWarning(RuntimeWarning):
    """A feature dot product was negative beyond floating-point cancellation."""
