"""
Exception hierarchy for the ECC toolkit.

Every domain error derives from ``ECCError`` so batch code can catch one
type per item and keep going. Errors caused by malformed input also derive
from ``ValueError``.
"""

from typing import Optional


class ECCError(Exception):
    """Base class for all toolkit errors."""


class SmilesSyntaxError(ECCError, ValueError):
    """Malformed SMILES text.

    Attributes:
        position: 0-based character offset where parsing failed.
        message: Human-readable reason.
    """

    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"position {position}: {message}")


class DuplicateBondError(ECCError, ValueError):
    """A pair of atoms would be bonded twice (or to itself)."""

    def __init__(self, a: int, b: int, position: Optional[int] = None):
        self.a = a
        self.b = b
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"atoms {a} and {b} are already bonded{where}")


class SchemaError(ECCError, ValueError):
    """Graph file does not follow the plain graph schema.

    Attributes:
        path: JSON-path-like location of the offending field, e.g.
            ``bonds[0].b``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class UnknownElementError(ECCError, ValueError):
    """Element symbol missing from the element table."""


class DimensionOutOfRangeError(ECCError, ValueError):
    """Requested cell dimension is not valid for the operation."""


class InvalidCompositionError(ECCError, ValueError):
    """Isotope or charge that leaves an atom with a negative particle count."""


class InvalidComplexError(ECCError):
    """A cell complex failed validation (e.g. boundary of boundary != 0)."""


class NonConvergenceError(ECCError, ArithmeticError):
    """The Jacobi eigensolver hit its sweep limit."""


class EmptyDimensionError(ECCError, ValueError):
    """Chain sampling was requested on a dimension without cells."""


class PadOverflowError(ECCError, ValueError):
    """Assembled ECC features do not fit into ``pad_to``."""


class FormatVersionMismatchError(ECCError, ValueError):
    """Feature file header is not a supported format version."""


class LengthMismatchError(ECCError, ValueError):
    """Two sequences (or a record and its header) disagree in length."""


class ShapeMismatchError(ECCError, ValueError):
    """Array shapes are inconsistent with each other or with the graph."""


class NonFiniteWeightsError(ECCError, ValueError):
    """Layer weights contain NaN or infinite entries."""


class BadKError(ECCError, ValueError):
    """Invalid number of folds."""


class BadPError(ECCError, ValueError):
    """A p-value outside [0, 1]."""


class BadLengthError(ECCError, ValueError):
    """A difference vector too short for a paired test."""


class UnknownControlError(ECCError, KeyError):
    """The designated control model is not in the fold-loss table."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown control"
