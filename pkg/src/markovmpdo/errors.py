"""Exception taxonomy.

``UsageError`` signals a caller mistake (bad indices, mismatched
dimensions), ``ValidationError`` a violated object invariant (non-Hermitian
matrix, non-CPTP channel), ``FormatError`` a malformed document, and
``ResourceLimitError`` a request beyond the dense desk-scale caps.
"""


class MarkovMpdoError(Exception):
    """Base class for all package errors."""


class UsageError(MarkovMpdoError, ValueError):
    """A precondition on the arguments was violated."""


class ValidationError(MarkovMpdoError, ValueError):
    """An object invariant (Hermiticity, PSD, trace, CPTP) was violated."""


class InvalidChannelError(ValidationError):
    """Choi matrix failed CPTP validation; carries both defects."""

    def __init__(self, message, cp_defect, tp_defect):
        super().__init__(message)
        self.cp_defect = cp_defect
        self.tp_defect = tp_defect


class FormatError(MarkovMpdoError, ValueError):
    """A witness or instance document could not be parsed."""


class ResourceLimitError(MarkovMpdoError, RuntimeError):
    """The request exceeds the dense-computation caps."""


class NumericError(MarkovMpdoError, RuntimeError):
    """A numerical routine failed (non-convergence, degenerate spectrum)."""


class PrecisionTooLowError(MarkovMpdoError, ValueError):
    """Requested bit budget cannot represent the object as a valid state."""
