""" Exceptions raised by the surfspin library.

The command line maps them to exit codes, see :data:`EXIT_CODES`.
"""


class SurfSpinError(Exception):
    pass


class ConfigurationError(SurfSpinError):
    """ Invalid settings, unsupported combinations or violated resolution guards. """


class CapacityError(ConfigurationError):
    """ The requested problem size exceeds a configured maximum. """


class DataFormatError(SurfSpinError):
    """ Input files that cannot be parsed into curves or parameter sets. """


class DomainError(SurfSpinError, ValueError):
    """ An argument lies outside the domain of the formula. """


class RegimeError(DomainError):
    """ The formula is used outside the regime where it was derived. """


class UnsupportedKindError(DomainError):
    """ The operation is not defined for this pulse sequence kind. """


class OutOfRangeError(DomainError):
    """ A time lies past the end of the available noise trajectory. """


class NumericError(SurfSpinError):
    """ Quadrature, root finding or fixed point iteration did not converge. """
    def __init__(self, reason: str, diagnostics: dict = None):
        super().__init__(reason)
        self.reason = reason
        self.diagnostics = diagnostics or {}

    def __str__(self):
        if not self.diagnostics:
            return self.reason
        details = ', '.join('%s=%s' % (k, v) for k, v in sorted(self.diagnostics.items()))
        return '%s (%s)' % (self.reason, details)


EXIT_CODES = (
    (ConfigurationError, 2),
    (DataFormatError, 3),
    (NumericError, 4),
    (DomainError, 2),
)


def exit_code_for(exc: BaseException) -> int:
    for klass, code in EXIT_CODES:
        if isinstance(exc, klass):
            return code
    return 1
