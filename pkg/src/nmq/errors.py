"""Exception hierarchy shared by the engine and the command-line frontend."""


class NMQError(Exception):
    """Base class for all errors raised by nmq."""


class DimensionError(NMQError, ValueError):
    """Operands live on different numbers of qubits or have bad shapes."""


class CapacityError(NMQError):
    """A dense representation was requested beyond the configured limit."""


class InconsistentSpectrumError(NMQError, ValueError):
    """An eigenvalue vector with a nonzero identity slot."""


class IntegrationError(NMQError):
    """Adaptive quadrature failed to converge.

    ``index`` is the flat Pauli index whose integrand carried the largest
    error estimate when the recursion gave up.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DomainError(NMQError, ValueError):
    """A closed form was evaluated outside its domain."""


class LogDomainError(DomainError):
    """``h_t^b <= pos_tol`` where a logarithmic derivative is needed.

    This is where canonical rates diverge; ``index`` and ``value`` locate
    the offending spectral slot.
    """

    def __init__(self, message, index=None, value=None, t=None):
        super().__init__(message)
        self.index = index
        self.value = value
        self.t = t


class PoleError(DomainError):
    """A rate was evaluated at (or numerically on top of) one of its poles."""

    def __init__(self, message, nearest_pole=None):
        super().__init__(message)
        self.nearest_pole = nearest_pole


class UnsupportedClosedFormError(DomainError):
    """No closed form exists for the requested parameters."""


class ConditioningError(NMQError):
    """Conditioning on an outcome with (numerically) zero probability."""


class ConfigError(NMQError):
    """Malformed or out-of-domain run configuration."""
