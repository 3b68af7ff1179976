"""Exception hierarchy shared by the simulator, estimator and CLI.

Every error carries a short machine-readable ``code`` that the command line
front end prints as a prefix.
"""


class DiffcalError(Exception):
    code = "E_DATA"


class ConfigError(DiffcalError, ValueError):
    code = "E_CONFIG"


class TraceError(DiffcalError, ValueError):
    """Malformed, ragged or too-short trace."""

    code = "E_TRACE"


class ProtocolError(DiffcalError):
    """The requested measurement protocol is not applicable to the trace."""

    code = "E_PROTOCOL"


class NoSteadyStateError(DiffcalError):
    code = "E_NO_STEADY_STATE"


class FitError(DiffcalError):
    code = "E_FIT"


class FitConvergenceError(FitError):
    """Levenberg-Marquardt stopped without meeting its tolerance.

    The best parameters found are kept on ``model``.
    """

    code = "E_FIT_CONVERGENCE"

    def __init__(self, message, model=None):
        super().__init__(message)
        self.model = model


class DegenerateWindowError(DiffcalError, ValueError):
    code = "E_DEGENERATE"


class NoExtremaError(DiffcalError):
    code = "E_NO_EXTREMA"
