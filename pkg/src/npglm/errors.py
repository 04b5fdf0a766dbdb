"""Exception hierarchy shared by all npglm modules."""

import numpy as np


class NPGLMError(Exception):
    """Base class for every error raised by npglm."""


class InvalidParameter(NPGLMError, ValueError):
    pass


class NotPositiveDefinite(NPGLMError, np.linalg.LinAlgError):
    pass


class IndexOutOfRange(NPGLMError, IndexError):
    pass


class SchemaError(NPGLMError, ValueError):
    pass


class ShapeMismatch(NPGLMError, ValueError):
    pass


class ModeMismatch(NPGLMError, ValueError):
    pass


class InsufficientSamples(NPGLMError, ValueError):
    pass


class FormatError(NPGLMError, ValueError):
    pass


class ChainAborted(NPGLMError, RuntimeError):
    """Raised when a Gibbs update fails mid-chain.

    Attributes
    ----------
    iteration : int
        Zero-based index of the iteration that failed.
    state : ChainState
        The last state that completed a full sweep.
    """

    def __init__(self, message, iteration, state, cause=None):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration
        self.state = state
        self.cause = cause
