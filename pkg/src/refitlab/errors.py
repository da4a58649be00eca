"""Exception taxonomy shared across the package.

Every exception the library raises derives from :class:`RefitlabError`, so the
HTTP layer can map each failure onto exactly one stable API error code (see
``service.ERROR_CODES``).
"""


class RefitlabError(Exception):
    """Base class for all errors raised by this package."""


class UnknownTokenError(RefitlabError):
    """A token could not be resolved against the model vocabulary.

    Carries the offending token (as the user typed it) for UI display.
    """

    def __init__(self, token: str):
        super().__init__(f"unknown token: {token!r}")
        self.token = token


class DimensionMismatchError(RefitlabError):
    """Vector has the wrong number of components for this model."""


class ZeroVectorError(RefitlabError):
    """An all-zero vector where a direction is required.

    Raised for zero rows at load time, zero vectors passed to updates, and
    composite query vectors that cancel to zero.
    """


class FormatError(RefitlabError):
    """A model file or byte stream violates the word2vec format contract."""


class InvalidQueryError(RefitlabError):
    """Query is structurally invalid: bad mode, wrong term count, k < 1."""


class InvalidRequestError(RefitlabError):
    """Refit request is structurally invalid: duplicates, target overlap,
    bad hyperparameters."""


class ZeroDenominatorError(RefitlabError):
    """Refit update is undefined: alpha is zero and the node has no edges."""


class EmptyLogError(RefitlabError):
    """Undo requested but the action log has no entries."""


class LineageMismatchError(RefitlabError):
    """An action log does not belong to the model it is being replayed onto."""


class WriterBusyError(RefitlabError):
    """Another mutation is in flight; the caller should retry."""
