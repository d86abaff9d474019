"""Exception types shared across the package."""


class RtsumError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(RtsumError):
    """A file could not be parsed. Carries the 1-based line number when known."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ValidationError(RtsumError):
    """A dataset invariant was violated. Carries the offending example id when known."""

    def __init__(self, message: str, example_id: str | None = None):
        if example_id is not None:
            message = f"example {example_id!r}: {message}"
        super().__init__(message)
        self.example_id = example_id


class MissingField(RtsumError):
    """A required optional field (e.g. additional_input) is absent."""


class EmptyQuery(RtsumError):
    """A query tokenized to zero terms."""


class EmptyGold(RtsumError):
    """The gold document set is empty."""


class MissingVector(RtsumError):
    """No embedding vector stored for the requested id."""


class PoolExhausted(RtsumError):
    """The candidate document pool is smaller than the requested sample."""


class TransformerUnavailable(RtsumError):
    """A document transformer is required but none was supplied."""


class BudgetTooSmall(RtsumError):
    """The per-document truncation budget is zero tokens."""


class GatewayTimeout(RtsumError):
    """A remote gateway call timed out after all retries."""


class ProtocolError(RtsumError):
    """A remote gateway response violated the wire protocol."""


class RemoteError(RtsumError):
    """The remote endpoint reported an error. Carries the upstream message."""


class LengthMismatch(RtsumError):
    """Paired sequences have different lengths or different example sets."""


class RaggedMatrix(RtsumError):
    """Rating matrix rows do not all sum to the same rater count."""
