"""Exception types shared across the package."""


class KGPruneError(Exception):
    """Base class for all kgprune errors."""


class MalformedId(KGPruneError):
    """Input text is not a well-formed Q/P identifier."""


class MissingEmbedding(KGPruneError):
    """An entity or relation has no vector in the embedding table."""


class DimensionMismatch(KGPruneError):
    """Vector dimensions disagree with what the model was trained on."""


class InsufficientData(KGPruneError):
    """Not enough labeled examples to build or train on."""


class NonFiniteLoss(KGPruneError):
    """Training diverged to NaN/inf; aborted with diagnostic."""


class DegenerateInput(KGPruneError):
    """Training set admits no corruptible triples."""


class FormatError(KGPruneError):
    """A serialized file does not match its declared format.

    Carries the 1-based line number and byte offset of the first offending
    record when known.
    """

    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if offset is not None:
                where += f" (byte {offset})"
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.offset = offset


class SchemaError(KGPruneError):
    """A JSON document violates the result schema; `path` locates the field."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class ValidationError(KGPruneError):
    """User-supplied task inputs are unusable; `details` lists every issue."""

    def __init__(self, message: str, details: list[str] | None = None):
        super().__init__(message)
        self.details = details or []


class SeedUnembedded(KGPruneError):
    """Analogy mode requires every seed to be embedded."""

    def __init__(self, seeds):
        self.seeds = list(seeds)
        super().__init__(
            "seed entities missing from the embedding table: "
            + ", ".join(str(s) for s in self.seeds)
        )


class NotFound(KGPruneError):
    """Entity absent or deleted on the remote endpoint."""


class TransportError(KGPruneError):
    """Network failure that survived the configured retries."""

    def __init__(self, message: str, partial_result=None):
        super().__init__(message)
        self.partial_result = partial_result


class ParseError(KGPruneError):
    """Remote payload was not parseable."""


class QueryRefused(KGPruneError):
    """The query endpoint refused service (throttling) after backoff."""
