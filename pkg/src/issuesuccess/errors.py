"""Exception hierarchy shared across the package."""


class IssueSuccessError(Exception):
    """Base class for every error raised by this package."""


# --- tracker client -------------------------------------------------------

class IngestError(IssueSuccessError):
    pass


class NetworkError(IngestError):
    """Transport failure that persisted through every retry."""


class AuthError(IngestError):
    """The tracker rejected the credentials (HTTP 401/403)."""


class ProtocolError(IngestError):
    """The tracker answered with a payload we could not interpret."""


class UnknownProject(IngestError):
    pass


class UnknownIssue(IngestError):
    pass


# --- corpus ---------------------------------------------------------------

class UnknownResolution(IssueSuccessError, ValueError):
    """Resolution tag is neither a success tag nor a failure tag."""


class InvalidInterval(IssueSuccessError, ValueError):
    """Resolution timestamp precedes creation timestamp."""


class SchemaError(IssueSuccessError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# --- features -------------------------------------------------------------

class InvalidRange(IssueSuccessError, ValueError):
    pass


class EmptyVocabulary(IssueSuccessError, ValueError):
    pass


# --- learning -------------------------------------------------------------

class SingleClassError(IssueSuccessError, ValueError):
    """Training or balancing needs both classes but only one is present."""


class DimensionMismatch(IssueSuccessError, ValueError):
    pass


# --- evaluation -----------------------------------------------------------

class LengthMismatch(IssueSuccessError, ValueError):
    pass


class EmptyInput(IssueSuccessError, ValueError):
    pass


class DegenerateSeries(IssueSuccessError, ValueError):
    """A correlation input has zero variance."""


# --- experiment runner ----------------------------------------------------

class ConfigError(IssueSuccessError, ValueError):
    pass


class EmptyWindow(IssueSuccessError):
    """No issue qualifies for the requested (type, horizon) window."""


class TooFewDocuments(IssueSuccessError, ValueError):
    pass
