class PipelineError(Exception):
    """Root of every error raised by the estimation pipeline.

    ``code`` is the machine-readable identifier written into the CLI error JSON.
    """

    code = "pipeline_error"

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


class DomainError(PipelineError):
    """An argument lies outside the domain where an operation is defined."""

    code = "domain"
