"""Shared exception hierarchy.

Every error raised on purpose by this package derives from
:class:`PodmetricsError` so the CLI can map tool failures to exit code 1
while genuine bugs still surface as ordinary tracebacks.
"""


class PodmetricsError(Exception):
    """Base class for all errors raised by this package."""


class AudioError(PodmetricsError):
    """Malformed, unsupported, or out-of-range audio input."""


class ManifestError(PodmetricsError):
    """Manifest parsing or validation failure."""


class MetricError(PodmetricsError):
    """A metric's preconditions were violated."""


class JudgeError(PodmetricsError):
    """LLM judging failed (transport or response)."""


class JudgeParseError(JudgeError):
    """The model's reply could not be parsed; carries the raw text."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class ConfigError(PodmetricsError):
    """Invalid listening-test configuration."""


class SubmissionError(PodmetricsError):
    """Invalid submission record or submission log."""
