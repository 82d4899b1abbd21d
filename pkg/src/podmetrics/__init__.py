"""Objective metrics, listening-test tooling, and submission analysis for
podcast-like long-form audio.

The package is organized by pipeline stage:

- :mod:`podmetrics.audio` — WAV decode/encode, resampling, slicing, beeps.
- :mod:`podmetrics.loudness` — BS.1770 meter, true peak, loudness range,
  and the target-band quality scores.
- :mod:`podmetrics.speech` — WER, speaker-embedding similarity and
  pairwise timbre difference, external score ingestion.
- :mod:`podmetrics.mix` — speech-to-background loudness ratio over stems.
- :mod:`podmetrics.textmetrics` — lexical/semantic script metrics.
- :mod:`podmetrics.manifest` — dataset manifest parsing and validation.
- :mod:`podmetrics.segments` — listening-test stimulus preparation.
- :mod:`podmetrics.judge` — LLM comparative judging and comment scoring.
- :mod:`podmetrics.analysis` — submission ingestion, judger screening,
  aggregation, and normalized system reports.
- :mod:`podmetrics.service` — the HTTP service behind the web UI.
- :mod:`podmetrics.cli` — the ``podmetrics`` command.
"""

from .errors import (
    AudioError,
    ConfigError,
    JudgeError,
    JudgeParseError,
    ManifestError,
    MetricError,
    PodmetricsError,
    SubmissionError,
)

__version__ = "0.1.0"

__all__ = [
    "AudioError",
    "ConfigError",
    "JudgeError",
    "JudgeParseError",
    "ManifestError",
    "MetricError",
    "PodmetricsError",
    "SubmissionError",
    "__version__",
]
