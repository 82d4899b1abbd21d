"""Shared fixtures: synthetic tones, WAV files on disk, and the canonical
20-judger anchor-statistics table used by the screening tests."""

from __future__ import annotations

import numpy as np
import pytest

from podmetrics.analysis import JudgerStats
from podmetrics.audio import AudioBuffer, encode_wav


def sine(
    freq_hz: float,
    duration_s: float,
    rate: int = 48000,
    amplitude: float = 0.5,
    channels: int = 1,
    phase: float = 0.0,
) -> AudioBuffer:
    t = np.arange(int(round(duration_s * rate))) / rate
    x = amplitude * np.sin(2.0 * np.pi * freq_hz * t + phase)
    return AudioBuffer(np.tile(x, (channels, 1)), rate)


def dbfs(db: float) -> float:
    """Peak amplitude for a sine at the given dBFS level."""
    return 10.0 ** (db / 20.0)


@pytest.fixture
def tone_997_stereo() -> AudioBuffer:
    """997 Hz stereo sine at -23 dBFS, 20 s: reads -23.0 LUFS on a
    BS.1770 meter (the channel sum cancels the K-gain and the -0.691)."""
    return sine(997.0, 20.0, amplitude=dbfs(-23.0), channels=2)


@pytest.fixture
def wav_on_disk(tmp_path):
    """Factory: write an AudioBuffer to a temp WAV and return its path."""

    counter = {"n": 0}

    def write(buffer: AudioBuffer, sample_format: str = "float32"):
        counter["n"] += 1
        path = tmp_path / f"fixture_{counter['n']}.wav"
        encode_wav(buffer, path, sample_format=sample_format)
        return path

    return write


# Per-judger anchor statistics for the 20-rater screening fixture:
# (low-anchor-ranked-last %, high-anchor-in-top-2 %) over 17 pages each.
JUDGER_TABLE: dict[str, tuple[float, float]] = {
    "1": (94.12, 88.24),
    "2": (100.0, 88.24),
    "3": (100.0, 58.82),
    "4": (100.0, 58.82),
    "5": (100.0, 94.12),
    "6": (100.0, 64.71),
    "7": (100.0, 17.65),
    "8": (100.0, 58.82),
    "9": (100.0, 64.71),
    "10": (100.0, 94.12),
    "11": (94.12, 94.12),
    "12": (100.0, 82.35),
    "13": (100.0, 64.71),
    "14": (100.0, 82.35),
    "15": (100.0, 88.24),
    "16": (100.0, 58.82),
    "17": (100.0, 64.71),
    "18": (76.47, 47.06),
    "19": (100.0, 52.94),
    "20": (100.0, 35.29),
}


@pytest.fixture
def judger_stats_table() -> dict[str, JudgerStats]:
    return {
        jid: JudgerStats(judger_id=jid, lq_last_pct=lq, hq_top2_pct=hq, n_pages=17)
        for jid, (lq, hq) in JUDGER_TABLE.items()
    }


# Acceptance gate: one line per criterion in the terminal summary, in the
# order the criteria are defined. Names must match tests/test_acceptance.py.
ACCEPTANCE_CRITERIA = [
    ("test_scoring_curve_constants_exact", "loudness scoring-curve constants exact to 1e-9"),
    ("test_meter_reference_tone_linearity_and_lra", "meter: -23 LUFS tone, gain linearity, stationary LRA"),
    ("test_judger_screen_reference_outcome", "judger screen: excluded {7,18,20}, kept 17 of 20"),
    ("test_sptd_oracle_and_invariances", "timbre-difference oracle on 1000 random sets + invariances"),
    ("test_wer_oracle_identity_empty", "word-error-rate oracle on 1000 instances + edge cases"),
    ("test_mos_combination_arithmetic", "direct/justification score combination arithmetic"),
    ("test_text_metric_oracles_uniform_entropy", "text-metric oracles on 500 scripts + 6-bit uniform entropy"),
    ("test_stimulus_windows_and_minute_concat", "dialogue windows legal + minute concat duration exact"),
    ("test_service_concurrent_round_trip", "service: 100 concurrent posts, zero lost, torn tail tolerated"),
]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[str, str] = {}
    for key, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(key, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" in nodeid:
                name = nodeid.split("::")[-1]
                if label == "FAIL" or name not in outcomes:
                    outcomes[name] = label
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, description in ACCEPTANCE_CRITERIA:
        label = outcomes.get(name, "NOT RUN")
        terminalreporter.write_line(f"[{label}] {description}")
