"""Loudness measurement and scoring.

Implements the ITU-R BS.1770-4 integrated loudness meter (K-weighting,
400 ms gating blocks, absolute and relative gates), a 4x-oversampled
true-peak estimate, and EBU Tech 3342 loudness range, plus the smooth
score curves that map each measurement onto [0, 1] against the delivery
targets used for spoken-word program material: integrated loudness in
[-18, -14] LUFS, true peak at or below -1 dBTP, loudness range in
[4, 18] LU.

All measurement runs at 48 kHz; other rates are resampled first so the
K-weighting filter coefficients stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import resample_poly, sosfilt

from .audio import AudioBuffer, resample
from .errors import MetricError

METER_RATE = 48000

# K-weighting at 48 kHz per BS.1770-4: stage 1 is the spherical-head
# high-shelf, stage 2 the RLB high-pass. Coefficients from the standard's
# published tables.
_K_WEIGHTING_SOS = np.array(
    [
        [
            1.53512485958697,
            -2.69169618940638,
            1.19839281085285,
            1.0,
            -1.69065929318241,
            0.73248077421585,
        ],
        [1.0, -2.0, 1.0, 1.0, -1.99004745483398, 0.99007225036621],
    ]
)

BLOCK_S = 0.400  # gating block length
HOP_S = 0.100  # 75% overlap
ABS_GATE_LUFS = -70.0
REL_GATE_LU = -10.0

LRA_WINDOW_S = 3.0
LRA_HOP_S = 1.0
LRA_REL_GATE_LU = -20.0

# Target ranges and curve steepness for the quality scores. The score is
# 1.0 inside the target band and decays exponentially outside it; the k
# constants set the decay rate per LU / dB of excursion.
IL_TARGET = (-18.0, -14.0)
TP_TARGET_DBTP = -1.0
LRA_TARGET = (4.0, 18.0)
K1 = 0.0858  # integrated loudness, too-quiet side
K2 = 0.3291  # integrated loudness, too-loud side
K3 = 4.605  # true peak above target
K4 = 1.1513  # loudness range, too-narrow side
K5 = 0.2554  # loudness range, too-wide side


def _to_meter_rate(buffer: AudioBuffer) -> AudioBuffer:
    return resample(buffer, METER_RATE)


def _block_loudness(buffer: AudioBuffer, window_s: float, hop_s: float) -> np.ndarray:
    """Per-window loudness (LKFS) of K-weighted audio; empty if too short."""
    weighted = sosfilt(_K_WEIGHTING_SOS, buffer.samples, axis=1)
    win = int(round(window_s * buffer.sample_rate))
    hop = int(round(hop_s * buffer.sample_rate))
    n = weighted.shape[1]
    if n < win:
        return np.empty(0)
    n_blocks = 1 + (n - win) // hop
    # Sum of squares via cumulative sums: O(n) regardless of overlap.
    csum = np.concatenate(
        [np.zeros((weighted.shape[0], 1)), np.cumsum(weighted**2, axis=1)], axis=1
    )
    starts = np.arange(n_blocks) * hop
    per_channel_ms = (csum[:, starts + win] - csum[:, starts]) / win
    power = per_channel_ms.sum(axis=0)  # unity channel weights (no surround)
    with np.errstate(divide="ignore"):
        return -0.691 + 10.0 * np.log10(power)


def integrated_loudness(buffer: AudioBuffer) -> float:
    """Gated integrated loudness in LUFS per BS.1770-4.

    Returns ``-inf`` when every block falls below the -70 LUFS absolute
    gate (digital silence or near-silence).
    """
    buffer = _to_meter_rate(buffer)
    if buffer.duration_s < BLOCK_S:
        raise MetricError(
            f"audio too short for loudness measurement ({buffer.duration_s:.3f} s < {BLOCK_S} s)"
        )
    blocks = _block_loudness(buffer, BLOCK_S, HOP_S)
    abs_gated = blocks[blocks > ABS_GATE_LUFS]
    if abs_gated.size == 0:
        return float("-inf")
    ungated_mean = 10.0 * np.log10(np.mean(10.0 ** (abs_gated / 10.0)))
    rel_threshold = ungated_mean + REL_GATE_LU
    gated = abs_gated[abs_gated > rel_threshold]
    if gated.size == 0:
        return float("-inf")
    # Energy-mean over block loudness equals -0.691 + 10 log10(mean power):
    # the -0.691 offsets inside each block value carry through the mean.
    return float(10.0 * np.log10(np.mean(10.0 ** (gated / 10.0))))


def true_peak_dbtp(buffer: AudioBuffer) -> float:
    """Inter-sample peak estimate in dBTP via 4x polyphase oversampling.

    The maximum is taken over both the oversampled signal and the original
    samples, so the result never reads below the plain sample peak.
    Digital silence returns ``-inf``.
    """
    buffer = _to_meter_rate(buffer)
    oversampled = resample_poly(buffer.samples, 4, 1, axis=1)
    peak = max(np.max(np.abs(oversampled)), np.max(np.abs(buffer.samples)))
    if peak <= 0.0:
        return float("-inf")
    return float(20.0 * math.log10(peak))


def loudness_range(buffer: AudioBuffer) -> float:
    """Loudness range (LU) per EBU Tech 3342.

    3 s windows with 1 s hop, -70 LUFS absolute gate, then a relative gate
    20 LU below the energy mean of the surviving windows; LRA is the spread
    between the 10th and 95th percentiles. Inputs passing no windows (or a
    single window) measure 0.0 LU.
    """
    buffer = _to_meter_rate(buffer)
    if buffer.duration_s < LRA_WINDOW_S:
        raise MetricError(
            f"audio too short for loudness range ({buffer.duration_s:.3f} s < {LRA_WINDOW_S} s)"
        )
    windows = _block_loudness(buffer, LRA_WINDOW_S, LRA_HOP_S)
    abs_gated = windows[windows > ABS_GATE_LUFS]
    if abs_gated.size == 0:
        return 0.0
    energy_mean = 10.0 * np.log10(np.mean(10.0 ** (abs_gated / 10.0)))
    gated = abs_gated[abs_gated >= energy_mean + LRA_REL_GATE_LU]
    if gated.size < 2:
        return 0.0
    lo, hi = np.percentile(gated, [10.0, 95.0])
    return float(hi - lo)


@dataclass(frozen=True)
class LoudnessReport:
    """All three measurements plus their scores for one piece of audio."""

    integrated_lufs: float
    true_peak_dbtp: float
    lra_lu: float
    il_score: float
    tp_score: float
    lra_score: float


def score_integrated(il_lufs: float) -> float:
    """1.0 inside [-18, -14] LUFS, exponential decay outside.

    A -inf measurement (silence) scores 0.0.
    """
    if math.isinf(il_lufs) and il_lufs < 0:
        return 0.0
    lo, hi = IL_TARGET
    if il_lufs < lo:
        return math.exp(-K1 * (lo - il_lufs))
    if il_lufs > hi:
        return math.exp(-K2 * (il_lufs - hi))
    return 1.0


def score_true_peak(tp_dbtp: float) -> float:
    """1.0 at or below -1 dBTP, exponential decay above."""
    if math.isinf(tp_dbtp) and tp_dbtp < 0:
        return 1.0
    if tp_dbtp <= TP_TARGET_DBTP:
        return 1.0
    return math.exp(-K3 * (tp_dbtp - TP_TARGET_DBTP))


def score_lra(lra_lu: float) -> float:
    """1.0 inside [4, 18] LU, exponential decay outside."""
    lo, hi = LRA_TARGET
    if lra_lu < lo:
        return math.exp(-K4 * (lo - lra_lu))
    if lra_lu > hi:
        return math.exp(-K5 * (lra_lu - hi))
    return 1.0


def measure(buffer: AudioBuffer) -> LoudnessReport:
    """Run all three measurements and score them."""
    il = integrated_loudness(buffer)
    tp = true_peak_dbtp(buffer)
    lra = loudness_range(buffer)
    return LoudnessReport(
        integrated_lufs=il,
        true_peak_dbtp=tp,
        lra_lu=lra,
        il_score=score_integrated(il),
        tp_score=score_true_peak(tp),
        lra_score=score_lra(lra),
    )
