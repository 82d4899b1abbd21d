"""Speech-to-background balance over paired stems.

The ratio is the difference of BS.1770 integrated loudness between the
speech stem and the music/sound-effects stem, in LU. A silent background
stem yields a +inf sentinel (flagged ``no_mse``) rather than an error; a
silent speech stem is an error because the ratio is then meaningless.
Stems are taken as delivered — when they come from source separation, the
separation quality is the caller's responsibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .audio import AudioBuffer, slice_seconds
from .errors import MetricError
from .loudness import integrated_loudness

MIN_STEM_S = 3.0


@dataclass(frozen=True)
class SmrResult:
    """Loudness difference speech - background, in LU."""

    smr_lu: float
    speech_lufs: float
    mse_lufs: float
    no_mse: bool


def _check_pair(speech: AudioBuffer, mse: AudioBuffer) -> None:
    if speech.sample_rate != mse.sample_rate:
        raise MetricError(
            f"stem rate mismatch: speech {speech.sample_rate} Hz vs background {mse.sample_rate} Hz"
        )
    if abs(speech.n_frames - mse.n_frames) > 1:
        raise MetricError(
            f"stem length mismatch: speech {speech.n_frames} frames vs background "
            f"{mse.n_frames} frames (must align within 1 sample)"
        )
    for name, stem in (("speech", speech), ("background", mse)):
        if stem.duration_s < MIN_STEM_S:
            raise MetricError(f"{name} stem too short ({stem.duration_s:.3f} s < {MIN_STEM_S} s)")


def smr(
    speech: AudioBuffer,
    mse: AudioBuffer,
    regions: list[tuple[float, float]] | None = None,
) -> SmrResult:
    """Speech-to-background loudness ratio.

    ``regions`` optionally restricts measurement to the given (start_s,
    end_s) spans — e.g. background-active regions — concatenated before
    metering; default is the full stems.
    """
    _check_pair(speech, mse)
    if regions:
        from .audio import concat

        speech = concat([slice_seconds(speech, a, b) for a, b in regions])
        mse = concat([slice_seconds(mse, a, b) for a, b in regions])
        if speech.duration_s < MIN_STEM_S:
            raise MetricError(
                f"selected regions too short ({speech.duration_s:.3f} s < {MIN_STEM_S} s)"
            )
    speech_lufs = integrated_loudness(speech)
    mse_lufs = integrated_loudness(mse)
    if math.isinf(speech_lufs):
        raise MetricError("speech stem is silent; speech-to-background ratio undefined")
    if math.isinf(mse_lufs):
        return SmrResult(
            smr_lu=float("inf"), speech_lufs=speech_lufs, mse_lufs=mse_lufs, no_mse=True
        )
    return SmrResult(
        smr_lu=speech_lufs - mse_lufs,
        speech_lufs=speech_lufs,
        mse_lufs=mse_lufs,
        no_mse=False,
    )


@dataclass(frozen=True)
class SmrScore:
    score: float
    n_valid: int
    n_positive: int
    n_no_mse: int


def smr_score(results: list[SmrResult | float]) -> SmrScore:
    """Fraction of measurements where speech sits strictly above background.

    ``no_mse`` sentinels are excluded from the denominator (their count is
    reported separately); an empty valid set is an error. Accepts either
    :class:`SmrResult` records or bare LU values.
    """
    if not results:
        raise MetricError("smr_score needs at least one measurement")
    valid: list[float] = []
    n_no_mse = 0
    for r in results:
        if isinstance(r, SmrResult):
            if r.no_mse:
                n_no_mse += 1
                continue
            valid.append(r.smr_lu)
        else:
            v = float(r)
            if math.isinf(v) and v > 0:
                n_no_mse += 1
                continue
            valid.append(v)
    if not valid:
        raise MetricError("no valid measurements after excluding no-background sentinels")
    n_positive = sum(1 for v in valid if v > 0.0)
    return SmrScore(
        score=n_positive / len(valid),
        n_valid=len(valid),
        n_positive=n_positive,
        n_no_mse=n_no_mse,
    )
