"""Listening-test stimulus preparation.

Two producers: short dialogue windows with real turn-taking, picked from a
diarization track for side-by-side rating; and a first/middle/final-minute
concatenation with separator beeps for whole-episode impressions without
hour-long sessions. Planning is pure (specs in, specs out) so a dry run
can be inspected before any audio is rendered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .audio import AudioBuffer, concat, silence, slice_seconds, synth_beep
from .errors import MetricError

MIN_SEGMENT_S = 15.0
MAX_SEGMENT_S = 25.0
SNAP_GAP_MIN_S = 0.200  # gaps shorter than this are not usable pauses
SNAP_SEARCH_S = 1.0  # how far from the raw boundary to look for a pause
BEEP_PAD_S = 0.25  # silence on each side of the separator beep
MINUTE_S = 60.0
FML_MIN_TOTAL_S = 180.0


@dataclass(frozen=True)
class DiarizationSegment:
    speaker_id: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise MetricError(
                f"diarization segment for {self.speaker_id!r}: "
                f"end {self.end_s} must exceed start {self.start_s}"
            )


@dataclass(frozen=True)
class StimulusSpec:
    episode_id: str
    kind: str  # "dialogue_segment" or "fml_concat"
    start_s: float
    end_s: float
    n_speaker_changes: int = 0
    max_speaker_share: float = 1.0

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def load_diarization(path: str | Path) -> list[DiarizationSegment]:
    """Read RTTM or JSON-lines diarization; returns segments sorted by start.

    RTTM rows: ``SPEAKER <file> <chan> <start> <dur> <na> <na> <speaker> ...``.
    JSON-lines rows: {"speaker_id": ..., "start_s": ..., "end_s": ...}.
    """
    path = Path(path)
    segs: list[DiarizationSegment] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("SPEAKER"):
            parts = line.split()
            if len(parts) < 8:
                raise MetricError(f"{path}:{lineno}: malformed RTTM row")
            try:
                start, dur = float(parts[3]), float(parts[4])
            except ValueError as e:
                raise MetricError(f"{path}:{lineno}: non-numeric RTTM times") from e
            segs.append(DiarizationSegment(parts[7], start, start + dur))
        else:
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise MetricError(f"{path}:{lineno}: neither RTTM nor JSON ({e})") from e
            try:
                segs.append(
                    DiarizationSegment(
                        str(rec["speaker_id"]), float(rec["start_s"]), float(rec["end_s"])
                    )
                )
            except (KeyError, TypeError, ValueError) as e:
                raise MetricError(
                    f"{path}:{lineno}: need speaker_id, start_s, end_s fields"
                ) from e
    if not segs:
        raise MetricError(f"{path}: empty diarization")
    return sorted(segs, key=lambda s: (s.start_s, s.end_s))


def count_overlaps(segments: list[DiarizationSegment]) -> int:
    """Number of adjacent pairs (by start order) that overlap in time."""
    n = 0
    for a, b in zip(segments, segments[1:]):
        if b.start_s < a.end_s:
            n += 1
    return n


def _window_stats(
    segments: list[DiarizationSegment], start: float, end: float
) -> tuple[int, float]:
    """(speaker changes, max speaker time share) within [start, end).

    A change is counted between consecutive overlapping-the-window segments
    with different speakers. Share is per-speaker talk time clipped to the
    window, over total clipped talk time.
    """
    inside: list[tuple[str, float]] = []
    order: list[str] = []
    for seg in segments:
        lo, hi = max(seg.start_s, start), min(seg.end_s, end)
        if hi - lo <= 0:
            continue
        inside.append((seg.speaker_id, hi - lo))
        order.append(seg.speaker_id)
    if not inside:
        return 0, 1.0
    changes = sum(1 for a, b in zip(order, order[1:]) if a != b)
    talk: dict[str, float] = {}
    for spk, dur in inside:
        talk[spk] = talk.get(spk, 0.0) + dur
    max_share = max(talk.values()) / sum(talk.values())
    return changes, max_share


def _gaps(segments: list[DiarizationSegment]) -> list[tuple[float, float]]:
    """Silent intervals >= SNAP_GAP_MIN_S between diarized speech."""
    out: list[tuple[float, float]] = []
    cover_end = segments[0].end_s
    for seg in segments[1:]:
        if seg.start_s - cover_end >= SNAP_GAP_MIN_S:
            out.append((cover_end, seg.start_s))
        cover_end = max(cover_end, seg.end_s)
    return out


def _snap(edge: float, gaps: list[tuple[float, float]]) -> float | None:
    """Midpoint of the nearest usable pause within SNAP_SEARCH_S, if any."""
    best: float | None = None
    best_dist = SNAP_SEARCH_S
    for lo, hi in gaps:
        mid = (lo + hi) / 2.0
        dist = abs(mid - edge)
        if dist <= best_dist:
            best_dist = dist
            best = mid
    return best


def extract_dialogue_segments(
    diarization: list[DiarizationSegment],
    duration_s: float,
    episode_id: str = "",
    min_len: float = MIN_SEGMENT_S,
    max_len: float = MAX_SEGMENT_S,
    count: int = 1,
) -> list[StimulusSpec]:
    """Pick up to ``count`` non-overlapping turn-taking windows.

    Candidates start at segment boundaries and span [min_len, max_len];
    each must contain at least one speaker change. Ranking prefers more
    changes, then more balanced speaker time (smaller max share), then
    earlier start. Winning boundaries are snapped outward to the midpoint
    of a nearby pause when that keeps the window legal.
    """
    if duration_s < min_len:
        raise MetricError(
            f"episode too short for dialogue windows ({duration_s:.1f} s < {min_len} s)"
        )
    segments = sorted(diarization, key=lambda s: (s.start_s, s.end_s))
    speakers = {s.speaker_id for s in segments}
    if len(speakers) < 2:
        raise MetricError(f"turn-taking windows need >= 2 speakers, got {len(speakers)}")

    starts = sorted({s.start_s for s in segments if s.start_s + min_len <= duration_s})
    lengths = [min_len, (min_len + max_len) / 2.0, max_len]
    candidates: list[tuple[int, float, float, float]] = []
    seen: set[tuple[float, float]] = set()
    for start in starts:
        for length in lengths:
            end = min(start + length, duration_s)
            if end - start < min_len:
                continue
            key = (round(start, 6), round(end, 6))
            if key in seen:
                continue
            seen.add(key)
            changes, max_share = _window_stats(segments, start, end)
            if changes >= 1:
                candidates.append((changes, max_share, start, end))
    if not candidates:
        raise MetricError("no window of the requested length contains a speaker change")

    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    gaps = _gaps(segments)
    chosen: list[StimulusSpec] = []
    for changes, max_share, start, end in candidates:
        if len(chosen) >= count:
            break
        if any(start < c.end_s and end > c.start_s for c in chosen):
            continue
        snapped_start, snapped_end = start, end
        s = _snap(start, gaps)
        if s is not None and s < start:
            snapped_start = max(s, 0.0)
        e = _snap(end, gaps)
        if e is not None and e > end:
            snapped_end = min(e, duration_s)
        if (
            snapped_end - snapped_start > max_len
            or any(snapped_start < c.end_s and snapped_end > c.start_s for c in chosen)
        ):
            snapped_start, snapped_end = start, end  # snap would break the rules
        chosen.append(
            StimulusSpec(
                episode_id=episode_id,
                kind="dialogue_segment",
                start_s=snapped_start,
                end_s=snapped_end,
                n_speaker_changes=changes,
                max_speaker_share=max_share,
            )
        )
    chosen.sort(key=lambda c: c.start_s)
    return chosen


def plan_fml_windows(duration_s: float) -> list[tuple[float, float]]:
    """Window plan for the first/middle/final-minute concatenation.

    T >= 180 s: [0, 60), [T/2 - 30, T/2 + 30), [T - 60, T) — always
    disjoint in this regime. Shorter episodes degrade to the maximal set
    of disjoint minutes: first + final for 120 <= T < 180, first only for
    60 <= T < 120. Below one minute there is nothing to extract.
    """
    if duration_s < MINUTE_S:
        raise MetricError(
            f"episode too short for minute extraction ({duration_s:.1f} s < {MINUTE_S} s)"
        )
    if duration_s >= FML_MIN_TOTAL_S:
        mid = duration_s / 2.0
        return [
            (0.0, MINUTE_S),
            (mid - MINUTE_S / 2.0, mid + MINUTE_S / 2.0),
            (duration_s - MINUTE_S, duration_s),
        ]
    if duration_s >= 2 * MINUTE_S:
        return [(0.0, MINUTE_S), (duration_s - MINUTE_S, duration_s)]
    return [(0.0, MINUTE_S)]


def make_separator(rate: int, channels: int = 1) -> AudioBuffer:
    """Pad + beep + pad joint placed between extracted minutes (1.0 s total)."""
    pad = silence(BEEP_PAD_S, rate, channels)
    beep = synth_beep(rate=rate, channels=channels)
    return concat([pad, beep, pad])


def extract_fml_minutes(buffer: AudioBuffer, beep: AudioBuffer | None = None) -> AudioBuffer:
    """Concatenate the planned minutes, separated by pad+beep+pad joints.

    For T >= 180 s the output duration is exactly 3*60 + 2*(separator)
    seconds; degraded plans use proportionally fewer separators.
    """
    windows = plan_fml_windows(buffer.duration_s)
    if beep is None:
        separator = make_separator(buffer.sample_rate, buffer.channels)
    else:
        if beep.sample_rate != buffer.sample_rate or beep.channels != buffer.channels:
            raise MetricError("separator beep must match the episode's rate and channels")
        pad = silence(BEEP_PAD_S, buffer.sample_rate, buffer.channels)
        separator = concat([pad, beep, pad])
    parts: list[AudioBuffer] = []
    for i, (a, b) in enumerate(windows):
        if i:
            parts.append(separator)
        parts.append(slice_seconds(buffer, a, b))
    return concat(parts)


def dump_plan(specs: list[StimulusSpec]) -> str:
    """Stimulus plan as JSON, for dry-run inspection before rendering."""
    return json.dumps(
        [
            {
                "episode_id": s.episode_id,
                "kind": s.kind,
                "start_s": round(s.start_s, 6),
                "end_s": round(s.end_s, 6),
                "duration_s": round(s.duration_s, 6),
                "n_speaker_changes": s.n_speaker_changes,
                "max_speaker_share": round(s.max_speaker_share, 6),
            }
            for s in specs
        ],
        indent=2,
    )
