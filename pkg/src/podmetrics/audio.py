"""WAV decode/encode and PCM editing primitives.

All downstream metrics operate on :class:`AudioBuffer`: float64 samples in
[-1, 1], shaped (channels, frames). Only RIFF/WAVE containers are handled
(16/24/32-bit integer PCM and 32-bit float, mono or stereo); convert other
containers externally. Files are decoded fully into memory, so multi-hour
inputs are bounded by available RAM.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from .errors import AudioError

_SUPPORTED_FORMATS = {(1, 16), (1, 24), (1, 32), (3, 32)}  # (format tag, bits)
_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_FLOAT = 3
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE

FADE_S = 0.010  # raised-cosine fade applied to synthesized beeps


@dataclass(frozen=True)
class AudioBuffer:
    """Immutable PCM audio: ``samples[channel][frame]`` as float64."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise AudioError("samples must be a 1-D or 2-D array")
        if arr.shape[0] < 1:
            raise AudioError("need at least one channel")
        if arr.shape[1] == 0:
            raise AudioError("zero-length audio")
        if int(self.sample_rate) <= 0:
            raise AudioError("sample_rate must be positive")
        if not np.all(np.isfinite(arr)):
            raise AudioError("samples contain non-finite values")
        view = arr.view()
        view.flags.writeable = False
        object.__setattr__(self, "samples", view)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_frames(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.samples.shape[1] / self.sample_rate


def _read_chunks(data: bytes, path: Path) -> dict[bytes, bytes]:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioError(f"{path}: not a RIFF/WAVE file")
    chunks: dict[bytes, bytes] = {}
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise AudioError(
                f"{path}: truncated {cid.decode('ascii', 'replace').strip()} chunk "
                f"(expected {size} bytes, found {len(body)})"
            )
        chunks.setdefault(cid, body)
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    return chunks


def _parse_fmt(fmt: bytes, path: Path) -> tuple[int, int, int, int, int]:
    if len(fmt) < 16:
        raise AudioError(f"{path}: malformed fmt chunk")
    tag, channels, rate, _byte_rate, block_align, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if tag == _WAVE_FORMAT_EXTENSIBLE:
        if len(fmt) < 26:
            raise AudioError(f"{path}: malformed extensible fmt chunk")
        (tag,) = struct.unpack_from("<H", fmt, 24)  # first bytes of the SubFormat GUID
    return tag, channels, rate, block_align, bits


def probe_wav(path: str | Path) -> dict:
    """Read only the header; returns rate/channels/bits/frames without decoding."""
    path = Path(path)
    data = path.read_bytes()
    chunks = _read_chunks(data, path)
    if b"fmt " not in chunks:
        raise AudioError(f"{path}: missing fmt chunk")
    if b"data" not in chunks:
        raise AudioError(f"{path}: missing data chunk")
    tag, channels, rate, block_align, bits = _parse_fmt(chunks[b"fmt "], path)
    if (tag, bits) not in _SUPPORTED_FORMATS:
        raise AudioError(f"{path}: unsupported codec (format tag {tag}, {bits}-bit)")
    if channels not in (1, 2):
        raise AudioError(f"{path}: {channels} channels unsupported (mono/stereo only)")
    if block_align != channels * bits // 8:
        raise AudioError(f"{path}: inconsistent block alignment")
    n_bytes = len(chunks[b"data"])
    if n_bytes == 0:
        raise AudioError(f"{path}: zero-length audio")
    if n_bytes % block_align != 0:
        raise AudioError(f"{path}: truncated file (partial final frame)")
    return {
        "sample_rate": rate,
        "channels": channels,
        "bits": bits,
        "format_tag": tag,
        "frames": n_bytes // block_align,
    }


def decode_wav(path: str | Path) -> AudioBuffer:
    """Decode a WAV file to float64 in [-1, 1].

    Integer PCM is normalized by 2^(bits-1); 32-bit float passes through.
    """
    path = Path(path)
    data = path.read_bytes()
    chunks = _read_chunks(data, path)
    if b"fmt " not in chunks:
        raise AudioError(f"{path}: missing fmt chunk")
    if b"data" not in chunks:
        raise AudioError(f"{path}: missing data chunk")
    tag, channels, rate, block_align, bits = _parse_fmt(chunks[b"fmt "], path)
    if (tag, bits) not in _SUPPORTED_FORMATS:
        raise AudioError(f"{path}: unsupported codec (format tag {tag}, {bits}-bit)")
    if channels not in (1, 2):
        raise AudioError(f"{path}: {channels} channels unsupported (mono/stereo only)")
    raw = chunks[b"data"]
    if len(raw) == 0:
        raise AudioError(f"{path}: zero-length audio")
    if block_align != channels * bits // 8 or len(raw) % block_align != 0:
        raise AudioError(f"{path}: truncated file (partial final frame)")

    if tag == _WAVE_FORMAT_FLOAT:
        flat = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    elif bits == 16:
        flat = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 2**15
    elif bits == 32:
        flat = np.frombuffer(raw, dtype="<i4").astype(np.float64) / 2**31
    else:  # 24-bit packed little-endian
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        val = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        val[val >= 1 << 23] -= 1 << 24
        flat = val.astype(np.float64) / 2**23

    samples = flat.reshape(-1, channels).T
    return AudioBuffer(samples, rate)


def encode_wav(buffer: AudioBuffer, path: str | Path, sample_format: str = "int16") -> None:
    """Write a WAV file; ``sample_format`` is "int16" or "float32".

    int16 uses a 2^15 scale with clipping, so decode -> encode -> decode is
    sample-exact for material that originated as 16-bit PCM.
    """
    path = Path(path)
    interleaved = buffer.samples.T.reshape(-1)
    if sample_format == "int16":
        tag, bits = _WAVE_FORMAT_PCM, 16
        scaled = np.clip(np.rint(interleaved * 2**15), -(2**15), 2**15 - 1)
        payload = scaled.astype("<i2").tobytes()
    elif sample_format == "float32":
        tag, bits = _WAVE_FORMAT_FLOAT, 32
        payload = interleaved.astype("<f4").tobytes()
    else:
        raise AudioError(f"unsupported sample_format {sample_format!r}")

    channels = buffer.channels
    block_align = channels * bits // 8
    byte_rate = buffer.sample_rate * block_align
    fmt = struct.pack("<HHIIHH", tag, channels, buffer.sample_rate, byte_rate, block_align, bits)
    with open(path, "wb") as f:
        f.write(b"RIFF")
        f.write(struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(payload)))
        f.write(b"WAVE")
        f.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
        f.write(b"data" + struct.pack("<I", len(payload)) + payload)
        if len(payload) & 1:
            f.write(b"\x00")


def resample(buffer: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited polyphase resampling (windowed-sinc FIR).

    Identity rates return the input buffer unchanged. Duration is preserved
    within one sample; tones below 0.4x the lower rate keep their amplitude
    within a small fraction of a dB.
    """
    target_rate = int(target_rate)
    if target_rate <= 0:
        raise AudioError("target_rate must be positive")
    if target_rate == buffer.sample_rate:
        return buffer
    g = math.gcd(target_rate, buffer.sample_rate)
    up, down = target_rate // g, buffer.sample_rate // g
    out = resample_poly(buffer.samples, up, down, axis=1)
    return AudioBuffer(out, target_rate)


def synth_beep(
    duration_s: float = 0.5,
    freq_hz: float = 1000.0,
    level_dbfs: float = -20.0,
    rate: int = 48000,
    channels: int = 1,
) -> AudioBuffer:
    """Sine burst with 10 ms raised-cosine fades, peak at 10^(level/20)."""
    if duration_s <= 0:
        raise AudioError("beep duration must be positive")
    if level_dbfs > 0:
        raise AudioError("beep level must be <= 0 dBFS")
    if not 0 < freq_hz < rate / 2:
        raise AudioError(f"beep frequency {freq_hz} Hz outside (0, rate/2)")
    n = int(round(duration_s * rate))
    peak = 10.0 ** (level_dbfs / 20.0)
    t = np.arange(n) / rate
    x = peak * np.sin(2.0 * np.pi * freq_hz * t)
    n_fade = min(int(round(FADE_S * rate)), n // 2)
    if n_fade > 0:
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(n_fade) / n_fade))
        x[:n_fade] *= ramp
        x[-n_fade:] *= ramp[::-1]
    return AudioBuffer(np.tile(x, (channels, 1)), rate)


def silence(duration_s: float, rate: int, channels: int = 1) -> AudioBuffer:
    if duration_s <= 0:
        raise AudioError("silence duration must be positive")
    return AudioBuffer(np.zeros((channels, int(round(duration_s * rate)))), rate)


def slice_seconds(buffer: AudioBuffer, start_s: float, end_s: float) -> AudioBuffer:
    """Sample-accurate slice; boundaries floor to sample indices."""
    if start_s < 0 or end_s > buffer.duration_s or start_s >= end_s:
        raise AudioError(
            f"slice [{start_s}, {end_s}) outside audio of {buffer.duration_s:.3f} s"
        )
    i0 = int(math.floor(start_s * buffer.sample_rate))
    i1 = min(int(math.floor(end_s * buffer.sample_rate)), buffer.n_frames)
    if i1 <= i0:
        raise AudioError("slice shorter than one sample")
    return AudioBuffer(buffer.samples[:, i0:i1], buffer.sample_rate)


def concat(buffers: list[AudioBuffer]) -> AudioBuffer:
    """Join buffers sharing rate and channel count; length is the sum."""
    if not buffers:
        raise AudioError("concat needs at least one buffer")
    rate = buffers[0].sample_rate
    channels = buffers[0].channels
    for b in buffers[1:]:
        if b.sample_rate != rate:
            raise AudioError(f"concat rate mismatch: {b.sample_rate} vs {rate}")
        if b.channels != channels:
            raise AudioError(f"concat channel mismatch: {b.channels} vs {channels}")
    return AudioBuffer(np.hstack([b.samples for b in buffers]), rate)


def apply_gain(buffer: AudioBuffer, gain_db: float) -> AudioBuffer:
    return AudioBuffer(buffer.samples * 10.0 ** (gain_db / 20.0), buffer.sample_rate)
