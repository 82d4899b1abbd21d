"""WAV codec, resampling, synthesis, and editing primitives."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from podmetrics.audio import (
    AudioBuffer,
    apply_gain,
    concat,
    decode_wav,
    encode_wav,
    probe_wav,
    resample,
    silence,
    slice_seconds,
    synth_beep,
)
from podmetrics.errors import AudioError

from .conftest import sine


class TestAudioBuffer:
    def test_mono_1d_promoted_to_2d(self):
        buf = AudioBuffer(np.zeros(100) + 0.5, 48000)
        assert buf.channels == 1
        assert buf.n_frames == 100

    def test_properties(self):
        buf = AudioBuffer(np.zeros((2, 48000)), 48000)
        assert buf.channels == 2
        assert buf.duration_s == 1.0

    def test_samples_read_only(self):
        buf = AudioBuffer(np.zeros((1, 10)), 48000)
        with pytest.raises(ValueError):
            buf.samples[0, 0] = 1.0

    def test_rejects_zero_length(self):
        with pytest.raises(AudioError, match="zero-length"):
            AudioBuffer(np.zeros((1, 0)), 48000)

    def test_rejects_nonfinite(self):
        with pytest.raises(AudioError, match="non-finite"):
            AudioBuffer(np.array([[0.0, np.nan]]), 48000)

    def test_rejects_bad_rate(self):
        with pytest.raises(AudioError, match="sample_rate"):
            AudioBuffer(np.zeros((1, 10)), 0)


class TestWavCodec:
    def test_16bit_mono_shape(self, tmp_path):
        buf = sine(440.0, 0.01, rate=48000)  # 480 samples
        path = tmp_path / "t.wav"
        encode_wav(buf, path, sample_format="int16")
        out = decode_wav(path)
        assert out.n_frames == 480
        assert out.sample_rate == 48000
        assert out.channels == 1

    def test_16bit_round_trip_sample_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        ints = rng.integers(-(2**15), 2**15, size=(2, 1000))
        buf = AudioBuffer(ints / 2**15, 44100)
        path = tmp_path / "t.wav"
        encode_wav(buf, path, sample_format="int16")
        once = decode_wav(path)
        encode_wav(once, path, sample_format="int16")
        twice = decode_wav(path)
        np.testing.assert_array_equal(once.samples, twice.samples)
        np.testing.assert_array_equal(once.samples, buf.samples)

    def test_int16_min_is_exactly_minus_one(self, tmp_path):
        path = tmp_path / "m.wav"
        payload = struct.pack("<4h", -32768, 0, 32767, -32768)
        _write_raw_wav(path, payload, channels=1, rate=8000, bits=16, tag=1)
        out = decode_wav(path)
        assert out.samples[0, 0] == -1.0
        assert out.samples[0, 3] == -1.0
        assert out.samples[0, 2] == 32767 / 32768

    def test_24bit_hand_crafted_values(self, tmp_path):
        # -2^23, 0, 2^23-1, and an arbitrary mid value, packed by hand.
        vals = [-(2**23), 0, 2**23 - 1, 0x123456]
        raw = b"".join(v.to_bytes(3, "little", signed=True) for v in vals)
        path = tmp_path / "t24.wav"
        _write_raw_wav(path, raw, channels=1, rate=48000, bits=24, tag=1)
        out = decode_wav(path)
        expect = np.array(vals, dtype=np.float64) / 2**23
        np.testing.assert_allclose(out.samples[0], expect, atol=0)

    def test_24bit_stereo_fixture_round_trip_bounds(self, tmp_path):
        rng = np.random.default_rng(3)
        vals = rng.integers(-(2**23), 2**23, size=40)
        raw = b"".join(int(v).to_bytes(3, "little", signed=True) for v in vals)
        path = tmp_path / "s24.wav"
        _write_raw_wav(path, raw, channels=2, rate=48000, bits=24, tag=1)
        out = decode_wav(path)
        assert out.channels == 2
        assert out.samples.shape == (2, 20)
        assert np.max(np.abs(out.samples)) <= 1.0

    def test_float32_passthrough(self, tmp_path):
        x = np.array([[0.25, -0.5, 1.0, -1.0]], dtype=np.float64)
        path = tmp_path / "f.wav"
        encode_wav(AudioBuffer(x, 48000), path, sample_format="float32")
        out = decode_wav(path)
        np.testing.assert_array_equal(out.samples, x)

    def test_32bit_int(self, tmp_path):
        payload = struct.pack("<3i", -(2**31), 0, 2**31 - 1)
        path = tmp_path / "i32.wav"
        _write_raw_wav(path, payload, channels=1, rate=48000, bits=32, tag=1)
        out = decode_wav(path)
        assert out.samples[0, 0] == -1.0
        assert out.samples[0, 1] == 0.0

    def test_not_riff_rejected(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"OggS" + b"\x00" * 100)
        with pytest.raises(AudioError, match="not a RIFF/WAVE"):
            decode_wav(path)

    def test_unsupported_codec_rejected(self, tmp_path):
        path = tmp_path / "alaw.wav"
        _write_raw_wav(path, b"\x00" * 8, channels=1, rate=8000, bits=8, tag=6)
        with pytest.raises(AudioError, match="unsupported codec"):
            decode_wav(path)

    def test_truncated_data_rejected(self, tmp_path):
        path = tmp_path / "trunc.wav"
        buf = sine(440.0, 0.01)
        encode_wav(buf, path, sample_format="int16")
        data = path.read_bytes()
        path.write_bytes(data[:-7])  # cut into the final frames
        with pytest.raises(AudioError, match="truncated"):
            decode_wav(path)

    def test_zero_length_rejected(self, tmp_path):
        path = tmp_path / "empty.wav"
        _write_raw_wav(path, b"", channels=1, rate=48000, bits=16, tag=1)
        with pytest.raises(AudioError, match="zero-length"):
            decode_wav(path)

    def test_probe_matches_decode(self, tmp_path):
        buf = sine(440.0, 0.25, rate=44100, channels=2)
        path = tmp_path / "p.wav"
        encode_wav(buf, path, sample_format="int16")
        info = probe_wav(path)
        assert info["sample_rate"] == 44100
        assert info["channels"] == 2
        assert info["bits"] == 16
        assert info["frames"] == buf.n_frames


class TestResample:
    def test_identity_returns_same_buffer(self):
        buf = sine(440.0, 0.5)
        assert resample(buf, 48000) is buf

    def test_length_44100_to_48000(self):
        buf = sine(440.0, 10.0, rate=44100)
        out = resample(buf, 48000)
        assert abs(out.n_frames - 480000) <= 1
        assert out.sample_rate == 48000

    def test_tone_rms_preserved(self):
        buf = sine(1000.0, 2.0, rate=44100, amplitude=0.5)
        out = resample(buf, 48000)
        rms_in = np.sqrt(np.mean(buf.samples**2))
        rms_out = np.sqrt(np.mean(out.samples**2))
        change_db = 20 * np.log10(rms_out / rms_in)
        assert abs(change_db) < 0.1

    def test_duration_preserved_within_one_sample(self):
        buf = sine(440.0, 3.333, rate=32000)
        out = resample(buf, 48000)
        assert abs(out.duration_s - buf.duration_s) <= 1.0 / 32000


class TestSynthBeep:
    def test_default_peak(self):
        beep = synth_beep()
        assert abs(np.max(np.abs(beep.samples)) - 0.1) < 0.002  # -20 dBFS

    def test_fade_starts_near_zero(self):
        beep = synth_beep()
        assert abs(beep.samples[0, 0]) < 0.001
        assert abs(beep.samples[0, -1]) < 0.001

    def test_duration(self):
        beep = synth_beep(duration_s=0.5, rate=48000)
        assert beep.n_frames == 24000

    def test_rejects_zero_duration(self):
        with pytest.raises(AudioError, match="duration"):
            synth_beep(duration_s=0.0)

    def test_rejects_nyquist_violation(self):
        with pytest.raises(AudioError, match="frequency"):
            synth_beep(freq_hz=24000.0, rate=48000)

    def test_rejects_positive_level(self):
        with pytest.raises(AudioError, match="level"):
            synth_beep(level_dbfs=1.0)


class TestSliceConcat:
    def test_full_slice_is_identity(self):
        buf = sine(440.0, 10.0)
        out = slice_seconds(buf, 0.0, 10.0)
        np.testing.assert_array_equal(out.samples, buf.samples)

    def test_slice_beyond_duration_rejected(self):
        buf = sine(440.0, 1.0)
        with pytest.raises(AudioError, match="outside"):
            slice_seconds(buf, 0.5, 1.5)

    def test_slice_is_sample_accurate(self):
        buf = sine(440.0, 2.0, rate=48000)
        out = slice_seconds(buf, 0.25, 1.75)
        np.testing.assert_array_equal(out.samples, buf.samples[:, 12000:84000])

    def test_concat_length_is_sum(self):
        minutes = [sine(440.0, 60.0) for _ in range(3)]
        beeps = [synth_beep() for _ in range(2)]
        out = concat([minutes[0], beeps[0], minutes[1], beeps[1], minutes[2]])
        assert out.duration_s == 181.0

    def test_concat_associative(self):
        a, b, c = sine(100.0, 0.1), sine(200.0, 0.2), sine(300.0, 0.3)
        left = concat([concat([a, b]), c])
        right = concat([a, concat([b, c])])
        np.testing.assert_array_equal(left.samples, right.samples)

    def test_concat_rate_mismatch_rejected(self):
        with pytest.raises(AudioError, match="rate mismatch"):
            concat([sine(440.0, 0.1, rate=48000), sine(440.0, 0.1, rate=44100)])

    def test_concat_channel_mismatch_rejected(self):
        with pytest.raises(AudioError, match="channel mismatch"):
            concat([sine(440.0, 0.1, channels=1), sine(440.0, 0.1, channels=2)])


class TestHelpers:
    def test_silence_is_zero(self):
        s = silence(0.5, 48000, channels=2)
        assert s.n_frames == 24000
        assert np.all(s.samples == 0.0)

    def test_apply_gain(self):
        buf = sine(440.0, 0.1, amplitude=0.5)
        out = apply_gain(buf, -6.0)
        expect = 0.5 * 10 ** (-6 / 20)
        assert abs(np.max(np.abs(out.samples)) - expect) < 1e-9


def _write_raw_wav(path, payload: bytes, channels: int, rate: int, bits: int, tag: int):
    """Minimal RIFF writer for hand-crafted codec fixtures."""
    block_align = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, rate, rate * block_align, block_align, bits)
    with open(path, "wb") as f:
        f.write(b"RIFF")
        f.write(struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(payload)))
        f.write(b"WAVE")
        f.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
        f.write(b"data" + struct.pack("<I", len(payload)) + payload)
        if len(payload) & 1:
            f.write(b"\x00")
