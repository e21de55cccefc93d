"""Mono waveform container, 16-bit PCM WAV I/O, and circular time-shifting.

All operations are pure: they return new arrays and never mutate their
inputs, so values can be shared freely across workers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Waveform",
    "LagSchedule",
    "WavFormatError",
    "UnsupportedWavError",
    "read_wav",
    "write_wav",
    "shift_circular",
    "mix_clipped",
]


class WavFormatError(ValueError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedWavError(ValueError):
    """The file is valid WAV but not 16-bit mono PCM."""


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono audio: normalized float samples plus a sample rate in Hz.

    Samples are stored as a float64 array. Amplitudes produced by the
    clipping/encoding operations in this module stay within [-1, +1].
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class LagSchedule:
    """Ordered set of time offsets (seconds) at which a perturbation is tried.

    Always contains lag 0 exactly once and is symmetric about it: the
    schedule models playback that may start early or late by the same
    amount. Lags are strictly increasing and bounded by ``t_max``.
    """

    lags: tuple[float, ...]
    t_max: float

    def __post_init__(self):
        lags = tuple(float(v) for v in self.lags)
        if self.t_max <= 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if any(abs(v) > self.t_max for v in lags):
            raise ValueError("lags must lie within [-t_max, +t_max]")
        if lags.count(0.0) != 1:
            raise ValueError("schedule must contain lag 0.0 exactly once")
        if any(a >= b for a, b in zip(lags, lags[1:])):
            raise ValueError("lags must be strictly increasing with no duplicates")
        for v in lags:
            if v != 0.0 and -v not in lags:
                raise ValueError(f"schedule not symmetric: {v} present but {-v} missing")
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "t_max", float(self.t_max))

    def __len__(self):
        return len(self.lags)

    def __iter__(self):
        return iter(self.lags)


_WAVE_FORMAT_PCM = 1


def read_wav(path) -> Waveform:
    """Read a 16-bit mono PCM WAV file.

    Int16 samples are mapped to [-1, +1] by dividing by 32768. Raises
    ``WavFormatError`` for a malformed container and ``UnsupportedWavError``
    for valid WAV data that is not 16-bit mono PCM.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise WavFormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise WavFormatError(f"{path}: truncated data chunk")
            payload = body
        # chunks are word-aligned
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or payload is None:
        raise WavFormatError(f"{path}: missing fmt or data chunk")

    format_tag, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if format_tag != _WAVE_FORMAT_PCM:
        raise UnsupportedWavError(f"{path}: format tag {format_tag}, only PCM (1) supported")
    if channels != 1:
        raise UnsupportedWavError(f"{path}: {channels} channels, only mono supported")
    if bits != 16:
        raise UnsupportedWavError(f"{path}: {bits} bits per sample, only 16 supported")

    raw = np.frombuffer(payload[: len(payload) - (len(payload) % 2)], dtype="<i2")
    return Waveform(raw.astype(np.float64) / 32768.0, sample_rate)


def write_wav(path, w: Waveform) -> None:
    """Write ``w`` as a 16-bit mono PCM WAV file.

    All samples must lie in [-1, +1]. Amplitudes are quantized as
    round(a * 32768) clamped to the int16 range, which keeps the
    round-trip error of every sample within 1/32768.
    """
    if np.any(np.abs(w.samples) > 1.0):
        raise ValueError("samples exceed [-1, +1]; clip before writing")
    quantized = np.clip(np.rint(w.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = quantized.tobytes()

    header = b"".join(
        [
            b"RIFF",
            struct.pack("<I", 36 + len(payload)),
            b"WAVE",
            b"fmt ",
            struct.pack(
                "<IHHIIHH",
                16,
                _WAVE_FORMAT_PCM,
                1,
                w.sample_rate,
                w.sample_rate * 2,
                2,
                16,
            ),
            b"data",
            struct.pack("<I", len(payload)),
        ]
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def shift_circular(p: Waveform, lag: float) -> Waveform:
    """Rotate a perturbation in time by ``lag`` seconds, wrapping around.

    A positive lag delays the perturbation: output sample k equals input
    sample (k - round(lag * rate)) mod N. Wrap-around models a noise that
    is played on repeat, where any offset is equivalent to one inside a
    single period. The lag is quantized to the nearest whole sample.
    """
    if abs(lag) > p.duration:
        raise ValueError(f"|lag| {abs(lag):g} s exceeds waveform duration {p.duration:g} s")
    shift = int(np.rint(lag * p.sample_rate))
    return Waveform(np.roll(p.samples, shift), p.sample_rate)


def mix_clipped(s: Waveform, p: Waveform) -> Waveform:
    """Sum two equal-shape waveforms, hard-clipping the result to [-1, +1]."""
    if len(s) != len(p):
        raise ValueError(f"length mismatch: {len(s)} vs {len(p)}")
    if s.sample_rate != p.sample_rate:
        raise ValueError(f"sample rate mismatch: {s.sample_rate} vs {p.sample_rate}")
    return Waveform(np.clip(s.samples + p.samples, -1.0, 1.0), s.sample_rate)
