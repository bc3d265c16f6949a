"""Reading and writing 16-bit mono PCM WAV files.

Anything that is not plain 16-bit mono PCM is rejected outright rather
than converted; augmentation semantics stay unambiguous that way. Samples
are exchanged as float64 in [-1, 1] (int16 value / 32768).
"""

import struct
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptHeaderError, UnsupportedFormatError

INT16_SCALE = 32768.0


@dataclass
class Waveform:
    """Mono sample sequence plus its sample rate."""

    samples: np.ndarray
    sample_rate_hz: int = 16000

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("waveform samples must be one-dimensional")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample rate must be positive")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


def read_wav(path) -> Waveform:
    """Read a 16-bit mono PCM WAV file.

    Raises FileNotFoundError for missing files, CorruptHeaderError for a
    broken RIFF container and UnsupportedFormatError for any codec other
    than 16-bit mono PCM.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeaderError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    off = 12
    while off + 8 <= len(data):
        chunk_id = data[off : off + 4]
        (size,) = struct.unpack_from("<I", data, off + 4)
        body_start = off + 8
        if body_start + size > len(data):
            raise CorruptHeaderError(f"{path}: truncated chunk {chunk_id!r}")
        if chunk_id == b"fmt ":
            if size < 16:
                raise CorruptHeaderError(f"{path}: fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            payload = data[body_start : body_start + size]
        off = body_start + size + (size & 1)

    if fmt is None or payload is None:
        raise CorruptHeaderError(f"{path}: missing fmt or data chunk")

    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise UnsupportedFormatError(f"{path}: compressed or non-PCM format {audio_format}")
    if channels != 1:
        raise UnsupportedFormatError(f"{path}: expected mono, got {channels} channels")
    if bits != 16:
        raise UnsupportedFormatError(f"{path}: expected 16-bit samples, got {bits}")
    if sample_rate <= 0:
        raise CorruptHeaderError(f"{path}: invalid sample rate {sample_rate}")
    if len(payload) % 2 != 0:
        raise CorruptHeaderError(f"{path}: odd data-chunk size for 16-bit samples")

    samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / INT16_SCALE
    return Waveform(samples, sample_rate)


def write_wav(w: Waveform, path) -> None:
    """Write a waveform as 16-bit mono PCM; out-of-range samples are clamped."""
    q = np.clip(np.rint(np.clip(w.samples, -1.0, 1.0) * INT16_SCALE), -32768, 32767)
    with wave.open(str(path), "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(w.sample_rate_hz)
        f.writeframes(q.astype("<i2").tobytes())
