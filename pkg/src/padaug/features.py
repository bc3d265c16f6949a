"""Log-Mel filterbank features and the binary feature dump format.

Pipeline per frame: pre-emphasis (first sample of the utterance kept as
is), Hamming window, magnitude-squared FFT, triangular Mel filterbank on
the HTK mel scale spanning 0 to Nyquist, then a natural log with the
energy floored at log_floor. The floor is a max(), not an addend, so
scaling a waveform by c shifts every above-floor output by exactly
2*ln(c).
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import Waveform
from .errors import CorruptHeaderError, InvalidConfigError, TooShortError
from .seeding import Rng, randint

FEATURE_MAGIC = b"FBK1"


@dataclass(frozen=True)
class FbankConfig:
    n_mels: int = 80
    win_ms: float = 25.0
    hop_ms: float = 10.0
    preemphasis: float = 0.97
    log_floor: float = 1e-10
    dither: float = 0.0  # stddev of optional pre-FFT noise, 0 = off

    def __post_init__(self):
        if self.n_mels < 1:
            raise InvalidConfigError(f"n_mels must be >= 1, got {self.n_mels}")
        if not 0.0 <= self.preemphasis < 1.0:
            raise InvalidConfigError(f"preemphasis must be in [0, 1), got {self.preemphasis}")
        if self.log_floor <= 0.0:
            raise InvalidConfigError(f"log_floor must be positive, got {self.log_floor}")
        if self.win_ms <= 0 or self.hop_ms <= 0:
            raise InvalidConfigError("window and hop must be positive")

    def win_samples(self, sr: int) -> int:
        return round(self.win_ms * sr / 1000.0)

    def hop_samples(self, sr: int) -> int:
        return round(self.hop_ms * sr / 1000.0)

    def fft_size(self, sr: int) -> int:
        n = 1
        while n < self.win_samples(sr):
            n *= 2
        return n


@dataclass
class FeatureMatrix:
    """frames x dims array of finite reals."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise InvalidConfigError(f"feature matrix must be 2-D, got shape {self.values.shape}")

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sr: int) -> np.ndarray:
    """Triangular filters, n_mels x (n_fft//2 + 1), HTK scale 0..Nyquist."""
    n_bins = n_fft // 2 + 1
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sr / 2.0), n_mels + 2))
    bin_hz = np.arange(n_bins) * sr / n_fft
    fb = np.zeros((n_mels, n_bins))
    for i in range(n_mels):
        lo, center, hi = edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]
        rising = (bin_hz - lo) / (center - lo)
        falling = (hi - bin_hz) / (hi - center)
        fb[i] = np.maximum(0.0, np.minimum(rising, falling))
    return fb


def mel_center_frequencies(n_mels: int, sr: int) -> np.ndarray:
    """Center frequency in Hz of each triangular filter."""
    return mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sr / 2.0), n_mels + 2))[1:-1]


def frame_count(num_samples: int, win: int, hop: int) -> int:
    return 1 + (num_samples - win) // hop


def fbank(w: Waveform, cfg: FbankConfig = FbankConfig(), rng: Rng | None = None) -> FeatureMatrix:
    """Log-Mel features; frames = 1 + floor((len - win) / hop)."""
    sr = w.sample_rate_hz
    win = cfg.win_samples(sr)
    hop = cfg.hop_samples(sr)
    if len(w) < win:
        raise TooShortError(f"need at least {win} samples, got {len(w)}")
    x = w.samples
    if cfg.dither > 0.0:
        if rng is None:
            raise InvalidConfigError("dither requires an rng")
        x = x + cfg.dither * rng.standard_normal(len(x))
    # Pre-emphasis over the whole signal; frames then share boundary context.
    pre = np.empty_like(x)
    pre[0] = x[0]
    pre[1:] = x[1:] - cfg.preemphasis * x[:-1]

    nf = frame_count(len(x), win, hop)
    idx = np.arange(win)[None, :] + hop * np.arange(nf)[:, None]
    frames = pre[idx] * np.hamming(win)

    n_fft = cfg.fft_size(sr)
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    energies = power @ mel_filterbank(cfg.n_mels, n_fft, sr).T
    out = np.log(np.maximum(energies, cfg.log_floor))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite filterbank output")
    return FeatureMatrix(out)


def cmn(f: FeatureMatrix) -> FeatureMatrix:
    """Subtract the per-dimension mean over time."""
    return FeatureMatrix(f.values - f.values.mean(axis=0, keepdims=True))


def chunk_frames(f: FeatureMatrix, n: int, rng: Rng) -> FeatureMatrix:
    """Contiguous random n-frame window; wrap-pad along time if too short."""
    if n < 1:
        raise InvalidConfigError(f"chunk length must be >= 1, got {n}")
    if f.frames == 0:
        raise TooShortError("cannot chunk an empty feature matrix")
    if f.frames < n:
        return FeatureMatrix(f.values[np.arange(n) % f.frames])
    offset = randint(rng, 0, f.frames - n)
    return FeatureMatrix(f.values[offset : offset + n].copy())


# ---------------------------------------------------------------------------
# Binary dump: [magic][frames int32][dims int32][row-major float32] per entry,
# little-endian, with a sidecar TSV index "<utt_id>\t<byte offset>".


def _index_path(path) -> Path:
    return Path(str(path) + ".idx")


def write_feature_dump(path, items) -> None:
    """Write (utt_id, FeatureMatrix) pairs plus the sidecar index."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    index_lines = []
    with open(path, "wb") as f:
        for utt_id, mat in items:
            if "\t" in utt_id or "\n" in utt_id or not utt_id:
                raise InvalidConfigError(f"bad utt_id for dump: {utt_id!r}")
            index_lines.append(f"{utt_id}\t{f.tell()}\n")
            f.write(FEATURE_MAGIC)
            f.write(struct.pack("<ii", mat.frames, mat.dims))
            f.write(mat.values.astype("<f4").tobytes(order="C"))
    with open(_index_path(path), "w", encoding="utf-8") as f:
        f.writelines(index_lines)


def _read_entry(f) -> FeatureMatrix:
    magic = f.read(4)
    if magic != FEATURE_MAGIC:
        raise CorruptHeaderError(f"bad feature magic {magic!r}")
    frames, dims = struct.unpack("<ii", f.read(8))
    if frames < 0 or dims < 1:
        raise CorruptHeaderError(f"bad feature shape ({frames}, {dims})")
    raw = f.read(4 * frames * dims)
    if len(raw) != 4 * frames * dims:
        raise CorruptHeaderError("truncated feature entry")
    return FeatureMatrix(np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(frames, dims))


def read_feature_index(path):
    """Load the sidecar index as an ordered utt_id -> offset dict."""
    index = {}
    with open(_index_path(path), "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            utt_id, off = line.split("\t")
            index[utt_id] = int(off)
    return index


def read_feature_dump(path):
    """Load every entry as an ordered utt_id -> FeatureMatrix dict."""
    index = read_feature_index(path)
    out = {}
    with open(path, "rb") as f:
        for utt_id, off in index.items():
            f.seek(off)
            out[utt_id] = _read_entry(f)
    return out
