"""Evaluation test-set construction.

Variants: the originals untouched, random 3 s chunks, chunks padded with
fixed 1 s noise segments (head+tail, optionally +mid), and a ratio sweep
where a 3 s chunk gets k in [0, 8] extra seconds of padding. Padding
"silence" is white Gaussian noise at a fixed SNR (default 25 dB) so the
padded regions resemble a quiet recording floor; digital zeros are
available by passing snr_db=None.

Per-utterance randomness is derived from (seed, utt_id), never from
manifest position, so rebuilding a subset or reordering the manifest
reproduces identical files. Draw order per utterance is pinned: chunk
offset, then mid split point, then noise, so variants that share a seed
also share the underlying chunk.
"""

import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import Waveform, read_wav, write_wav
from .augment import PaddingLayout, assemble, loop_pad, random_chunk, wgn_like
from .errors import EmptyInputError, InvalidConfigError, InvalidRatioError, LengthMismatchError
from .manifest import UtteranceRecord, write_manifest
from .seeding import Rng, child_seed, make_rng, randint
from .workers import worker_map

CHUNK_SECONDS = 3.0
TEST_SNR_DB = 25.0
MAX_RATIO_SECONDS = 8

VARIANT_KINDS = ("original", "chunk3s", "chunk3s-ht", "chunk3s-hmt", "ratio")
PLACEMENTS = ("head-tail-even", "per-layout")


@dataclass(frozen=True)
class TestVariant:
    kind: str
    k_seconds: int = 0
    placement: str = "head-tail-even"

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise InvalidConfigError(f"unknown variant kind {self.kind!r}")
        if self.placement not in PLACEMENTS:
            raise InvalidConfigError(f"unknown placement {self.placement!r}")
        if self.kind == "ratio" and not 0 <= self.k_seconds <= MAX_RATIO_SECONDS:
            raise InvalidRatioError(f"k_seconds must be in [0, {MAX_RATIO_SECONDS}], got {self.k_seconds}")

    def tag(self) -> str:
        if self.kind == "ratio":
            return f"ratio{self.k_seconds}"
        return self.kind


def _noise(chunk: Waveform, n_len: int, snr_db, rng: Rng) -> Waveform:
    # snr_db=None selects digital-zero padding.
    if snr_db is None:
        return Waveform(np.zeros(n_len), chunk.sample_rate_hz)
    return wgn_like(chunk, snr_db, n_len, rng)


def build_chunk3s(w: Waveform, rng: Rng, from_start: bool = False) -> Waveform:
    """Random contiguous 3 s chunk; shorter inputs are loop-padded first."""
    if len(w) == 0:
        raise EmptyInputError("cannot chunk an empty waveform")
    t_s = round(CHUNK_SECONDS * w.sample_rate_hz)
    padded = loop_pad(w, t_s)
    if from_start:
        return Waveform(padded.samples[:t_s].copy(), w.sample_rate_hz)
    return random_chunk(padded, t_s, rng)


def pad_fixed(w3s: Waveform, head_s: float, tail_s: float, mid_s: float, snr_db, rng: Rng) -> Waveform:
    """Pad with fixed-duration noise at head/tail and optionally mid.

    Mid padding is inserted at a uniform split point strictly inside the
    speech, so it always interrupts the chunk rather than abutting the
    head or tail noise.
    """
    if min(head_s, tail_s, mid_s) < 0:
        raise InvalidConfigError("negative padding duration")
    sr = w3s.sample_rate_hz
    l_head = round(head_s * sr)
    l_mid = round(mid_s * sr)
    l_tail = round(tail_s * sr)
    t_s = len(w3s)
    if l_mid > 0:
        if t_s < 2:
            raise LengthMismatchError(f"speech of {t_s} samples has no interior for mid padding")
        p_mid = randint(rng, 1, t_s - 1)
    else:
        p_mid = 0
    layout = PaddingLayout(t_s=t_s, l_head=l_head, l_mid=l_mid, l_tail=l_tail, p_mid=p_mid, snr_db=0.0 if snr_db is None else snr_db)
    return assemble(w3s, layout, _noise(w3s, layout.l_pad, snr_db, rng))


def build_ratio(w3s: Waveform, k_seconds: int, placement: str, snr_db, rng: Rng) -> Waveform:
    """Pad a 3 s chunk with k extra seconds of noise.

    head-tail-even splits k evenly between head and tail (odd sample
    remainder goes to the tail); per-layout draws a random head/tail
    split of the same total.
    """
    if not 0 <= k_seconds <= MAX_RATIO_SECONDS:
        raise InvalidRatioError(f"k_seconds must be in [0, {MAX_RATIO_SECONDS}], got {k_seconds}")
    if placement not in PLACEMENTS:
        raise InvalidConfigError(f"unknown placement {placement!r}")
    l_pad = round(k_seconds * w3s.sample_rate_hz)
    if l_pad == 0:
        return w3s
    if placement == "head-tail-even":
        l_head = l_pad // 2
    else:
        l_head = randint(rng, 0, l_pad)
    layout = PaddingLayout(
        t_s=len(w3s), l_head=l_head, l_mid=0, l_tail=l_pad - l_head, p_mid=0, snr_db=0.0 if snr_db is None else snr_db
    )
    return assemble(w3s, layout, _noise(w3s, l_pad, snr_db, rng))


def apply_variant(w: Waveform, variant: TestVariant, rng: Rng, snr_db=TEST_SNR_DB, from_start: bool = False) -> Waveform:
    """Apply one test variant to one waveform."""
    if variant.kind == "original":
        return w
    chunk = build_chunk3s(w, rng, from_start=from_start)
    if variant.kind == "chunk3s":
        return chunk
    if variant.kind == "chunk3s-ht":
        return pad_fixed(chunk, 1.0, 1.0, 0.0, snr_db, rng)
    if variant.kind == "chunk3s-hmt":
        return pad_fixed(chunk, 1.0, 1.0, 1.0, snr_db, rng)
    return build_ratio(chunk, variant.k_seconds, variant.placement, snr_db, rng)


def build_testset(
    records,
    variant: TestVariant,
    out_dir,
    seed: int,
    snr_db=TEST_SNR_DB,
    from_start: bool = False,
):
    """Materialize a test-set variant on disk; returns the new records.

    Writes one WAV per input record plus a manifest.tsv in out_dir.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(rec: UtteranceRecord) -> UtteranceRecord:
        dst = out_dir / f"{rec.utt_id}.wav"
        try:
            if variant.kind == "original":
                shutil.copyfile(rec.wav_path, dst)
                return UtteranceRecord(rec.utt_id, rec.speaker_id, str(dst), rec.num_samples, rec.sample_rate_hz)
            rng = make_rng(child_seed(seed, rec.utt_id))
            out = apply_variant(read_wav(rec.wav_path), variant, rng, snr_db=snr_db, from_start=from_start)
            write_wav(out, dst)
            return UtteranceRecord(rec.utt_id, rec.speaker_id, str(dst), len(out), out.sample_rate_hz)
        except Exception as e:
            raise type(e)(f"utterance {rec.utt_id}: {e}") from e

    new_records = worker_map(one, records)
    write_manifest(new_records, out_dir / "manifest.tsv")
    return new_records
