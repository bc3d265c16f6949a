"""Dataset manifests: one TSV row per utterance.

Columns: utt_id, speaker_id, wav_path, num_samples, sample_rate. No
header row. wav_path is stored relative to the manifest's directory so a
dataset directory can be moved wholesale.
"""

import os
from dataclasses import dataclass
from pathlib import Path

from .errors import CorruptHeaderError, InvalidConfigError

_NUM_COLS = 5


@dataclass(frozen=True)
class UtteranceRecord:
    utt_id: str
    speaker_id: str
    wav_path: str  # absolute after reading, relative on disk
    num_samples: int
    sample_rate_hz: int


def _check_field(value: str, name: str) -> str:
    if not value:
        raise InvalidConfigError(f"empty {name} in manifest record")
    if "\t" in value or "\n" in value:
        raise InvalidConfigError(f"{name} contains a tab or newline: {value!r}")
    return value


def write_manifest(records, path) -> None:
    """Write records as TSV, paths stored relative to the manifest dir."""
    path = Path(path)
    base = path.resolve().parent
    lines = []
    seen = set()
    for r in records:
        _check_field(r.utt_id, "utt_id")
        _check_field(r.speaker_id, "speaker_id")
        if r.utt_id in seen:
            raise InvalidConfigError(f"duplicate utt_id {r.utt_id!r}")
        seen.add(r.utt_id)
        rel = os.path.relpath(Path(r.wav_path).resolve(), base)
        _check_field(rel, "wav_path")
        lines.append(f"{r.utt_id}\t{r.speaker_id}\t{rel}\t{r.num_samples}\t{r.sample_rate_hz}\n")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.writelines(lines)


def read_manifest(path):
    """Read a manifest; wav_path fields come back absolute."""
    path = Path(path)
    base = path.resolve().parent
    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != _NUM_COLS:
                raise CorruptHeaderError(f"{path}:{lineno}: expected {_NUM_COLS} columns, got {len(cols)}")
            utt_id, speaker_id, rel, n, sr = cols
            if utt_id in seen:
                raise CorruptHeaderError(f"{path}:{lineno}: duplicate utt_id {utt_id!r}")
            seen.add(utt_id)
            try:
                num_samples = int(n)
                sample_rate = int(sr)
            except ValueError as e:
                raise CorruptHeaderError(f"{path}:{lineno}: non-integer size field") from e
            if num_samples < 0 or sample_rate <= 0:
                raise CorruptHeaderError(f"{path}:{lineno}: bad sizes ({num_samples}, {sample_rate})")
            records.append(
                UtteranceRecord(
                    utt_id=utt_id,
                    speaker_id=speaker_id,
                    wav_path=str((base / rel).resolve()),
                    num_samples=num_samples,
                    sample_rate_hz=sample_rate,
                )
            )
    return records
