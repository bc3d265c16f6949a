"""Cosine trial scoring, EER, and normalized minimum detection cost.

Acceptance convention throughout: a trial is accepted when its score is
>= the threshold (ties accept). FRR(t) is the fraction of target scores
strictly below t; FAR(t) the fraction of non-target scores >= t. Both
metrics sweep the observed scores as candidate thresholds, plus one
sentinel above the maximum for the reject-everything operating point.

EER is read off the FRR/FAR crossing with linear interpolation between
the two adjacent operating points (no convex-hull smoothing). minDCF is
the exact minimum over the swept thresholds, normalized by
min(c_miss*p_target, c_fa*(1-p_target)) so a system that always rejects
(or always accepts) scores 1.0.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateTrialSetError,
    DimMismatchError,
    InvalidConfigError,
    InvalidLabelError,
    MissingEmbeddingError,
    ZeroNormError,
)


@dataclass(frozen=True)
class Trial:
    enroll_id: str
    test_id: str
    is_target: bool


@dataclass(frozen=True)
class ScoreRecord:
    trial: Trial
    score: float


@dataclass(frozen=True)
class DetMetrics:
    eer: float
    eer_threshold: float
    min_dcf: float
    dcf_threshold: float


def cosine_score(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimMismatchError(f"embedding shapes differ: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine undefined for zero-norm embedding")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _split_scores(records):
    targets = np.sort([r.score for r in records if r.trial.is_target])
    nons = np.sort([r.score for r in records if not r.trial.is_target])
    if len(targets) == 0 or len(nons) == 0:
        raise DegenerateTrialSetError(f"need both trial kinds, got {len(targets)} target / {len(nons)} non-target")
    if not (np.all(np.isfinite(targets)) and np.all(np.isfinite(nons))):
        raise InvalidConfigError("non-finite score in trial set")
    return targets, nons


def _rates(targets, nons, thresholds):
    frr = np.searchsorted(targets, thresholds, side="left") / len(targets)
    far = (len(nons) - np.searchsorted(nons, thresholds, side="left")) / len(nons)
    return frr, far


def _thresholds(targets, nons):
    all_scores = np.concatenate([targets, nons])
    return np.concatenate([np.unique(all_scores), [all_scores.max() + 1.0]])


def eer(records) -> tuple:
    """(eer, threshold) at the interpolated FRR/FAR crossing."""
    targets, nons = _split_scores(records)
    thr = _thresholds(targets, nons)
    frr, far = _rates(targets, nons, thr)
    diff = frr - far
    # diff starts at -1 (threshold <= every score) and ends at +1 (sentinel),
    # so the first nonnegative index always has a predecessor.
    i = int(np.argmax(diff >= 0.0))
    if diff[i] == 0.0:
        return float(frr[i]), float(thr[i])
    u = (far[i - 1] - frr[i - 1]) / ((frr[i] - frr[i - 1]) - (far[i] - far[i - 1]))
    value = frr[i - 1] + u * (frr[i] - frr[i - 1])
    return float(value), float(thr[i - 1] + u * (thr[i] - thr[i - 1]))


def min_dcf(records, p_target: float = 0.01, c_miss: float = 1.0, c_fa: float = 1.0) -> tuple:
    """(normalized minDCF, threshold) over the observed thresholds."""
    if not 0.0 < p_target < 1.0 or c_miss <= 0.0 or c_fa <= 0.0:
        raise InvalidConfigError("need 0 < p_target < 1 and positive costs")
    targets, nons = _split_scores(records)
    thr = _thresholds(targets, nons)
    p_miss, p_fa = _rates(targets, nons, thr)
    dcf = c_miss * p_target * p_miss + c_fa * (1.0 - p_target) * p_fa
    i = int(np.argmin(dcf))
    return float(dcf[i] / min(c_miss * p_target, c_fa * (1.0 - p_target))), float(thr[i])


def det_metrics(records, p_target: float = 0.01, c_miss: float = 1.0, c_fa: float = 1.0) -> DetMetrics:
    e, et = eer(records)
    d, dt = min_dcf(records, p_target=p_target, c_miss=c_miss, c_fa=c_fa)
    return DetMetrics(eer=e, eer_threshold=et, min_dcf=d, dcf_threshold=dt)


def score_trials(trials, store) -> list:
    """Cosine-score each trial against an utt_id -> embedding mapping."""
    out = []
    for t in trials:
        for utt in (t.enroll_id, t.test_id):
            if utt not in store:
                raise MissingEmbeddingError(f"no embedding for {utt!r}")
        out.append(ScoreRecord(trial=t, score=cosine_score(store[t.enroll_id], store[t.test_id])))
    return out


# ---------------------------------------------------------------------------
# Text formats. Trials: "label enroll_id test_id", label 1 = target.
# Scores: "enroll_id test_id score" at 6 decimals.
# Report: TSV "testset eer min_dcf eer_threshold dcf_threshold".


def write_trials(trials, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for t in trials:
            f.write(f"{int(t.is_target)} {t.enroll_id} {t.test_id}\n")


def read_trials(path):
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise InvalidLabelError(f"{path}:{lineno}: expected 'label enroll test'")
            label, enroll, test = parts
            if label not in ("0", "1"):
                raise InvalidLabelError(f"{path}:{lineno}: label must be 0 or 1, got {label!r}")
            out.append(Trial(enroll_id=enroll, test_id=test, is_target=label == "1"))
    return out


def write_scores(records, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(f"{r.trial.enroll_id} {r.trial.test_id} {r.score:.6f}\n")


def read_scores(path, trials):
    """Join a score file against its trial list by (enroll, test) pair."""
    table = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise InvalidLabelError(f"{path}:{lineno}: expected 'enroll test score'")
            table[(parts[0], parts[1])] = float(parts[2])
    out = []
    for t in trials:
        key = (t.enroll_id, t.test_id)
        if key not in table:
            raise MissingEmbeddingError(f"no score for trial {key}")
        out.append(ScoreRecord(trial=t, score=table[key]))
    return out


def format_report(rows) -> str:
    """rows: (name, DetMetrics) pairs -> TSV with a header line."""
    lines = ["testset\teer\tmin_dcf\teer_threshold\tdcf_threshold"]
    for name, m in rows:
        lines.append(f"{name}\t{m.eer:.6f}\t{m.min_dcf:.6f}\t{m.eer_threshold:.6f}\t{m.dcf_threshold:.6f}")
    return "\n".join(lines) + "\n"
