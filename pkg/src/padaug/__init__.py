"""Silence-padding augmentation for speaker verification, with a
self-contained evaluation pipeline: WAV I/O, the padding augmentation,
test-set builders, log-Mel features, an energy VAD, a tiny trainable
embedding model, EER/minDCF scoring, and a synthetic corpus generator.
"""

from .audio_io import Waveform, read_wav, write_wav
from .augment import (
    AugmentedUtterance,
    PadAugConfig,
    PaddingLayout,
    pad_aug_batch,
    pad_aug_utterance,
)
from .errors import PadAugError
from .features import FbankConfig, FeatureMatrix, cmn, fbank
from .metrics import DetMetrics, Trial, cosine_score, det_metrics, eer, min_dcf
from .model import ToyModel, ToyModelConfig, forward, train
from .synth import build_corpus, make_speaker, synth_utterance
from .testset import TestVariant, build_testset
from .vad import SpeechMask, VadConfig, detect, drop_silence

__version__ = "0.1.0"

__all__ = [
    "AugmentedUtterance",
    "DetMetrics",
    "FbankConfig",
    "FeatureMatrix",
    "PadAugConfig",
    "PadAugError",
    "PaddingLayout",
    "SpeechMask",
    "TestVariant",
    "ToyModel",
    "ToyModelConfig",
    "Trial",
    "VadConfig",
    "Waveform",
    "build_corpus",
    "build_testset",
    "cmn",
    "cosine_score",
    "det_metrics",
    "detect",
    "drop_silence",
    "eer",
    "fbank",
    "forward",
    "make_speaker",
    "min_dcf",
    "pad_aug_batch",
    "pad_aug_utterance",
    "read_wav",
    "synth_utterance",
    "train",
    "write_wav",
]
